# modules/data/splits.py
"""
Разбиения train/validation/test и мини-батчи
"""
import logging
from typing import List, Tuple

import numpy as np

from ...core.errors import IterationError, SplitError
from ..numeric import SeededRng
from .data_models import Dataset, SplitPlan

logger = logging.getLogger(__name__)

TEST_FRACTION = 0.2
N_FOLDS = 5
MIN_ROWS = 10


def make_split(n: int, seed: int) -> SplitPlan:
    """
    20% тест + 5 фолдов по оставшимся 80%

    Args:
        n: число строк
        seed: сид перемешивания

    Returns:
        SplitPlan, детерминированный по seed
    """
    if n < MIN_ROWS:
        raise SplitError(f"make_split: нужно минимум {MIN_ROWS} строк, получено {n}")

    order = SeededRng(seed).split('split').permutation(n).astype(np.int64)
    n_test = int(np.floor(TEST_FRACTION * n + 0.5))
    test = np.sort(order[:n_test])
    folds = [np.sort(f) for f in np.array_split(order[n_test:], N_FOLDS)]

    logger.debug(f"Разбиение n={n}: тест {n_test}, фолды {[len(f) for f in folds]}")
    return SplitPlan(test_indices=test, cv_folds=folds, seed=int(seed))


def minibatch_indices(indices, batch_size: int, rng: SeededRng,
                      drop_single: bool = False) -> List[np.ndarray]:
    """
    Индексы мини-батчей одной эпохи (один перемешанный проход)

    Args:
        indices: строки эпохи
        batch_size: размер батча, последний может быть короче
        rng: поток перемешивания
        drop_single: отбросить хвостовой батч из одной строки (batch norm)
    """
    indices = np.asarray(indices, dtype=np.int64)
    if len(indices) == 0:
        raise IterationError("minibatches: пустой набор индексов")
    if batch_size < 1:
        raise IterationError(f"minibatches: batch_size={batch_size} < 1")

    shuffled = indices[rng.permutation(len(indices))]
    batches = [shuffled[i:i + batch_size] for i in range(0, len(shuffled), batch_size)]
    if drop_single and len(batches) > 1 and len(batches[-1]) == 1:
        batches.pop()
    return batches


def minibatches(dataset: Dataset, indices, batch_size: int,
                rng: SeededRng) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Пары (X_batch, y_batch) одной эпохи"""
    return [(dataset.X[batch], dataset.y[batch])
            for batch in minibatch_indices(indices, batch_size, rng)]
