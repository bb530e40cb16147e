# modules/trainer/cross_validation.py
"""
Выбор гиперпараметров 5-кратной кросс-валидацией и оценка на отложенном тесте
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ...core.errors import ConfigurationError, TrainingError
from ..data import Dataset, SplitPlan, prepare_fold
from ..numeric import SeededRng
from .module import evaluate, fit, refit
from .trainer_models import CrossValidationResult, FitResult, TrainConfig

logger = logging.getLogger(__name__)


def _fold_config(config: TrainConfig, fold: int) -> TrainConfig:
    return replace(config, seed=SeededRng(config.seed).derive_seed(f"fold{fold}"))


def _run_fold(task: Tuple[int, int, TrainConfig, Dataset, np.ndarray, np.ndarray, np.ndarray]):
    """Одна пара (точка сетки, фолд); расхождение -> None"""
    point, fold, config, dataset, train, val, guard = task
    try:
        return fit(dataset, train, val, _fold_config(config, fold), guard_indices=guard)
    except TrainingError as e:
        logger.warning(f"Точка {point}, фолд {fold}: {e}")
        return None


def cross_validate(dataset: Dataset, split: SplitPlan, grid: Sequence[TrainConfig],
                   jobs: int = 1) -> CrossValidationResult:
    """
    Выбор конфигурации по средней validation-потере и оценка на тесте

    Args:
        dataset: датасет со статистиками по всем строкам CV
        split: разбиение (тест + 5 фолдов)
        grid: точки сетки
        jobs: число потоков для независимых (точка, фолд)

    Returns:
        CrossValidationResult; ничья -> первая точка в порядке сетки
    """
    if not grid:
        raise ConfigurationError("cross_validate: пустая сетка")
    started = time.time()
    n_folds = len(split.cv_folds)

    fold_data = []
    for k in range(n_folds):
        train, val = split.fold(k)
        fold_data.append((prepare_fold(dataset, train), train, val))

    tasks = [
        (point, k, config, fold_data[k][0], fold_data[k][1], fold_data[k][2], split.test_indices)
        for point, config in enumerate(grid) for k in range(n_folds)
    ]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            results: List[Optional[FitResult]] = list(executor.map(_run_fold, tasks))
    else:
        results = [_run_fold(task) for task in tasks]

    scores = []
    for point in range(len(grid)):
        fits = results[point * n_folds:(point + 1) * n_folds]
        if any(f is None for f in fits):
            scores.append(math.inf)
        else:
            scores.append(float(np.mean([f.best_val_loss for f in fits])))

    if all(math.isinf(s) for s in scores):
        raise TrainingError("Все точки сетки разошлись")
    selected = int(np.argmin(scores))
    chosen = results[selected * n_folds:(selected + 1) * n_folds]
    best_epochs = [f.best_epoch for f in chosen]
    final_epochs = max(1, int(round(float(np.mean(best_epochs)))))
    logger.info(f"Выбрана точка {selected} (val={scores[selected]:.5f}), финальное обучение {final_epochs} эпох")

    final_config = replace(grid[selected], seed=SeededRng(grid[selected].seed).derive_seed('final'))
    final = refit(dataset, split.cv_indices, final_config, final_epochs, guard_indices=split.test_indices)
    test_metric = evaluate(final.model, dataset, split.test_indices)

    return CrossValidationResult(
        selected_index=selected,
        selected=grid[selected],
        grid_scores=scores,
        fold_best_epochs=best_epochs,
        final_epochs=final_epochs,
        test_metric=test_metric,
        final_model=final.model,
        seconds=time.time() - started
    )
