# modules/trainer/profiling.py
"""
Стоимость обучения TANGOS в зависимости от числа пар нейронов на объект
"""
import logging
import time
from dataclasses import replace
from typing import Sequence

import numpy as np
from scipy.stats import linregress

from ...core.errors import ConfigurationError
from ..data import Dataset
from ..diagnostics import PairTimingProfile
from ..regularizers import n_pairs
from .module import fit
from .trainer_models import TrainConfig

logger = logging.getLogger(__name__)

DEFAULT_PAIR_COUNTS = (10, 50, 100, 200)


def profile_pair_counts(dataset: Dataset, train_idx, config: TrainConfig,
                        pair_counts: Sequence[int] = DEFAULT_PAIR_COUNTS,
                        epochs: int = 1, repeats: int = 3) -> PairTimingProfile:
    """
    Время одной эпохи обучения для каждого pairs_M на фиксированной сети

    Для каждого pairs_M берется минимум по repeats прогонам (меньше шума),
    затем МНК-прямая seconds ~ pairs_M и ее R².

    Args:
        dataset: датасет
        train_idx: строки обучения
        config: базовая конфигурация; λ2 = 0 заменяется на 1
        pair_counts: значения pairs_M (каждое <= C слоя атрибуции)
        epochs: эпох на прогон
        repeats: число повторов
    """
    if len(pair_counts) < 2:
        raise ConfigurationError("profile_pair_counts: нужно минимум два значения pairs_M")
    if epochs < 1 or repeats < 1:
        raise ConfigurationError("profile_pair_counts: epochs и repeats должны быть >= 1")

    d_H = config.hidden_layout(dataset.n_features)[-1 if config.attribution_layer is None
                                                   else config.attribution_layer]
    total = n_pairs(d_H)
    if max(pair_counts) > total:
        raise ConfigurationError(f"pairs_M={max(pair_counts)} больше числа пар C={total} (d_H={d_H})")

    lambda2 = config.tangos.lambda2 or 1.0
    seconds = []
    for count in pair_counts:
        # eval_every > epochs: статистики атрибуций не входят в замер
        point = replace(config, eval_every=epochs + 1,
                        tangos=replace(config.tangos, lambda2=lambda2, pairs_M=int(count)))
        timings = []
        for _ in range(repeats):
            started = time.perf_counter()
            fit(dataset, train_idx, None, point, fixed_epochs=epochs)
            timings.append((time.perf_counter() - started) / epochs)
        seconds.append(min(timings))
        logger.info(f"pairs_M={count}: {seconds[-1]:.4f} s/эпоха")

    fit_line = linregress(np.asarray(pair_counts, dtype=np.float64), np.asarray(seconds))
    profile = PairTimingProfile(
        pair_counts=[int(c) for c in pair_counts],
        seconds=seconds,
        slope=float(fit_line.slope),
        intercept=float(fit_line.intercept),
        r_squared=float(fit_line.rvalue ** 2),
        details={'d_H': d_H, 'pairs_total': total, 'epochs': epochs, 'repeats': repeats}
    )
    logger.info(f"Линейная зависимость от pairs_M: R²={profile.r_squared:.3f}")
    return profile
