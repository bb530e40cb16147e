# modules/diagnostics/attribution_stats.py
"""
Статистики атрибуций латентного слоя на отложенном наборе
"""
import logging
from typing import Any, Dict, Optional, Union

import numpy as np

from ...core.errors import ConfigurationError, DomainError
from ..model import MlpModel, jacobians_for
from ..numeric import SeededRng, as_matrix
from ..regularizers import ALL_PAIRS, orth_loss_full, orth_loss_subsampled, spec_loss
from .diagnostics_models import AttributionStats

logger = logging.getLogger(__name__)


def attribution_stats(model: MlpModel, X_eval,
                      pairs_M: Union[int, str] = ALL_PAIRS,
                      rng: Optional[SeededRng] = None) -> AttributionStats:
    """
    L_spec и L_orth модели на наборе объектов (инференс, без dropout)

    Args:
        model: обученная сеть
        X_eval: объекты × d_X, непустой набор
        pairs_M: ALL - точный L_orth по всем парам, число - оценка L′_orth
        rng: поток выбора пар (нужен только для числового pairs_M)

    Returns:
        AttributionStats; при d_H < 2 L_orth = nan
    """
    X = as_matrix(X_eval, "X_eval")
    if X.shape[0] == 0:
        raise DomainError("attribution_stats: пустой набор объектов")

    J = jacobians_for(model, X)
    L_spec = spec_loss(J)
    if model.d_H < 2:
        L_orth = float('nan')
    elif pairs_M == ALL_PAIRS:
        L_orth = orth_loss_full(J)
    else:
        if rng is None:
            raise ConfigurationError("attribution_stats: для pairs_M без ALL нужен rng")
        L_orth = orth_loss_subsampled(J, pairs_M, rng)

    return AttributionStats(L_spec=L_spec, L_orth=L_orth, n_samples=X.shape[0])


def attribution_monitor(X_eval):
    """Монитор для fit: L_spec, L_orth и n_samples на фиксированном наборе"""
    X = as_matrix(X_eval, "X_eval")

    def monitor(epoch: int, model: MlpModel) -> Dict[str, Any]:
        return attribution_stats(model, X).to_dict()

    return monitor


def attribution_stats_per_sample(model: MlpModel, X_eval) -> np.ndarray:
    """(L_spec, L_orth) каждого объекта отдельно, массив n × 2"""
    J = jacobians_for(model, as_matrix(X_eval, "X_eval"))
    rows = []
    for sample in J:
        orth = orth_loss_full(sample) if model.d_H >= 2 else float('nan')
        rows.append((spec_loss(sample), orth))
    return np.asarray(rows, dtype=np.float64)
