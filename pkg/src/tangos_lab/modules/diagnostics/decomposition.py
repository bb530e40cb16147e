# modules/diagnostics/decomposition.py
"""
Разложение ошибки ансамбля латентных нейронов: Err = Err̄ − Div.

Каждый нейрон слоя атрибуции T_k - слабый ученик, выход сети f = Σ α_k T_k
с весами α на симплексе. Для каждого объекта:
    Err  = (f − y)²
    Err̄  = Σ α_k (T_k − y)²
    Div  = Σ α_k (T_k − f)²
"""
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ...core.errors import DomainError, ShapeError, UnsupportedTaskError
from ..data.data_models import TaskType
from ..model import MlpModel, latent_activations
from ..numeric import as_matrix, matmul
from .diagnostics_models import DecompositionRecord, SimplexOutputHead

logger = logging.getLogger(__name__)


def decomposition_terms(alpha, T, y) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Поэлементные Err, Err̄, Div

    Args:
        alpha: веса (d_H,), Σα = 1 (знак не важен)
        T: выходы учеников, объекты × d_H
        y: цели (объекты,)

    Returns:
        три вектора длины n
    """
    alpha = np.asarray(alpha, dtype=np.float64).reshape(-1)
    T = as_matrix(T, "T")
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if T.shape[1] != alpha.shape[0]:
        raise ShapeError(f"decomposition: T имеет {T.shape[1]} столбцов, весов {alpha.shape[0]}")
    if T.shape[0] != y.shape[0]:
        raise ShapeError(f"decomposition: {T.shape[0]} строк T и {y.shape[0]} целей")

    weights = alpha.reshape(-1, 1)
    f = matmul(T, weights)[:, 0]
    err = (f - y) ** 2
    err_bar = matmul((T - y[:, None]) ** 2, weights)[:, 0]
    div = matmul((T - f[:, None]) ** 2, weights)[:, 0]
    return err, err_bar, div


def decompose_ensemble(model: MlpModel, X_eval, y_eval,
                       task: TaskType = TaskType.REGRESSION,
                       epoch: Optional[int] = None) -> DecompositionRecord:
    """
    Разложение ошибки сети с simplex-выходом на наборе объектов

    Returns:
        DecompositionRecord со средними Err, Err̄, Div и max невязкой тождества
    """
    if task != TaskType.REGRESSION:
        raise UnsupportedTaskError(f"Разложение ансамбля определено только для регрессии, задача {task.value}")
    head = SimplexOutputHead.from_model(model)
    X = as_matrix(X_eval, "X_eval")
    if X.shape[0] == 0:
        raise DomainError("decompose_ensemble: пустой набор объектов")

    T = latent_activations(model, X)
    err, err_bar, div = decomposition_terms(head.alpha, T, y_eval)
    gap = float(np.max(np.abs(err - (err_bar - div))))

    record = DecompositionRecord(
        err=float(err.mean()),
        err_bar=float(err_bar.mean()),
        div=float(div.mean()),
        n_samples=X.shape[0],
        identity_gap=gap,
        epoch=epoch
    )
    logger.debug(f"Разложение (эпоха {epoch}): Err={record.err:.5f}, "
                 f"Err̄={record.err_bar:.5f}, Div={record.div:.5f}, невязка {gap:.2e}")
    return record


def decomposition_monitor(X_eval, y_eval, task: TaskType = TaskType.REGRESSION):
    """Монитор для fit: кривые Err, Err̄, Div по эпохам"""
    if task != TaskType.REGRESSION:
        raise UnsupportedTaskError(f"Разложение ансамбля определено только для регрессии, задача {task.value}")
    X = as_matrix(X_eval, "X_eval")
    y = np.asarray(y_eval, dtype=np.float64)

    def monitor(epoch: int, model: MlpModel) -> Dict[str, Any]:
        return decompose_ensemble(model, X, y, task, epoch=epoch).to_dict()

    return monitor
