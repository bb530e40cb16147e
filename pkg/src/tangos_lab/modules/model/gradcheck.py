# modules/model/gradcheck.py
"""
Оракул конечных разностей и защита от изломов ReLU
"""
import logging
from typing import Callable, Tuple

import numpy as np

from ...core.errors import DomainError, OracleError
from .mlp import min_abs_preactivation
from .model_models import MlpModel, ParamGrads

logger = logging.getLogger(__name__)

KINK_TOLERANCE = 1e-3


def fd_oracle(model: MlpModel, fn: Callable[[MlpModel], float], eps: float = 1e-5) -> ParamGrads:
    """
    Центральные разности (f(θ+εe) − f(θ−εe)) / 2ε по каждому параметру

    Параметры модели временно меняются на месте и восстанавливаются.
    """
    if eps <= 0:
        raise DomainError(f"fd_oracle: eps={eps} <= 0")

    grads = model.zero_grads()
    for param, grad in zip(model.parameters(), grads.arrays()):
        for index in np.ndindex(param.shape):
            original = param[index]
            param[index] = original + eps
            upper = fn(model)
            param[index] = original - eps
            lower = fn(model)
            param[index] = original
            if not (np.isfinite(upper) and np.isfinite(lower)):
                raise OracleError(f"fd_oracle: нечисловое значение функции в {index}")
            grad[index] = (upper - lower) / (2.0 * eps)
    return grads


def kink_free(model: MlpModel, X, tol: float = KINK_TOLERANCE) -> bool:
    """Все пред-активации ReLU дальше tol от нуля"""
    return min_abs_preactivation(model, X) > tol


def sample_kink_free(make_case: Callable[[int], Tuple[MlpModel, np.ndarray]],
                     tol: float = KINK_TOLERANCE, max_tries: int = 200):
    """
    Перебирает случайные точки, пока не найдется точка без изломов

    Args:
        make_case: attempt -> (model, X)
    """
    for attempt in range(max_tries):
        model, X = make_case(attempt)
        if kink_free(model, X, tol):
            return model, X
    raise OracleError(f"Не найдена точка без изломов ReLU за {max_tries} попыток")
