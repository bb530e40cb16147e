# modules/trainer/optimizer.py
"""
Adam с коррекцией смещения моментов
"""
from typing import List, Tuple

import numpy as np

from ...core.errors import ShapeError, TrainingError
from ..model import MlpModel, ParamGrads
from .trainer_models import OptimizerState


def adam_update(params: List[np.ndarray], grads: List[np.ndarray], state: OptimizerState):
    """
    Шаг Adam на месте

    θ ← θ − η·m̂/(√v̂ + eps), m̂ = m/(1−β1^t), v̂ = v/(1−β2^t)
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError(f"adam: {len(params)} параметров, {len(grads)} градиентов, {len(state.m)} моментов")
    for grad in grads:
        if not np.all(np.isfinite(grad)):
            raise TrainingError(f"Нечисловой градиент на шаге {state.step + 1}")

    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    for param, grad, m, v in zip(params, grads, state.m, state.v):
        if param.shape != grad.shape:
            raise ShapeError(f"adam: форма градиента {grad.shape} != {param.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        param -= state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.eps)


def adam_step(state: OptimizerState, model: MlpModel,
              grads: ParamGrads) -> Tuple[MlpModel, OptimizerState]:
    """Обновляет параметры модели на месте и возвращает (модель, состояние)"""
    adam_update(model.parameters(), grads.arrays(), state)
    return model, state
