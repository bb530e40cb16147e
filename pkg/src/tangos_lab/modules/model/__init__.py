"""
Модуль модели: MLP, якобианы атрибуций, градиенты штрафов, оракул конечных разностей
"""

from .model_models import (
    OutputConstraint, DenseLayer, MlpModel, LayerGrads, ParamGrads,
    LayerTrace, ForwardTrace, AttributionMatrix
)
from .mlp import (
    init_model, forward, task_loss, backward, loss_and_grads, commit_running_stats,
    predict, latent_activations, min_abs_preactivation, check_trace
)
from .attribution import attribution_jacobian, attribution_jacobians, jacobians_for, penalty_value_and_grads
from .gradcheck import fd_oracle, kink_free, sample_kink_free
from .checkpoint import save_checkpoint, load_checkpoint, check_compatible

__all__ = [
    'OutputConstraint',
    'DenseLayer',
    'MlpModel',
    'LayerGrads',
    'ParamGrads',
    'LayerTrace',
    'ForwardTrace',
    'AttributionMatrix',
    'init_model',
    'forward',
    'task_loss',
    'backward',
    'loss_and_grads',
    'commit_running_stats',
    'predict',
    'latent_activations',
    'min_abs_preactivation',
    'check_trace',
    'attribution_jacobian',
    'attribution_jacobians',
    'jacobians_for',
    'penalty_value_and_grads',
    'fd_oracle',
    'kink_free',
    'sample_kink_free',
    'save_checkpoint',
    'load_checkpoint',
    'check_compatible'
]
