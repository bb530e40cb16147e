"""
Регуляризаторы: TANGOS (специализация, ортогонализация) и базовые методы
"""

from .regularizer_models import (
    TangosConfig, BaselineRegConfig, BatchNormParams, BatchNormCache, ALL_PAIRS,
    DEFAULT_TANGOS, DEFAULT_BASELINES
)
from .tangos import (
    spec_loss, pair_correlation, orth_loss_full, orth_loss_subsampled,
    n_pairs, all_pairs, sample_pairs, resolve_pair_count
)
from .baselines import weight_penalty, dropout_mask, apply_dropout, apply_input_noise, apply_mixup
from .batchnorm import batchnorm_forward, batchnorm_backward, update_running_stats

__all__ = [
    'TangosConfig',
    'BaselineRegConfig',
    'BatchNormParams',
    'BatchNormCache',
    'ALL_PAIRS',
    'DEFAULT_TANGOS',
    'DEFAULT_BASELINES',
    'spec_loss',
    'pair_correlation',
    'orth_loss_full',
    'orth_loss_subsampled',
    'n_pairs',
    'all_pairs',
    'sample_pairs',
    'resolve_pair_count',
    'weight_penalty',
    'dropout_mask',
    'apply_dropout',
    'apply_input_noise',
    'apply_mixup',
    'batchnorm_forward',
    'batchnorm_backward',
    'update_running_stats'
]
