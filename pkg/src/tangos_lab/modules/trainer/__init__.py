"""
Модуль обучения: Adam, ранняя остановка, кросс-валидация и сетки гиперпараметров
"""

from .trainer_models import OptimizerState, TrainConfig, EpochRecord, FitResult, CrossValidationResult
from .optimizer import adam_step, adam_update
from .module import fit, refit, evaluate, build_model, TrainerModule
from .cross_validation import cross_validate
from .grids import protocol_grid, method_points, known_methods, describe_point, LEARNING_RATES
from .config import DEFAULT_TRAIN_CONFIG
from .profiling import profile_pair_counts, DEFAULT_PAIR_COUNTS

__all__ = [
    'OptimizerState',
    'TrainConfig',
    'EpochRecord',
    'FitResult',
    'CrossValidationResult',
    'adam_step',
    'adam_update',
    'fit',
    'refit',
    'evaluate',
    'build_model',
    'TrainerModule',
    'cross_validate',
    'protocol_grid',
    'method_points',
    'known_methods',
    'describe_point',
    'LEARNING_RATES',
    'DEFAULT_TRAIN_CONFIG',
    'profile_pair_counts',
    'DEFAULT_PAIR_COUNTS'
]
