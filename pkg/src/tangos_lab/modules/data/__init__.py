"""
Модуль данных: чтение CSV, предобработка, разбиения и мини-батчи
"""

from .data_models import ColumnKind, TaskType, ColumnSchema, RawTable, Dataset, StandardizationStats, SplitPlan
from .loader import load_csv, DatasetRegistry, DatasetEntry
from .preprocessing import preprocess, prepare_fold
from .splits import make_split, minibatches, minibatch_indices

__all__ = [
    'ColumnKind',
    'TaskType',
    'ColumnSchema',
    'RawTable',
    'Dataset',
    'StandardizationStats',
    'SplitPlan',
    'load_csv',
    'DatasetRegistry',
    'DatasetEntry',
    'preprocess',
    'prepare_fold',
    'make_split',
    'minibatches',
    'minibatch_indices'
]
