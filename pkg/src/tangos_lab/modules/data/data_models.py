# modules/data/data_models.py
"""
Модели данных для табличных датасетов
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

MISSING_LEVEL = "__missing__"


class ColumnKind(Enum):
    """Тип колонки"""
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    TARGET = "target"


class TaskType(Enum):
    """Тип задачи"""
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


@dataclass
class ColumnSchema:
    """Описание колонки исходной таблицы"""
    name: str
    kind: ColumnKind
    log_transform: bool = False
    category_levels: List[str] = field(default_factory=list)  # только categorical, по train

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'kind': self.kind.value,
            'log_transform': self.log_transform,
            'category_levels': list(self.category_levels)
        }


@dataclass
class RawTable:
    """Сырые строки CSV (все значения - строки, пропуски - None)"""
    frame: pd.DataFrame
    schema: List[ColumnSchema]
    source: Optional[str] = None
    task: TaskType = TaskType.REGRESSION
    classes: Optional[List[str]] = None

    @property
    def n_rows(self) -> int:
        return len(self.frame)


@dataclass
class StandardizationStats:
    """Статистики предобработки, посчитанные только по train-строкам"""
    mean: np.ndarray                       # по числовым признакам
    sd: np.ndarray                         # > 0, константные колонки -> 1
    medians: Dict[str, float] = field(default_factory=dict)
    category_levels: Dict[str, List[str]] = field(default_factory=dict)
    numeric_columns: List[str] = field(default_factory=list)
    target_mean: float = 0.0
    target_sd: float = 1.0
    train_indices: Optional[np.ndarray] = None


@dataclass
class Dataset:
    """Закодированный датасет: X (N × d_X), y (N)"""
    X: np.ndarray
    y: np.ndarray
    task: TaskType
    schema: List[ColumnSchema]
    n_classes: int = 0
    feature_names: List[str] = field(default_factory=list)
    classes: Optional[List[str]] = None
    raw: Optional[RawTable] = None                # для повторной предобработки по фолдам
    stats: Optional[StandardizationStats] = None

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def output_width(self) -> int:
        return self.n_classes if self.task == TaskType.CLASSIFICATION else 1


@dataclass
class SplitPlan:
    """Разбиение: 20% тест + 5 фолдов кросс-валидации"""
    test_indices: np.ndarray
    cv_folds: List[np.ndarray]
    seed: int

    @property
    def cv_indices(self) -> np.ndarray:
        """Все строки кросс-валидации (80%) в порядке фолдов"""
        return np.concatenate(self.cv_folds)

    def fold(self, k: int):
        """(train, validation) индексы фолда k"""
        train = np.concatenate([f for i, f in enumerate(self.cv_folds) if i != k])
        return train, self.cv_folds[k]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seed': self.seed,
            'test_indices': self.test_indices.tolist(),
            'cv_folds': [f.tolist() for f in self.cv_folds]
        }
