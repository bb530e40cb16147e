# modules/trainer/trainer_models.py
"""
Модели данных обучения: конфигурация, состояние Adam, результаты
"""
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from ...core.errors import ConfigurationError
from ..model import MlpModel, OutputConstraint
from ..regularizers import BaselineRegConfig, TangosConfig
from ..regularizers.regularizer_models import baselines_from_dict, tangos_from_dict

HISTORY_COLUMNS = ['epoch', 'train_loss', 'val_loss', 'L_spec', 'L_orth']


@dataclass
class OptimizerState:
    """Моменты Adam по каждому параметру"""
    learning_rate: float
    m: List[np.ndarray]
    v: List[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_model(cls, model: MlpModel, learning_rate: float) -> 'OptimizerState':
        params = model.parameters()
        return cls(
            learning_rate=learning_rate,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params]
        )


@dataclass
class TrainConfig:
    """Настройки одного обучения"""

    # Длительность и ранняя остановка
    max_epochs: int = 200
    patience: int = 30

    # Оптимизатор
    learning_rate: float = 0.001
    batch_size: int = 64

    # Архитектура: None -> два скрытых слоя ширины d_X + 1
    hidden_widths: Optional[List[int]] = None
    attribution_layer: Optional[int] = None
    output_constraint: OutputConstraint = OutputConstraint.NONE

    # Регуляризация
    tangos: TangosConfig = field(default_factory=TangosConfig)
    baselines: BaselineRegConfig = field(default_factory=BaselineRegConfig)

    seed: int = 0

    # Частота мониторов (эпохи)
    eval_every: int = 1

    # Доля train-строк (берутся первые по порядку)
    train_fraction: float = 1.0

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ConfigurationError(f"train.max_epochs: {self.max_epochs} < 1")
        if not 1 <= self.patience <= self.max_epochs:
            raise ConfigurationError(f"train.patience: {self.patience} вне [1, max_epochs={self.max_epochs}]")
        if self.learning_rate <= 0:
            raise ConfigurationError(f"train.learning_rate: {self.learning_rate} <= 0")
        if self.batch_size < 1:
            raise ConfigurationError(f"train.batch_size: {self.batch_size} < 1")
        if self.hidden_widths is not None:
            if len(self.hidden_widths) < 1 or any(int(w) < 1 for w in self.hidden_widths):
                raise ConfigurationError(f"train.hidden_widths: некорректные ширины {self.hidden_widths}")
        if self.eval_every < 1:
            raise ConfigurationError(f"train.eval_every: {self.eval_every} < 1")
        if not 0 < self.train_fraction <= 1:
            raise ConfigurationError(f"train.train_fraction: {self.train_fraction} вне (0, 1]")
        if isinstance(self.output_constraint, str):
            self.output_constraint = OutputConstraint(self.output_constraint)

    def hidden_layout(self, d_X: int) -> List[int]:
        if self.hidden_widths is not None:
            return [int(w) for w in self.hidden_widths]
        return [d_X + 1, d_X + 1]

    def with_overrides(self, **changes) -> 'TrainConfig':
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        values['output_constraint'] = self.output_constraint.value
        return values

    @classmethod
    def from_dict(cls, values: Optional[Dict[str, Any]], base: Optional['TrainConfig'] = None) -> 'TrainConfig':
        """Конфигурация из словаря; вложенные tangos/baselines дополняют base"""
        base = base or cls()
        values = dict(values or {})
        unknown = set(values) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"train: неизвестные поля {sorted(unknown)}")
        if 'tangos' in values:
            values['tangos'] = tangos_from_dict({**base.tangos.to_dict(), **values['tangos']})
        if 'baselines' in values:
            values['baselines'] = baselines_from_dict({**base.baselines.to_dict(), **values['baselines']})
        try:
            return replace(base, **values)
        except ConfigurationError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"train: {e}") from e


@dataclass
class EpochRecord:
    """Одна эпоха истории обучения"""
    epoch: int
    train_loss: float
    val_loss: float
    L_spec: float
    L_orth: float


@dataclass
class FitResult:
    """Результат fit: лучшая модель и история"""
    model: MlpModel
    best_val_loss: float
    best_epoch: int
    history: List[EpochRecord] = field(default_factory=list)
    monitors: List[Dict[str, Any]] = field(default_factory=list)
    stopped_early: bool = False
    seconds: float = 0.0

    def history_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.history], columns=HISTORY_COLUMNS)


@dataclass
class CrossValidationResult:
    """Результат выбора по сетке и финальной оценки на тесте"""
    selected_index: int
    selected: TrainConfig
    grid_scores: List[float]
    fold_best_epochs: List[int]
    final_epochs: int
    test_metric: float
    final_model: MlpModel
    seconds: float = 0.0
