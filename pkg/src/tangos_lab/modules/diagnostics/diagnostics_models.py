# modules/diagnostics/diagnostics_models.py
"""
Модели данных диагностики: статистики атрибуций, разложение ансамбля,
таблицы рангов и результаты теста Вилкоксона
"""
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from ...core.errors import ConfigurationError
from ..model import MlpModel, OutputConstraint


@dataclass
class AttributionStats:
    """Точные L_spec и L_orth на наборе объектов (L_orth = nan при d_H < 2)"""
    L_spec: float
    L_orth: float
    n_samples: int = 0

    @property
    def orth_defined(self) -> bool:
        return not math.isnan(self.L_orth)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class DecompositionRecord:
    """
    Err, Err̄ и Div, усредненные по набору объектов

    identity_gap - max по объектам |Err − (Err̄ − Div)|
    """
    err: float
    err_bar: float
    div: float
    n_samples: int = 0
    identity_gap: float = 0.0
    epoch: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SimplexOutputHead:
    """Выходной слой ансамбля: свободные φ и веса α = softmax(φ)"""
    phi: np.ndarray

    @classmethod
    def from_model(cls, model: MlpModel) -> 'SimplexOutputHead':
        if model.output_constraint != OutputConstraint.SIMPLEX:
            raise ConfigurationError("Разложение требует модели с simplex-выходом")
        return cls(phi=model.layers[-1].weight[0].copy())

    @property
    def alpha(self) -> np.ndarray:
        shifted = np.exp(self.phi - self.phi.max())
        return shifted / shifted.sum()

    @property
    def size(self) -> int:
        return self.phi.shape[0]


@dataclass
class RankTable:
    """Метрики и ранги (датасеты × методы), средний ранг по методам"""
    metrics: pd.DataFrame
    ranks: pd.DataFrame
    average_ranks: pd.Series

    @property
    def datasets(self) -> List[str]:
        return list(self.metrics.index)

    @property
    def methods(self) -> List[str]:
        return list(self.metrics.columns)

    def to_frame(self) -> pd.DataFrame:
        """Длинная таблица: dataset, method, metric, rank + строки 'avg_rank'"""
        long = self.metrics.stack().rename('metric').to_frame()
        long['rank'] = self.ranks.stack()
        long = long.reset_index()
        long.columns = ['dataset', 'method', 'metric', 'rank']
        average = pd.DataFrame({
            'dataset': 'avg_rank',
            'method': self.average_ranks.index,
            'metric': np.nan,
            'rank': self.average_ranks.values
        })
        return pd.concat([long, average], ignore_index=True)


@dataclass
class WilcoxonResult:
    """Односторонний знаково-ранговый тест Вилкоксона"""
    statistic: float            # T+ - сумма рангов положительных разностей a − b
    p_value: float
    n_nonzero: int
    n_zero: int
    method: str                 # exact | approx
    alternative: str            # less | greater
    z: Optional[float] = None


@dataclass
class PairTimingProfile:
    """Время эпохи обучения TANGOS в зависимости от pairs_M и МНК-прямая"""
    pair_counts: List[int]
    seconds: List[float]
    slope: float = 0.0
    intercept: float = 0.0
    r_squared: float = 0.0
    details: Dict[str, Any] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({'pairs_M': self.pair_counts, 'seconds': self.seconds})
        frame['fitted'] = self.intercept + self.slope * frame['pairs_M']
        return frame
