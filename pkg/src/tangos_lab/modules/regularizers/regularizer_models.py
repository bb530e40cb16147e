# modules/regularizers/regularizer_models.py
"""
Конфигурации регуляризаторов и параметры batch norm
"""
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Union

import numpy as np

from ...core.errors import ConfigurationError

ALL_PAIRS = "ALL"


@dataclass
class TangosConfig:
    """Настройки TANGOS: специализация (λ1) и ортогонализация (λ2)"""

    lambda1: float = 0.0
    lambda2: float = 0.0

    # Число пар нейронов на объект; "ALL" - все C пар
    pairs_M: Union[int, str] = 50

    # Добавка к произведению норм в косинусной близости
    epsilon: float = 1e-12

    def __post_init__(self):
        if self.lambda1 < 0:
            raise ConfigurationError(f"tangos.lambda1: {self.lambda1} < 0")
        if self.lambda2 < 0:
            raise ConfigurationError(f"tangos.lambda2: {self.lambda2} < 0")
        if self.epsilon <= 0:
            raise ConfigurationError(f"tangos.epsilon: {self.epsilon} <= 0")
        if isinstance(self.pairs_M, str):
            if self.pairs_M.upper() != ALL_PAIRS:
                raise ConfigurationError(f"tangos.pairs_M: ожидается число или 'ALL', получено '{self.pairs_M}'")
            self.pairs_M = ALL_PAIRS
        elif int(self.pairs_M) < 1:
            raise ConfigurationError(f"tangos.pairs_M: {self.pairs_M} < 1")

    @property
    def active(self) -> bool:
        return self.lambda1 > 0 or self.lambda2 > 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class BaselineRegConfig:
    """Настройки базовых регуляризаторов"""

    # Штрафы на веса (все слои, веса и смещения)
    l1_lambda: float = 0.0
    l2_lambda: float = 0.0

    # Dropout после каждого скрытого слоя
    dropout_p: float = 0.0

    # Аддитивный гауссов шум на входе
    input_noise_sd: float = 0.0

    # MixUp
    mixup_enabled: bool = False
    mixup_alpha: float = 0.2

    # Batch norm после каждого скрытого линейного слоя
    batchnorm_enabled: bool = False

    def __post_init__(self):
        if self.l1_lambda < 0:
            raise ConfigurationError(f"baselines.l1_lambda: {self.l1_lambda} < 0")
        if self.l2_lambda < 0:
            raise ConfigurationError(f"baselines.l2_lambda: {self.l2_lambda} < 0")
        if not 0 <= self.dropout_p < 1:
            raise ConfigurationError(f"baselines.dropout_p: {self.dropout_p} вне [0, 1)")
        if self.input_noise_sd < 0:
            raise ConfigurationError(f"baselines.input_noise_sd: {self.input_noise_sd} < 0")
        if self.mixup_alpha <= 0:
            raise ConfigurationError(f"baselines.mixup_alpha: {self.mixup_alpha} <= 0")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class BatchNormParams:
    """Параметры batch norm одного скрытого слоя"""
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    eps: float = 1e-5
    momentum: float = 0.9   # доля старого значения running-статистик

    @classmethod
    def identity(cls, width: int) -> 'BatchNormParams':
        return cls(np.ones(width), np.zeros(width), np.zeros(width), np.ones(width))

    def copy(self) -> 'BatchNormParams':
        return BatchNormParams(self.gamma.copy(), self.beta.copy(), self.running_mean.copy(),
                               self.running_var.copy(), self.eps, self.momentum)


@dataclass
class BatchNormCache:
    """Промежуточные значения batch norm для обратного прохода"""
    x_hat: np.ndarray
    inv_std: np.ndarray
    scale: np.ndarray                    # gamma * inv_std
    mean: np.ndarray
    var: np.ndarray
    training: bool
    batch_size: int = 0


DEFAULT_TANGOS = TangosConfig()
DEFAULT_BASELINES = BaselineRegConfig()


def tangos_from_dict(values: Optional[Dict[str, Any]]) -> TangosConfig:
    values = dict(values or {})
    unknown = set(values) - set(TangosConfig.__dataclass_fields__)
    if unknown:
        raise ConfigurationError(f"tangos: неизвестные поля {sorted(unknown)}")
    return TangosConfig(**values)


def baselines_from_dict(values: Optional[Dict[str, Any]]) -> BaselineRegConfig:
    values = dict(values or {})
    unknown = set(values) - set(BaselineRegConfig.__dataclass_fields__)
    if unknown:
        raise ConfigurationError(f"baselines: неизвестные поля {sorted(unknown)}")
    return BaselineRegConfig(**values)
