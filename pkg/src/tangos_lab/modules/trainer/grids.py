# modules/trainer/grids.py
"""
Сетки гиперпараметров протокола сравнения регуляризаторов.

Каждая сетка - декартово произведение сетки скорости обучения (внешний цикл)
и сетки метода. Совместные методы "TANGOS+X" - произведение обеих сеток.
"""
import itertools
import logging
from dataclasses import replace
from typing import Any, Dict, List, Optional

from ...core.errors import ConfigurationError
from ..regularizers import BaselineRegConfig, TangosConfig
from .trainer_models import TrainConfig

logger = logging.getLogger(__name__)

LEARNING_RATES = [0.01, 0.001, 0.0001]
TANGOS_LAMBDA1 = [1.0, 10.0, 100.0]
TANGOS_LAMBDA2 = [0.1, 1.0]
WEIGHT_LAMBDAS = [0.1, 0.01, 0.001]
DROPOUT_RATES = [0.1, 0.25, 0.5]
NOISE_SDS = [0.1, 0.05, 0.01]

ALIASES = {'NoReg': 'baseline'}


def _tangos_points(lambda1s, lambda2s) -> List[Dict[str, Any]]:
    return [{'tangos': {'lambda1': l1, 'lambda2': l2}}
            for l1, l2 in itertools.product(lambda1s, lambda2s)]


METHOD_GRIDS: Dict[str, List[Dict[str, Any]]] = {
    'baseline': [{}],
    'L1': [{'baselines': {'l1_lambda': v}} for v in WEIGHT_LAMBDAS],
    'L2': [{'baselines': {'l2_lambda': v}} for v in WEIGHT_LAMBDAS],
    'DO': [{'baselines': {'dropout_p': v}} for v in DROPOUT_RATES],
    'BN': [{'baselines': {'batchnorm_enabled': True}}],
    'IN': [{'baselines': {'input_noise_sd': v}} for v in NOISE_SDS],
    'MU': [{'baselines': {'mixup_enabled': True}}],
    'TANGOS': _tangos_points(TANGOS_LAMBDA1, TANGOS_LAMBDA2),
    'SpecOnly': _tangos_points(TANGOS_LAMBDA1, [0.0]),
    'OrthOnly': _tangos_points([0.0], TANGOS_LAMBDA2),
}

BASELINE_METHODS = ['L1', 'L2', 'DO', 'BN', 'IN', 'MU']


def known_methods() -> List[str]:
    """Все имена методов, включая совместные TANGOS+X"""
    return list(METHOD_GRIDS) + list(ALIASES) + [f"TANGOS+{m}" for m in BASELINE_METHODS]


def method_points(method: str) -> List[Dict[str, Any]]:
    """Точки сетки метода без скорости обучения"""
    method = ALIASES.get(method, method)
    parts = method.split('+')
    for part in parts:
        if part not in METHOD_GRIDS:
            raise ConfigurationError(f"methods: неизвестный метод '{method}'")
    if len(parts) == 1:
        return METHOD_GRIDS[method]
    if len(parts) != 2 or 'TANGOS' not in parts or parts[0] == parts[1]:
        raise ConfigurationError(f"methods: совместный метод должен иметь вид TANGOS+X, получено '{method}'")

    points = []
    for left, right in itertools.product(METHOD_GRIDS[parts[0]], METHOD_GRIDS[parts[1]]):
        merged = {key: {**left.get(key, {}), **right.get(key, {})} for key in sorted(set(left) | set(right))}
        points.append(merged)
    return points


def protocol_grid(method: str, base: Optional[TrainConfig] = None,
                  learning_rates: Optional[List[float]] = None) -> List[TrainConfig]:
    """
    Сетка конфигураций метода

    Args:
        method: baseline, L1, L2, DO, BN, IN, MU, TANGOS, SpecOnly, OrthOnly или TANGOS+X
        base: базовая конфигурация (архитектура, эпохи, сид)
        learning_rates: сетка скорости обучения

    Returns:
        Список TrainConfig; скорость обучения - внешний цикл
    """
    base = base or TrainConfig()
    # Регуляризаторы сбрасываются, чтобы сетка метода задавала их полностью
    clean = replace(
        base,
        tangos=TangosConfig(pairs_M=base.tangos.pairs_M, epsilon=base.tangos.epsilon),
        baselines=BaselineRegConfig(mixup_alpha=base.baselines.mixup_alpha)
    )
    points = method_points(method)
    grid = []
    for lr in learning_rates or LEARNING_RATES:
        for point in points:
            grid.append(TrainConfig.from_dict({**point, 'learning_rate': lr}, clean))
    logger.debug(f"Сетка {method}: {len(grid)} точек")
    return grid


def describe_point(config: TrainConfig) -> Dict[str, Any]:
    """Поля строки результатов: lr, lambda1, lambda2, extra"""
    base = TrainConfig()
    extra = []
    for name, value in config.baselines.to_dict().items():
        if value != getattr(base.baselines, name) and name != 'mixup_alpha':
            extra.append(f"{name}={value}")
    if config.tangos.active:
        extra.append(f"pairs_M={config.tangos.pairs_M}")
    return {
        'lr': config.learning_rate,
        'lambda1': config.tangos.lambda1,
        'lambda2': config.tangos.lambda2,
        'extra': ';'.join(extra)
    }
