# modules/model/checkpoint.py
"""
Чекпоинт модели в JSON.

Формат:
    {"format": "tangos-lab-checkpoint", "version": 1,
     "widths": [d_X, ..., d_out], "attribution_layer": t, "output_constraint": "none",
     "layers": [{"weight": [[...]], "bias": [...],
                 "batchnorm": null | {"gamma", "beta", "running_mean", "running_var", "eps", "momentum"}}],
     "metadata": {...}}
Числа пишутся десятичной записью repr(float), которая восстанавливает float64 бит-в-бит.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ...core.errors import CheckpointError
from ...utils import atomic_write
from ..regularizers import BatchNormParams
from .model_models import DenseLayer, MlpModel, OutputConstraint

logger = logging.getLogger(__name__)

FORMAT_NAME = "tangos-lab-checkpoint"
FORMAT_VERSION = 1


def model_to_dict(model: MlpModel) -> Dict[str, Any]:
    layers = []
    for layer in model.layers:
        entry = {'weight': layer.weight.tolist(), 'bias': layer.bias.tolist(), 'batchnorm': None}
        bn = layer.batchnorm
        if bn is not None:
            entry['batchnorm'] = {
                'gamma': bn.gamma.tolist(),
                'beta': bn.beta.tolist(),
                'running_mean': bn.running_mean.tolist(),
                'running_var': np.asarray(bn.running_var).tolist(),
                'eps': bn.eps,
                'momentum': bn.momentum
            }
        layers.append(entry)
    return {
        'format': FORMAT_NAME,
        'version': FORMAT_VERSION,
        'widths': model.widths,
        'attribution_layer': model.attribution_layer,
        'output_constraint': model.output_constraint.value,
        'layers': layers
    }


def model_from_dict(payload: Dict[str, Any]) -> MlpModel:
    if payload.get('format') != FORMAT_NAME:
        raise CheckpointError(f"Неизвестный формат чекпоинта: {payload.get('format')}")
    try:
        layers = []
        for entry in payload['layers']:
            bn = entry.get('batchnorm')
            layers.append(DenseLayer(
                weight=np.array(entry['weight'], dtype=np.float64, ndmin=2),
                bias=np.array(entry['bias'], dtype=np.float64),
                batchnorm=None if bn is None else BatchNormParams(
                    gamma=np.array(bn['gamma'], dtype=np.float64),
                    beta=np.array(bn['beta'], dtype=np.float64),
                    running_mean=np.array(bn['running_mean'], dtype=np.float64),
                    running_var=np.array(bn['running_var'], dtype=np.float64),
                    eps=float(bn['eps']),
                    momentum=float(bn['momentum'])
                )
            ))
        model = MlpModel(
            layers=layers,
            attribution_layer=int(payload['attribution_layer']),
            output_constraint=OutputConstraint(payload.get('output_constraint', 'none'))
        )
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"Поврежденный чекпоинт: {e}") from e

    for previous, layer in zip(model.layers[:-1], model.layers[1:]):
        if layer.fan_in != previous.width:
            raise CheckpointError(f"Размерности слоев не согласованы: {previous.weight.shape} -> {layer.weight.shape}")
    if model.widths != list(payload.get('widths', model.widths)):
        raise CheckpointError(f"Ширины {payload.get('widths')} не совпадают с весами {model.widths}")
    return model


def save_checkpoint(model: MlpModel, path, metadata: Optional[Dict[str, Any]] = None) -> Path:
    """Атомарно пишет чекпоинт"""
    if not all(np.all(np.isfinite(p)) for p in model.parameters()):
        raise CheckpointError("Нельзя сохранить модель с нечисловыми параметрами")
    payload = model_to_dict(model)
    payload['metadata'] = metadata or {}
    path = atomic_write(path, json.dumps(payload, ensure_ascii=False))
    logger.info(f"Чекпоинт сохранен: {path}")
    return path


def load_checkpoint(path) -> Tuple[MlpModel, Dict[str, Any]]:
    """Читает чекпоинт, возвращает (модель, metadata)"""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Чекпоинт не найден: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            payload = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise CheckpointError(f"{path}: не JSON ({e})") from e
    return model_from_dict(payload), payload.get('metadata', {})


def check_compatible(model: MlpModel, n_features: int, output_width: int):
    """Размерности модели должны совпадать с датасетом"""
    if model.d_X != n_features or model.d_out != output_width:
        raise CheckpointError(
            f"Модель {model.d_X}->{model.d_out} не подходит к датасету {n_features}->{output_width}"
        )
