# modules/regularizers/batchnorm.py
"""
Batch normalization после линейного слоя (до ReLU)
"""
from typing import Tuple

import numpy as np

from ...core.errors import DegenerateVarianceError
from .regularizer_models import BatchNormCache, BatchNormParams


def batchnorm_forward(linear: np.ndarray, params: BatchNormParams,
                      training: bool) -> Tuple[np.ndarray, BatchNormCache]:
    """
    Нормализация признаков батча

    Args:
        linear: выход линейного слоя (батч × ширина)
        params: gamma, beta и running-статистики
        training: статистики батча (True) или running (False)

    Returns:
        (gamma * x_hat + beta, кэш для обратного прохода)
    """
    batch_size = linear.shape[0]
    if training:
        if batch_size < 2:
            raise DegenerateVarianceError("batch norm: батч из одной строки в режиме обучения")
        mean = linear.mean(axis=0)
        var = linear.var(axis=0)
    else:
        mean = params.running_mean
        var = params.running_var

    inv_std = 1.0 / np.sqrt(var + params.eps)
    x_hat = (linear - mean) * inv_std
    cache = BatchNormCache(
        x_hat=x_hat,
        inv_std=inv_std,
        scale=params.gamma * inv_std,
        mean=mean,
        var=var,
        training=training,
        batch_size=batch_size
    )
    return params.gamma * x_hat + params.beta, cache


def batchnorm_backward(grad_out: np.ndarray, cache: BatchNormCache,
                       params: BatchNormParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Обратный проход batch norm

    Returns:
        (d_linear, d_gamma, d_beta)
    """
    dgamma = (grad_out * cache.x_hat).sum(axis=0)
    dbeta = grad_out.sum(axis=0)
    if not cache.training:
        return grad_out * cache.scale, dgamma, dbeta

    n = cache.batch_size
    dx_hat = grad_out * params.gamma
    dlinear = cache.inv_std / n * (
        n * dx_hat - dx_hat.sum(axis=0) - cache.x_hat * (dx_hat * cache.x_hat).sum(axis=0)
    )
    return dlinear, dgamma, dbeta


def update_running_stats(params: BatchNormParams, cache: BatchNormCache):
    """r <- momentum·r + (1 − momentum)·batch, дисперсия несмещенная"""
    if not cache.training:
        return
    n = cache.batch_size
    unbiased = cache.var * n / (n - 1)
    params.running_mean = params.momentum * params.running_mean + (1 - params.momentum) * cache.mean
    params.running_var = params.momentum * params.running_var + (1 - params.momentum) * unbiased
