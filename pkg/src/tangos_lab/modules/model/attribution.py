# modules/model/attribution.py
"""
Якобиан латентного слоя по входу и градиенты TANGOS-штрафа по параметрам.

Для объекта b: J = D_t W_t ··· D_0 W_0, где D_l = diag(g_l),
g_l = relu_mask ⊙ bn_scale ⊙ dropout_scale (на слое атрибуции t - без dropout).
Маски ReLU и dropout кусочно-постоянны. В режиме обучения inv_std слоя batch norm
зависит от параметров через дисперсию батча, этот вклад добавляется отдельным
обратным проходом по графу forward (_batch_statistics_backward).

Обратная рекурсия для G = ∂P/∂J (R_t = G):
    dW_l = Σ_b (D_l R_l) P_{l−1}ᵀ,   P_{l−1} = D_{l−1} W_{l−1} ··· D_0 W_0
    ∂P/∂g_l = rowsum(R_l ⊙ W_l P_{l−1})
    R_{l−1} = W_lᵀ D_l R_l
"""
import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from ...core.errors import ConfigurationError, TraceError
from ..numeric import SeededRng, as_matrix, matmul
from ..regularizers import (
    TangosConfig, batchnorm_backward, n_pairs, orth_loss_full, resolve_pair_count, sample_pairs, spec_loss
)
from ..regularizers.tangos import orth_loss_and_grad, orth_loss_and_grad_full, orth_loss_on_pairs, spec_loss_grad
from .mlp import check_trace, forward
from .model_models import AttributionMatrix, ForwardTrace, MlpModel, ParamGrads

logger = logging.getLogger(__name__)


def _gates(model: MlpModel, trace: ForwardTrace) -> List[np.ndarray]:
    top = model.attribution_layer
    gates = []
    for l in range(top + 1):
        cache = trace.hidden[l]
        gate = cache.gate
        if l < top and cache.dropout_scale is not None:
            gate = gate * cache.dropout_scale
        gates.append(gate)
    return gates


def _jacobian_chain(model: MlpModel, trace: ForwardTrace):
    """Гейты g_l, произведения Q_l = W_l P_{l−1} и префиксы P_l = D_l Q_l"""
    check_trace(model, trace)
    gates = _gates(model, trace)
    products, prefixes = [], []
    for l, gate in enumerate(gates):
        weight = model.layers[l].weight
        if l == 0:
            product = np.broadcast_to(weight, (gate.shape[0],) + weight.shape)
        else:
            product = matmul(weight, prefixes[-1])
        products.append(product)
        prefixes.append(gate[:, :, None] * product)
    return gates, products, prefixes


def attribution_jacobians(model: MlpModel, trace: ForwardTrace) -> np.ndarray:
    """Якобианы всех объектов батча, массив (B, d_H, d_X)"""
    _, _, prefixes = _jacobian_chain(model, trace)
    return np.ascontiguousarray(prefixes[-1])


def attribution_jacobian(model: MlpModel, trace: ForwardTrace, sample_index: int) -> AttributionMatrix:
    """
    Якобиан ∂h_i/∂x_j одного объекта

    Args:
        model: сеть
        trace: трасса forward на той же модели
        sample_index: номер объекта в батче

    Returns:
        AttributionMatrix d_H × d_X
    """
    check_trace(model, trace)
    if not 0 <= sample_index < trace.batch_size:
        raise TraceError(f"sample_index={sample_index} вне батча размера {trace.batch_size}")
    J = attribution_jacobians(model, trace)
    return AttributionMatrix(J=J[sample_index].copy(), sample_index=sample_index)


def jacobians_for(model: MlpModel, X) -> np.ndarray:
    """Якобианы в режиме инференса для матрицы объектов"""
    _, trace = forward(model, as_matrix(X, "X"), training=False)
    return attribution_jacobians(model, trace)


def _batch_statistics_backward(model: MlpModel, trace: ForwardTrace,
                               d_inv_std: Dict[int, np.ndarray], grads: ParamGrads):
    """
    Добавляет к grads вклад зависимости inv_std = (var_B + ε)^(-1/2) от параметров

    Args:
        d_inv_std: слой -> ∂P/∂inv_std (ширина слоя), только слои с batch norm в режиме обучения
        grads: градиенты при постоянных inv_std, дополняются на месте
    """
    if not d_inv_std:
        return
    upstream = None
    for l in range(max(d_inv_std), -1, -1):
        layer = model.layers[l]
        cache = trace.hidden[l]
        d_linear = np.zeros_like(cache.linear)
        if upstream is not None:
            d_a = upstream * cache.dropout_scale if cache.dropout_scale is not None else upstream
            d_z = d_a * cache.mask
            if cache.bn is not None:
                d_forward, dgamma, dbeta = batchnorm_backward(d_z, cache.bn, layer.batchnorm)
                grads.layers[l].dgamma = grads.layers[l].dgamma + dgamma
                grads.layers[l].dbeta = grads.layers[l].dbeta + dbeta
            else:
                d_forward = d_z
            d_linear = d_linear + d_forward
        if l in d_inv_std:
            bn = cache.bn
            d_var = -0.5 * bn.inv_std ** 3 * d_inv_std[l]
            # ∂var/∂linear_b = 2(linear_b − mean)/B; вклад среднего в var равен нулю
            d_linear = d_linear + d_var * 2.0 * (cache.linear - bn.mean) / bn.batch_size
        grads.layers[l].dW = grads.layers[l].dW + matmul(d_linear.T, cache.inputs)
        grads.layers[l].db = grads.layers[l].db + d_linear.sum(axis=0)
        if l > 0:
            upstream = matmul(d_linear, layer.weight)


def penalty_value_and_grads(model: MlpModel, trace: ForwardTrace, X_batch,
                            tangos_cfg: TangosConfig,
                            rng: Optional[SeededRng]) -> Tuple[float, float, ParamGrads]:
    """
    Значения L_spec, L′_orth и градиент λ1·L_spec + λ2·L′_orth по параметрам

    Args:
        model: сеть
        trace: трасса forward этого батча
        X_batch: батч (для проверки соответствия трассе)
        tangos_cfg: λ1, λ2, pairs_M, ε
        rng: поток выбора пар (не нужен при pairs_M >= C)

    Returns:
        (L_spec, L_orth, ParamGrads); L_orth = nan при d_H < 2 и λ2 = 0
    """
    check_trace(model, trace)
    n_rows = np.shape(X_batch)[0]
    if n_rows != trace.batch_size:
        raise TraceError(f"Трасса построена для {trace.batch_size} строк, батч содержит {n_rows}")

    d_H = model.d_H
    if tangos_cfg.lambda2 > 0 and d_H < 2:
        raise ConfigurationError(f"tangos.lambda2 > 0 требует d_H >= 2, получено {d_H}")

    gates, products, prefixes = _jacobian_chain(model, trace)
    J = prefixes[-1]
    batch_size = J.shape[0]

    spec_value = spec_loss(J)
    orth_value, orth_grad = float('nan'), None
    if d_H >= 2:
        count = resolve_pair_count(tangos_cfg.pairs_M, d_H)
        if count == n_pairs(d_H):
            if tangos_cfg.lambda2 > 0:
                orth_value, orth_grad = orth_loss_and_grad_full(J, tangos_cfg.epsilon)
            else:
                orth_value = orth_loss_full(J, tangos_cfg.epsilon)
        else:
            pair_idx = sample_pairs(d_H, count, batch_size, rng)
            if tangos_cfg.lambda2 > 0:
                orth_value, orth_grad = orth_loss_and_grad(J, pair_idx, tangos_cfg.epsilon)
            else:
                orth_value = orth_loss_on_pairs(J, pair_idx, tangos_cfg.epsilon)

    grads = model.zero_grads()
    if not tangos_cfg.active:
        return spec_value, orth_value, grads

    upstream = np.zeros_like(J)
    if tangos_cfg.lambda1 > 0:
        upstream = upstream + tangos_cfg.lambda1 * spec_loss_grad(J)
    if orth_grad is not None:
        upstream = upstream + tangos_cfg.lambda2 * orth_grad

    d_inv_std: Dict[int, np.ndarray] = {}
    for l in range(model.attribution_layer, -1, -1):
        layer = model.layers[l]
        gate = gates[l]
        gated = gate[:, :, None] * upstream
        if l == 0:
            grads.layers[l].dW = gated.sum(axis=0)
        else:
            grads.layers[l].dW = matmul(gated, np.swapaxes(prefixes[l - 1], 1, 2)).sum(axis=0)

        cache = trace.hidden[l]
        if cache.bn is not None:
            d_gate = (upstream * products[l]).sum(axis=2)
            open_gate = cache.mask
            if l < model.attribution_layer and cache.dropout_scale is not None:
                open_gate = open_gate * cache.dropout_scale
            # ∂P/∂(γ·inv_std)
            d_scale = (d_gate * open_gate).sum(axis=0)
            grads.layers[l].dgamma = d_scale * cache.bn.inv_std
            if cache.bn.training:
                d_inv_std[l] = d_scale * layer.batchnorm.gamma

        if l > 0:
            upstream = matmul(layer.weight.T, gated)

    _batch_statistics_backward(model, trace, d_inv_std, grads)
    return spec_value, orth_value, grads
