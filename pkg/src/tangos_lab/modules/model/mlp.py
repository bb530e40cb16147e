# modules/model/mlp.py
"""
MLP: инициализация, прямой проход с трассой, функции потерь и обратный проход
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ...core.errors import ConfigurationError, ConstructionError, LabelError, ShapeError, TraceError
from ..data.data_models import TaskType
from ..numeric import SeededRng, as_matrix, matmul
from ..regularizers import (
    BatchNormParams, batchnorm_backward, batchnorm_forward, dropout_mask, update_running_stats
)
from .model_models import (
    DenseLayer, ForwardTrace, LayerGrads, LayerTrace, MlpModel, OutputConstraint, ParamGrads
)

logger = logging.getLogger(__name__)


def init_model(layer_widths: Sequence[int], seed: int,
               attribution_layer: Optional[int] = None,
               batchnorm: bool = False,
               output_constraint: OutputConstraint = OutputConstraint.NONE) -> MlpModel:
    """
    Создает MLP с инициализацией Kaiming-uniform

    Args:
        layer_widths: [d_X, h_1, ..., h_L, d_out]
        seed: сид инициализации
        attribution_layer: индекс скрытого слоя для h (по умолчанию последний)
        batchnorm: добавить batch norm после каждого скрытого линейного слоя
        output_constraint: simplex - выходные веса softmax(φ) без смещения

    Returns:
        MlpModel; W ~ U(−√(6/fan_in), √(6/fan_in)), смещения нулевые
    """
    widths = [int(w) for w in layer_widths]
    if len(widths) < 3:
        raise ConstructionError(f"Нужен минимум один скрытый слой, получены ширины {widths}")
    if any(w < 1 for w in widths):
        raise ConstructionError(f"Нулевая ширина слоя: {widths}")

    n_hidden = len(widths) - 2
    if attribution_layer is None:
        attribution_layer = n_hidden - 1
    if not 0 <= attribution_layer < n_hidden:
        raise ConstructionError(f"attribution_layer={attribution_layer} не индексирует скрытый слой")
    if output_constraint == OutputConstraint.SIMPLEX:
        if widths[-1] != 1:
            raise ConstructionError("Simplex-выход определен только для одного выхода")
        if attribution_layer != n_hidden - 1:
            raise ConstructionError("Simplex-выход требует атрибуции на последнем скрытом слое")

    rng = SeededRng(seed).split('init')
    layers = []
    for l, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        is_output = l == len(widths) - 2
        if is_output and output_constraint == OutputConstraint.SIMPLEX:
            weight = np.zeros((fan_out, fan_in))
        else:
            bound = np.sqrt(6.0 / fan_in)
            weight = rng.split(f"layer{l}").uniform(-bound, bound, (fan_out, fan_in))
        layers.append(DenseLayer(
            weight=np.ascontiguousarray(weight, dtype=np.float64),
            bias=np.zeros(fan_out),
            batchnorm=BatchNormParams.identity(fan_out) if batchnorm and not is_output else None
        ))

    logger.debug(f"MLP {widths}, attribution_layer={attribution_layer}, batchnorm={batchnorm}")
    return MlpModel(layers=layers, attribution_layer=attribution_layer,
                    output_constraint=output_constraint)


def forward(model: MlpModel, X_batch, training: bool = False, dropout_p: float = 0.0,
            rng: Optional[SeededRng] = None) -> Tuple[np.ndarray, ForwardTrace]:
    """
    Прямой проход: linear → batch norm → ReLU → dropout на каждом скрытом слое

    Args:
        model: сеть
        X_batch: батч × d_X
        training: статистики батча в batch norm и активный dropout
        dropout_p: вероятность dropout (только при training)
        rng: поток для масок dropout

    Returns:
        (предсказания батч × d_out, трасса)
    """
    X = as_matrix(X_batch, "X_batch")
    if X.shape[1] != model.d_X:
        raise ShapeError(f"forward: ожидается {model.d_X} признаков, получено {X.shape[1]}")
    if training and dropout_p > 0 and rng is None:
        raise ConfigurationError("forward: dropout в режиме обучения требует rng")

    hidden: List[LayerTrace] = []
    current = X
    for l, layer in enumerate(model.layers[:-1]):
        linear = matmul(current, layer.weight.T) + layer.bias
        bn_cache = None
        if layer.batchnorm is not None:
            z, bn_cache = batchnorm_forward(linear, layer.batchnorm, training)
        else:
            z = linear
        mask = (z > 0).astype(np.float64)
        a = z * mask

        drop = None
        if training and dropout_p > 0:
            drop = dropout_mask(a.shape, dropout_p, rng.split(f"layer{l}"))
            out = a * drop
        else:
            out = a
        hidden.append(LayerTrace(inputs=current, linear=linear, z=z, mask=mask, a=a, out=out,
                                 bn=bn_cache, dropout_scale=drop))
        current = out

    output_layer = model.layers[-1]
    predictions = matmul(current, model.output_weight().T)
    if model.output_constraint != OutputConstraint.SIMPLEX:
        predictions = predictions + output_layer.bias

    trace = ForwardTrace(hidden=hidden, output_inputs=current, output=predictions,
                         widths=model.widths, training=training)
    return predictions, trace


def check_trace(model: MlpModel, trace: ForwardTrace):
    """Трасса должна соответствовать архитектуре модели"""
    if list(trace.widths) != model.widths or len(trace.hidden) != model.n_hidden:
        raise TraceError(f"Трасса {trace.widths} не соответствует модели {model.widths}")


def task_loss(predictions: np.ndarray, y_batch: np.ndarray,
              task: TaskType) -> Tuple[float, np.ndarray]:
    """
    Потеря задачи и ее градиент по выходу сети

    Регрессия - MSE; классификация - средняя кросс-энтропия softmax.
    y_batch для классификации: индексы классов или мягкие метки (батч × k).
    """
    batch_size = predictions.shape[0]
    if batch_size == 0:
        raise ShapeError("task_loss: пустой батч")

    if task == TaskType.REGRESSION:
        residual = predictions[:, 0] - np.asarray(y_batch, dtype=np.float64).reshape(-1)
        loss = float(np.mean(residual ** 2))
        grad = (2.0 / batch_size) * residual.reshape(-1, 1)
        return loss, grad

    n_classes = predictions.shape[1]
    targets = np.asarray(y_batch)
    if targets.ndim == 1:
        labels = targets.astype(np.int64)
        if np.any(labels < 0) or np.any(labels >= n_classes):
            raise LabelError(f"Метка класса вне [0, {n_classes})")
        soft = np.zeros_like(predictions)
        soft[np.arange(batch_size), labels] = 1.0
    else:
        soft = targets.astype(np.float64)

    shifted = predictions - predictions.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_prob = shifted - log_norm
    loss = float(-(soft * log_prob).sum(axis=1).mean())
    probs = np.exp(log_prob)
    grad = (probs * soft.sum(axis=1, keepdims=True) - soft) / batch_size
    return loss, grad


def backward(model: MlpModel, trace: ForwardTrace, grad_output: np.ndarray) -> ParamGrads:
    """Обратное распространение градиента по выходу через трассу"""
    check_trace(model, trace)
    grads: List[LayerGrads] = [None] * len(model.layers)

    output_layer = model.layers[-1]
    grad_weight = matmul(grad_output.T, trace.output_inputs)
    if model.output_constraint == OutputConstraint.SIMPLEX:
        alpha = model.output_weight()
        # dφ = α ⊙ (g − g·α)
        dW = alpha * (grad_weight - (grad_weight * alpha).sum(axis=1, keepdims=True))
        db = np.zeros_like(output_layer.bias)
    else:
        dW = grad_weight
        db = grad_output.sum(axis=0)
    grads[-1] = LayerGrads(dW=dW, db=db)
    upstream = matmul(grad_output, model.output_weight())

    for l in range(model.n_hidden - 1, -1, -1):
        layer = model.layers[l]
        cache = trace.hidden[l]
        d_a = upstream * cache.dropout_scale if cache.dropout_scale is not None else upstream
        d_z = d_a * cache.mask
        dgamma = dbeta = None
        if cache.bn is not None:
            d_linear, dgamma, dbeta = batchnorm_backward(d_z, cache.bn, layer.batchnorm)
        else:
            d_linear = d_z
        grads[l] = LayerGrads(
            dW=matmul(d_linear.T, cache.inputs),
            db=d_linear.sum(axis=0),
            dgamma=dgamma,
            dbeta=dbeta
        )
        upstream = matmul(d_linear, layer.weight)

    return ParamGrads(grads)


def loss_and_grads(model: MlpModel, X_batch, y_batch, task: TaskType,
                   training: bool = False, dropout_p: float = 0.0,
                   rng: Optional[SeededRng] = None) -> Tuple[float, ParamGrads]:
    """MSE (регрессия) или NLL (классификация) и градиенты по параметрам"""
    predictions, trace = forward(model, X_batch, training=training, dropout_p=dropout_p, rng=rng)
    loss, grad_output = task_loss(predictions, y_batch, task)
    return loss, backward(model, trace, grad_output)


def commit_running_stats(model: MlpModel, trace: ForwardTrace):
    """Обновляет running-статистики batch norm по трассе обучения"""
    for layer, cache in zip(model.layers[:-1], trace.hidden):
        if layer.batchnorm is not None and cache.bn is not None:
            update_running_stats(layer.batchnorm, cache.bn)


def predict(model: MlpModel, X) -> np.ndarray:
    """Предсказания в режиме инференса"""
    predictions, _ = forward(model, X, training=False)
    return predictions


def latent_activations(model: MlpModel, X) -> np.ndarray:
    """h = активации слоя атрибуции (батч × d_H)"""
    _, trace = forward(model, X, training=False)
    return trace.hidden[model.attribution_layer].a


def min_abs_preactivation(model: MlpModel, X) -> float:
    """Наименьший |z| по всем скрытым слоям (для защиты от изломов ReLU)"""
    _, trace = forward(model, X, training=False)
    return min(float(np.min(np.abs(z))) for _, z in trace.preactivations())
