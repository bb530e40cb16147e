# modules/regularizers/baselines.py
"""
Базовые регуляризаторы: L1/L2, dropout, входной шум, MixUp
"""
from typing import Optional, Tuple

import numpy as np

from ...core.errors import DomainError
from ..data.data_models import TaskType
from ..numeric import SeededRng, sample_beta, sample_gaussian


def weight_penalty(model, l1_lambda: float, l2_lambda: float):
    """
    λ1·Σ|w| + λ2·Σw² по весам и смещениям всех слоев

    Args:
        model: MlpModel
        l1_lambda, l2_lambda: веса штрафов (>= 0)

    Returns:
        (значение, ParamGrads) с градиентом λ1·sign(w) + 2λ2·w
    """
    if l1_lambda < 0 or l2_lambda < 0:
        raise DomainError(f"weight_penalty: отрицательные λ ({l1_lambda}, {l2_lambda})")

    grads = model.zero_grads()
    value = 0.0
    if l1_lambda == 0 and l2_lambda == 0:
        return value, grads

    for layer, layer_grads in zip(model.layers, grads.layers):
        for param, grad in ((layer.weight, layer_grads.dW), (layer.bias, layer_grads.db)):
            value += l1_lambda * float(np.abs(param).sum()) + l2_lambda * float((param ** 2).sum())
            grad += l1_lambda * np.sign(param) + 2.0 * l2_lambda * param
    return value, grads


def dropout_mask(shape, p: float, rng: SeededRng) -> np.ndarray:
    """Маска inverted dropout: 0 с вероятностью p, иначе 1/(1-p)"""
    if not 0 <= p < 1:
        raise DomainError(f"dropout: p={p} вне [0, 1)")
    keep = rng.random(shape) >= p
    return keep.astype(np.float64) / (1.0 - p)


def apply_dropout(activations: np.ndarray, p: float, rng: Optional[SeededRng],
                  training: bool) -> np.ndarray:
    """Inverted dropout; на инференсе тождественен"""
    if not training or p == 0:
        return activations
    return activations * dropout_mask(activations.shape, p, rng)


def apply_input_noise(X_batch: np.ndarray, sd: float, rng: SeededRng) -> np.ndarray:
    """X + N(0, sd²) поэлементно"""
    if sd < 0:
        raise DomainError(f"input noise: sd={sd} < 0")
    if sd == 0:
        return X_batch
    noise = sample_gaussian(rng, 0.0, sd, X_batch.size).reshape(X_batch.shape)
    return X_batch + noise


def apply_mixup(X_batch: np.ndarray, y_batch: np.ndarray, alpha: float, rng: SeededRng,
                task, n_classes: int = 0,
                lam: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    MixUp: X̃ = λX + (1−λ)X[perm], λ ~ Beta(alpha, alpha), perm - случайная перестановка батча

    Для регрессии цели смешиваются линейно. Для классификации возвращаются
    мягкие метки (батч × n_classes): λ·onehot(y) + (1−λ)·onehot(y[perm]),
    их кросс-энтропия равна λ-взвешенной сумме кросс-энтропий обеих меток.

    Args:
        lam: фиксированный λ (иначе сэмплируется)
    """
    if alpha <= 0:
        raise DomainError(f"mixup: alpha={alpha} <= 0")
    batch_size = X_batch.shape[0]
    classification = task == TaskType.CLASSIFICATION

    if batch_size < 2:
        if classification:
            return X_batch, _one_hot(y_batch, n_classes)
        return X_batch, y_batch

    if lam is None:
        lam = sample_beta(rng, alpha, alpha)
    partner = rng.permutation(batch_size)

    X_mixed = lam * X_batch + (1.0 - lam) * X_batch[partner]
    if classification:
        soft = _one_hot(y_batch, n_classes)
        return X_mixed, lam * soft + (1.0 - lam) * soft[partner]
    return X_mixed, lam * y_batch + (1.0 - lam) * y_batch[partner]


def _one_hot(y: np.ndarray, n_classes: int) -> np.ndarray:
    if y.ndim == 2:
        return y
    out = np.zeros((len(y), n_classes), dtype=np.float64)
    out[np.arange(len(y)), y.astype(np.int64)] = 1.0
    return out
