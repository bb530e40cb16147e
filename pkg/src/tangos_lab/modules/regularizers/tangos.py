# modules/regularizers/tangos.py
"""
TANGOS: специализация и ортогонализация атрибуций латентных нейронов.

Все функции работают со стопкой якобианов J формы (B, d_H, d_X):
строка J[b, i] - атрибуции нейрона i на объекте b.
Пары нейронов нумеруются как np.tril_indices(d_H, k=-1): (1,0), (2,0), (2,1), ...
"""
import logging
from functools import lru_cache
from typing import Optional, Tuple, Union

import numpy as np

from ...core.errors import ConfigurationError, DomainError, ShapeError
from ..numeric import SeededRng
from .regularizer_models import ALL_PAIRS

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-12


def stack_jacobians(J_batch) -> np.ndarray:
    """Список AttributionMatrix / матриц или массив (B, d_H, d_X) -> массив"""
    if isinstance(J_batch, np.ndarray):
        J = J_batch.astype(np.float64, copy=False)
        if J.ndim == 2:
            J = J[None]
    else:
        items = [getattr(item, 'J', item) for item in J_batch]
        if not items:
            raise DomainError("Пустой батч якобианов")
        J = np.stack([np.asarray(item, dtype=np.float64) for item in items])
    if J.ndim != 3:
        raise ShapeError(f"Ожидается стопка якобианов (B, d_H, d_X), получено {J.shape}")
    if J.shape[0] == 0:
        raise DomainError("Пустой батч якобианов")
    return J


# ============== СПЕЦИАЛИЗАЦИЯ ==============

def spec_loss(J_batch) -> float:
    """L_spec = (1/B) Σ_b (1/d_H) Σ_i ‖J_b[i]‖₁"""
    J = stack_jacobians(J_batch)
    return float(np.abs(J).sum(axis=2).mean(axis=1).mean())


def spec_loss_grad(J: np.ndarray) -> np.ndarray:
    """∂L_spec/∂J = sign(J) / (B·d_H), sign(0) = 0"""
    batch_size, d_H, _ = J.shape
    return np.sign(J) / (batch_size * d_H)


# ============== ОРТОГОНАЛИЗАЦИЯ ==============

def pair_correlation(u, v, eps: float = DEFAULT_EPSILON) -> float:
    """ρ(u, v) = |u·v| / (‖u‖₂‖v‖₂ + ε), в [0, 1]"""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ShapeError(f"pair_correlation: длины {u.size} и {v.size} не совпадают")
    value = abs(float(u @ v)) / (float(np.linalg.norm(u)) * float(np.linalg.norm(v)) + eps)
    return min(value, 1.0)


def n_pairs(d_H: int) -> int:
    """C = d_H(d_H − 1)/2"""
    return d_H * (d_H - 1) // 2


@lru_cache(maxsize=64)
def all_pairs(d_H: int) -> Tuple[np.ndarray, np.ndarray]:
    """(i, j) всех неупорядоченных пар с j < i"""
    rows, cols = np.tril_indices(d_H, k=-1)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def resolve_pair_count(pairs_M: Union[int, str], d_H: int, warn: bool = False) -> int:
    """
    Число пар на объект; значение больше C урезается до C

    warn=True пишет предупреждение об урезании (вызывающий код делает это один раз за обучение)
    """
    total = n_pairs(d_H)
    if pairs_M == ALL_PAIRS:
        return total
    pairs_M = int(pairs_M)
    if pairs_M > total:
        if warn:
            logger.warning(f"pairs_M={pairs_M} > C={total}, используются все пары")
        return total
    return pairs_M


def sample_pairs(d_H: int, pairs_M: int, batch_size: int, rng: Optional[SeededRng]) -> np.ndarray:
    """
    Номера пар (B × M): для каждого объекта M разных пар без возвращения

    При M = C выбираются все пары по порядку, генератор не используется.
    Номера внутри строки отсортированы.
    """
    total = n_pairs(d_H)
    if not 1 <= pairs_M <= total:
        raise ConfigurationError(f"pairs_M={pairs_M} вне диапазона [1, {total}]")
    if pairs_M == total:
        return np.tile(np.arange(total), (batch_size, 1))
    if rng is None:
        raise ConfigurationError(f"sample_pairs: для pairs_M={pairs_M} < C={total} нужен rng")
    return np.stack([np.sort(rng.choice(total, pairs_M, replace=False)) for _ in range(batch_size)])


def _pair_terms(J: np.ndarray, pair_idx: np.ndarray, eps: float):
    rows, cols = all_pairs(J.shape[1])
    batch_idx = np.arange(J.shape[0])[:, None]
    i_idx = rows[pair_idx]
    j_idx = cols[pair_idx]
    U = J[batch_idx, i_idx]
    V = J[batch_idx, j_idx]
    dot = (U * V).sum(axis=2)
    norm_u = np.sqrt((U * U).sum(axis=2))
    norm_v = np.sqrt((V * V).sum(axis=2))
    denom = norm_u * norm_v + eps
    return batch_idx, i_idx, j_idx, U, V, dot, norm_u, norm_v, denom


def orth_loss_on_pairs(J: np.ndarray, pair_idx: np.ndarray, eps: float = DEFAULT_EPSILON) -> float:
    """Среднее ρ по выбранным парам каждого объекта, затем по батчу"""
    J = stack_jacobians(J)
    _, _, _, _, _, dot, _, _, denom = _pair_terms(J, pair_idx, eps)
    rho = np.minimum(np.abs(dot) / denom, 1.0)
    return float(rho.mean(axis=1).mean())


def orth_loss_and_grad(J: np.ndarray, pair_idx: np.ndarray,
                       eps: float = DEFAULT_EPSILON) -> Tuple[float, np.ndarray]:
    """
    Значение L_orth по выбранным парам и ∂L_orth/∂J

    ∂ρ/∂u = sign(c)·v/D − |c|·‖v‖·u/(‖u‖·D²), D = ‖u‖‖v‖ + ε, c = u·v;
    второй член равен 0 при u = 0.
    """
    J = stack_jacobians(J)
    batch_size = J.shape[0]
    batch_idx, i_idx, j_idx, U, V, dot, norm_u, norm_v, denom = _pair_terms(J, pair_idx, eps)
    rho = np.minimum(np.abs(dot) / denom, 1.0)
    value = float(rho.mean(axis=1).mean())

    weight = 1.0 / (batch_size * pair_idx.shape[1])
    sign = np.sign(dot)
    abs_dot = np.abs(dot)
    denom_sq = denom * denom
    safe_u = np.where(norm_u > 0, norm_u, 1.0)
    safe_v = np.where(norm_v > 0, norm_v, 1.0)
    coef_u = np.where(norm_u > 0, abs_dot * norm_v / (safe_u * denom_sq), 0.0)
    coef_v = np.where(norm_v > 0, abs_dot * norm_u / (safe_v * denom_sq), 0.0)

    dU = weight * ((sign / denom)[..., None] * V - coef_u[..., None] * U)
    dV = weight * ((sign / denom)[..., None] * U - coef_v[..., None] * V)

    grad = np.zeros_like(J)
    batch_grid = np.broadcast_to(batch_idx, i_idx.shape)
    np.add.at(grad, (batch_grid, i_idx), dU)
    np.add.at(grad, (batch_grid, j_idx), dV)
    return value, grad


def _gram_terms(J: np.ndarray, eps: float):
    """Матрица Грама J_b J_bᵀ, нормы строк и знаменатели ρ по всем парам"""
    gram = np.matmul(J, np.swapaxes(J, 1, 2))
    norms = np.sqrt(np.einsum('bii->bi', gram))
    denom = norms[:, :, None] * norms[:, None, :] + eps
    return gram, norms, denom


def _full_value(gram: np.ndarray, denom: np.ndarray) -> float:
    rows, cols = all_pairs(gram.shape[1])
    rho = np.minimum(np.abs(gram[:, rows, cols]) / denom[:, rows, cols], 1.0)
    return float(rho.mean(axis=1).mean())


def orth_loss_full(J_batch, eps: float = DEFAULT_EPSILON) -> float:
    """
    L_orth по всем C парам

    Считается через матрицу Грама каждого объекта: память O(B·d_H²)
    вместо O(B·C·d_X) при явном выборе пар.
    """
    J = stack_jacobians(J_batch)
    d_H = J.shape[1]
    if d_H < 2:
        raise ConfigurationError(f"L_orth требует d_H >= 2, получено {d_H}")
    gram, _, denom = _gram_terms(J, eps)
    return _full_value(gram, denom)


def orth_loss_and_grad_full(J: np.ndarray, eps: float = DEFAULT_EPSILON) -> Tuple[float, np.ndarray]:
    """
    L_orth по всем парам и ∂L_orth/∂J без перебора пар

    Для строки i: Σ_j sign(G_ij)/D_ij · J_j − Σ_j |G_ij|·‖J_j‖/(‖J_i‖·D_ij²) · J_i,
    второй член равен 0 при J_i = 0.
    """
    J = stack_jacobians(J)
    batch_size, d_H, _ = J.shape
    if d_H < 2:
        raise ConfigurationError(f"L_orth требует d_H >= 2, получено {d_H}")
    gram, norms, denom = _gram_terms(J, eps)
    value = _full_value(gram, denom)

    off_diagonal = ~np.eye(d_H, dtype=bool)
    weight = 1.0 / (batch_size * n_pairs(d_H))
    cross = np.where(off_diagonal, np.sign(gram) / denom, 0.0)
    safe = np.where(norms > 0, norms, 1.0)
    shrink = np.abs(gram) * norms[:, None, :] / (safe[:, :, None] * denom * denom)
    shrink = np.where(off_diagonal & (norms[:, :, None] > 0), shrink, 0.0)
    grad = weight * (np.matmul(cross, J) - shrink.sum(axis=2)[:, :, None] * J)
    return value, grad


def orth_loss_subsampled(J_batch, pairs_M: Union[int, str], rng: SeededRng,
                         eps: float = DEFAULT_EPSILON) -> float:
    """L′_orth: для каждого объекта pairs_M случайных пар без возвращения"""
    J = stack_jacobians(J_batch)
    d_H = J.shape[1]
    if d_H < 2:
        raise ConfigurationError(f"L_orth требует d_H >= 2, получено {d_H}")
    total = n_pairs(d_H)
    count = total if pairs_M == ALL_PAIRS else int(pairs_M)
    if not 1 <= count <= total:
        raise ConfigurationError(f"pairs_M={pairs_M} вне диапазона [1, {total}]")
    if count == total:
        return orth_loss_full(J, eps)
    return orth_loss_on_pairs(J, sample_pairs(d_H, count, J.shape[0], rng), eps)
