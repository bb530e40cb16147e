# modules/numeric/matrix.py

"""
Плотные матрицы float64 с фиксированным порядком накопления
"""
import numpy as np

from ...core.errors import ShapeError, DomainError


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """
    Приводит значения к двумерной C-contiguous матрице float64

    Args:
        values: массив или вложенный список
        name: имя для сообщения об ошибке

    Returns:
        np.ndarray формы (rows, cols)
    """
    matrix = np.ascontiguousarray(values, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1)
    if matrix.ndim != 2:
        raise ShapeError(f"{name}: ожидается 2-D матрица, получено ndim={matrix.ndim}")
    return matrix


def check_finite(values: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Проверяет отсутствие NaN/Inf"""
    if not np.all(np.isfinite(values)):
        raise DomainError(f"{name}: содержит NaN или Inf")
    return values


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Матричное произведение с накоплением слева направо

    Каждый элемент считается как ((a0*b0 + a1*b1) + a2*b2) + ...
    без BLAS, поэтому результат не зависит от числа потоков.
    Поддерживает стопки матриц (..., n, k) @ (..., k, m) с broadcasting.

    Args:
        a: матрица (..., n, k)
        b: матрица (..., k, m)

    Returns:
        Произведение (..., n, m)
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul: нужны минимум 2-D операнды, получено {a.shape} и {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: несовместимые формы {a.shape} и {b.shape}")

    inner = a.shape[-1]
    if inner == 0:
        out_shape = np.broadcast_shapes(a.shape[:-2], b.shape[:-2]) + (a.shape[-2], b.shape[-1])
        return np.zeros(out_shape, dtype=np.float64)

    out = a[..., :, 0:1] * b[..., 0:1, :]
    for k in range(1, inner):
        out = out + a[..., :, k:k + 1] * b[..., k:k + 1, :]
    return np.ascontiguousarray(out)
