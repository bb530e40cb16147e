"""
Численное ядро: плотные матрицы и воспроизводимый генератор случайных чисел
"""

from .matrix import as_matrix, matmul, check_finite
from .rng import SeededRng, sample_gaussian, sample_beta

__all__ = [
    'as_matrix',
    'matmul',
    'check_finite',
    'SeededRng',
    'sample_gaussian',
    'sample_beta'
]
