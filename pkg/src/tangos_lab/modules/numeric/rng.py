# modules/numeric/rng.py

"""
Детерминированный генератор с разделяемыми потоками.

Алгоритм: numpy PCG64, инициализированный SeedSequence(entropy=seed,
spawn_key=path). Дочерний поток split(label) добавляет к spawn_key
32-битный SHA-256 хэш метки, поэтому зависит только от (seed, пути меток)
и не зависит от того, сколько чисел уже выдал родитель.
"""
import hashlib
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ...core.errors import DomainError

MASK64 = (1 << 64) - 1


def _label_key(label: Union[str, int]) -> int:
    """Стабильный 32-битный ключ метки"""
    digest = hashlib.sha256(str(label).encode('utf-8')).digest()
    return int.from_bytes(digest[:4], 'little')


class SeededRng:
    """Воспроизводимый генератор; один владелец, в потоки не передается"""

    def __init__(self, seed: int, path: Sequence[int] = ()):
        self.seed = int(seed) & MASK64
        self.path: Tuple[int, ...] = tuple(int(p) for p in path)
        self._sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self._generator = np.random.Generator(np.random.PCG64(self._sequence))

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, path={self.path})"

    def split(self, label: Union[str, int]) -> 'SeededRng':
        """Независимый дочерний поток с меткой"""
        return SeededRng(self.seed, self.path + (_label_key(label),))

    def derive_seed(self, label: Union[str, int]) -> int:
        """64-битный сид для дочернего запуска"""
        child = self.split(label)
        return int(child._sequence.generate_state(1, np.uint64)[0])

    # === Примитивы ===

    def normal(self, mean: float, sd: float, size) -> np.ndarray:
        return self._generator.normal(mean, sd, size)

    def uniform(self, low: float, high: float, size=None):
        return self._generator.uniform(low, high, size)

    def random(self, size=None):
        return self._generator.random(size)

    def integers(self, low: int, high: Optional[int] = None, size=None):
        return self._generator.integers(low, high, size)

    def permutation(self, values) -> np.ndarray:
        return self._generator.permutation(values)

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        return self._generator.choice(n, size=size, replace=replace)

    def beta(self, alpha: float, beta: float) -> float:
        return float(self._generator.beta(alpha, beta))


def sample_gaussian(rng: SeededRng, mean: float, sd: float, n: int) -> np.ndarray:
    """
    n независимых нормальных величин N(mean, sd²)

    При sd = 0 возвращает n копий mean.
    """
    if sd < 0:
        raise DomainError(f"sample_gaussian: sd={sd} < 0")
    if sd == 0:
        return np.full(int(n), float(mean), dtype=np.float64)
    return rng.normal(float(mean), float(sd), int(n)).astype(np.float64)


def sample_beta(rng: SeededRng, alpha: float, beta: float) -> float:
    """Одна величина Beta(alpha, beta) в [0, 1]"""
    if alpha <= 0 or beta <= 0:
        raise DomainError(f"sample_beta: параметры должны быть > 0, получено ({alpha}, {beta})")
    return min(1.0, max(0.0, rng.beta(alpha, beta)))
