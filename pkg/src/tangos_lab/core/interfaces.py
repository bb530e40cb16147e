# src/tangos_lab/core/interfaces.py

import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Union

FAILED_MARK = 'FAILED'


# ============== БАЗОВЫЕ МОДЕЛИ ==============

@dataclass
class ProcessingResult:
    """Универсальный результат обработки единицы работы"""
    success: bool
    data: Any
    metadata: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None


@dataclass
class ResultRow:
    """Строка results.csv: одна ячейка (датасет, метод, сид)"""
    dataset: str
    method: str
    seed: int
    lr: float = math.nan
    lambda1: float = math.nan
    lambda2: float = math.nan
    extra: str = ''
    metric: float = math.nan
    seconds: float = 0.0

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def failed_cell(cls, dataset: str, method: str, seed: int, error: Union[Exception, str],
                    seconds: float) -> 'ResultRow':
        """Упавшая ячейка: метрика не определена, причина в extra"""
        return cls(dataset=dataset, method=method, seed=seed, extra=f"{FAILED_MARK}: {error}", seconds=seconds)

    @property
    def failed(self) -> bool:
        return self.extra.startswith(FAILED_MARK)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# ============== EXPERIMENT INTERFACE ==============

class IExperimentRunner(ABC):
    """Интерфейс запуска экспериментов (команды CLI)"""

    @abstractmethod
    def train(self) -> ProcessingResult:
        """Обучает одну модель на заданном разбиении"""
        pass

    @abstractmethod
    def benchmark(self) -> ProcessingResult:
        """Полный протокол кросс-валидации по сетке датасетов × методов × сидов"""
        pass

    @abstractmethod
    def diagnose(self) -> ProcessingResult:
        """Кривые атрибуций / декомпозиции ансамбля по эпохам"""
        pass

    @abstractmethod
    def report(self, results_paths: List[str]) -> ProcessingResult:
        """Таблица рангов и сводка тестов Уилкоксона"""
        pass


# ============== TRAINER INTERFACE ==============

class ITrainer(ABC):
    """Интерфейс модуля обучения"""

    @abstractmethod
    def fit_fold(self, dataset: Any, train_idx: Any, val_idx: Any, **options) -> ProcessingResult:
        """Обучение с ранней остановкой на строках фолда"""
        pass

    @abstractmethod
    def select(self, dataset: Any, split: Any, grid: List[Any]) -> ProcessingResult:
        """Выбор точки сетки кросс-валидацией, переобучение и тестовая метрика"""
        pass

    @abstractmethod
    def profile_pairs(self, dataset: Any, train_idx: Any, pair_counts: List[int]) -> ProcessingResult:
        """Время эпохи TANGOS в зависимости от pairs_M"""
        pass


# ============== DIAGNOSTICS INTERFACE ==============

class IDiagnostics(ABC):
    """Интерфейс модуля диагностики"""

    @abstractmethod
    def attribution_stats(self, model: Any, X_eval: Any) -> ProcessingResult:
        """L_spec и L_orth модели на наборе объектов"""
        pass

    @abstractmethod
    def monitor(self, mode: str, X_eval: Any, y_eval: Any = None, task: Any = None) -> ProcessingResult:
        """Монитор кривых по эпохам и колонки его таблицы"""
        pass

    @abstractmethod
    def compare(self, frame: Any, reference: str, alternative: str = 'less',
                method: str = 'auto') -> ProcessingResult:
        """Ранги методов и тесты Вилкоксона против эталона"""
        pass
