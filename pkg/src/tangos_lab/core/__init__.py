"""
Общие компоненты: результаты обработки, ошибки, конфигурация эксперимента
"""

from .interfaces import ProcessingResult, ResultRow, IExperimentRunner, ITrainer, IDiagnostics
from .errors import TangosLabError

__all__ = ['ProcessingResult', 'ResultRow', 'IExperimentRunner', 'ITrainer', 'IDiagnostics', 'TangosLabError']
