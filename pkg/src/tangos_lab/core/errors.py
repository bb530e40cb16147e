# src/tangos_lab/core/errors.py

"""
Иерархия ошибок tangos-lab
"""


class TangosLabError(Exception):
    """Базовая ошибка лаборатории"""


# ============== ЧИСЛЕННОЕ ЯДРО ==============

class ShapeError(TangosLabError, ValueError):
    """Несогласованные размерности матриц"""


class DomainError(TangosLabError, ValueError):
    """Параметр вне области определения"""


# ============== ДАННЫЕ ==============

class IngestionError(TangosLabError, ValueError):
    """Ошибка чтения CSV (файл, строка или колонка)"""


class PreprocessingError(TangosLabError, ValueError):
    """Ошибка предобработки (импутация, кодирование)"""


class SplitError(TangosLabError, ValueError):
    """Невозможно построить разбиение"""


class IterationError(TangosLabError, ValueError):
    """Пустой набор индексов для мини-батчей"""


# ============== МОДЕЛЬ ==============

class ConstructionError(TangosLabError, ValueError):
    """Некорректная архитектура сети"""


class TraceError(TangosLabError, ValueError):
    """Трасса прямого прохода не соответствует модели"""


class LabelError(TangosLabError, ValueError):
    """Метка класса вне диапазона"""


class OracleError(TangosLabError):
    """Конечные разности дали нечисловое значение"""


class CheckpointError(TangosLabError):
    """Чекпоинт не читается или не подходит к данным"""


class DegenerateVarianceError(TangosLabError, ValueError):
    """Batch norm на батче из одной строки"""


# ============== ОБУЧЕНИЕ И КОНФИГУРАЦИЯ ==============

class ConfigurationError(TangosLabError, ValueError):
    """Некорректная конфигурация (с путем к полю)"""


class UnsupportedTaskError(ConfigurationError):
    """Операция не определена для данного типа задачи"""


class TrainingError(TangosLabError):
    """Обучение прервано (нечисловые градиенты и т.п.)"""


# ============== ДИАГНОСТИКА ==============

class DegenerateDataError(TangosLabError, ValueError):
    """Все парные разности нулевые"""


class IncompleteGridError(TangosLabError, ValueError):
    """В сетке результатов нет части ячеек"""

    def __init__(self, missing):
        self.missing = list(missing)
        cells = ', '.join(f"{d}/{m}" for d, m in self.missing)
        super().__init__(f"Отсутствуют ячейки: {cells}")
