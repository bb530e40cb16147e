# modules/data/loader.py
"""
Чтение табличных CSV и реестр датасетов
"""
import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from ...core.errors import IngestionError, ConfigurationError
from .data_models import ColumnKind, ColumnSchema, RawTable, TaskType

logger = logging.getLogger(__name__)

NA_VALUES = ["", "?", "NA", "NaN", "nan", "null", "NULL"]


def _check_row_widths(path: Path, max_rows: Optional[int]):
    """Короткие строки pandas молча дополняет NaN; здесь они - ошибка"""
    try:
        with path.open(encoding='utf-8', newline='') as handle:
            reader = csv.reader(handle, skipinitialspace=True)
            header = next(reader, None)
            if header is None:
                return
            width = len(header)
            records = 0
            for row in reader:
                if not row:
                    continue
                records += 1
                if max_rows is not None and records > max_rows:
                    break
                if len(row) < width:
                    raise IngestionError(
                        f"{path}: строка {reader.line_num} содержит {len(row)} полей, в заголовке {width}"
                    )
    except (csv.Error, UnicodeDecodeError) as e:
        raise IngestionError(f"{path}: некорректная строка ({e})") from e


def load_csv(path, schema: List[ColumnSchema], max_rows: Optional[int] = None,
             task: TaskType = TaskType.REGRESSION,
             classes: Optional[List[str]] = None) -> RawTable:
    """
    Читает CSV (RFC-4180, UTF-8, строка заголовка) в сырую таблицу

    Args:
        path: путь к файлу
        schema: описание колонок; лишние колонки файла отбрасываются
        max_rows: взять только первые max_rows строк в порядке файла
        task: тип задачи (определяет разбор целевой колонки)
        classes: словарь классов для классификации

    Returns:
        RawTable с числовыми колонками в float и категориальными в str
    """
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"Файл не найден: {path}")
    if max_rows is not None and max_rows < 1:
        raise IngestionError(f"{path}: max_rows={max_rows} должен быть >= 1")

    try:
        frame = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            na_values=NA_VALUES,
            nrows=max_rows,
            encoding='utf-8',
            skipinitialspace=True
        )
    except pd.errors.EmptyDataError as e:
        raise IngestionError(f"{path}: пустой файл") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise IngestionError(f"{path}: некорректная строка ({e})") from e

    _check_row_widths(path, max_rows)
    frame.columns = [str(c).strip() for c in frame.columns]
    for column in schema:
        if column.name not in frame.columns:
            raise IngestionError(f"{path}: колонка '{column.name}' отсутствует в заголовке")
    if len(frame) == 0:
        raise IngestionError(f"{path}: таблица пуста (только заголовок)")

    targets = [c for c in schema if c.kind == ColumnKind.TARGET]
    if len(targets) != 1:
        raise IngestionError(f"{path}: в схеме должна быть ровно одна целевая колонка, найдено {len(targets)}")

    frame = frame[[c.name for c in schema]].copy()
    for column in schema:
        parse_numeric = column.kind == ColumnKind.NUMERIC or (
            column.kind == ColumnKind.TARGET and task == TaskType.REGRESSION
        )
        if parse_numeric:
            frame[column.name] = _parse_numeric_column(frame[column.name], column.name, path)

    logger.info(f"Загружено {len(frame)} строк из {path.name} ({len(schema)} колонок)")
    return RawTable(frame=frame.reset_index(drop=True), schema=schema, source=str(path),
                    task=task, classes=classes)


def _parse_numeric_column(values: pd.Series, name: str, path: Path) -> pd.Series:
    """Переводит колонку в float, ошибки разбора называют строку и колонку"""
    parsed = pd.to_numeric(values, errors='coerce')
    bad = parsed.isna() & values.notna()
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise IngestionError(
            f"{path}: строка {row + 2}, колонка '{name}': не число '{values.iloc[row]}'"
        )
    return parsed.astype(np.float64)


@dataclass
class DatasetEntry:
    """Запись реестра датасетов"""
    code: str
    csv: Path
    task: TaskType
    target: str
    categorical: List[str] = field(default_factory=list)
    log_transform: List[str] = field(default_factory=list)
    drop: List[str] = field(default_factory=list)
    numeric: Optional[List[str]] = None
    max_rows: Optional[int] = 1000
    classes: Optional[List[str]] = None

    def schema_for(self, header: List[str]) -> List[ColumnSchema]:
        """Строит схему по заголовку файла"""
        if self.numeric is not None:
            numeric = list(self.numeric)
        else:
            skip = set(self.categorical) | set(self.drop) | {self.target}
            numeric = [c for c in header if c not in skip]

        schema = [ColumnSchema(name=c, kind=ColumnKind.NUMERIC, log_transform=c in self.log_transform)
                  for c in numeric]
        schema += [ColumnSchema(name=c, kind=ColumnKind.CATEGORICAL) for c in self.categorical]
        schema.append(ColumnSchema(name=self.target, kind=ColumnKind.TARGET))
        return schema


class DatasetRegistry:
    """Реестр датасетов: код -> {csv, схема, max_rows, задача}"""

    def __init__(self, entries: Dict[str, DatasetEntry], path: Optional[Path] = None):
        self.entries = entries
        self.path = path

    @classmethod
    def from_json(cls, path) -> 'DatasetRegistry':
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"registry: файл {path} не найден")
        with open(path, 'r', encoding='utf-8') as f:
            raw = json.load(f)

        entries = {}
        for code, spec in raw.get('datasets', raw).items():
            try:
                entries[code] = DatasetEntry(
                    code=code,
                    csv=(path.parent / spec['csv']).resolve(),
                    task=TaskType(spec['task']),
                    target=spec['target'],
                    categorical=list(spec.get('categorical', [])),
                    log_transform=list(spec.get('log_transform', [])),
                    drop=list(spec.get('drop', [])),
                    numeric=spec.get('numeric'),
                    max_rows=spec.get('max_rows', 1000),
                    classes=spec.get('classes')
                )
            except (KeyError, ValueError) as e:
                raise ConfigurationError(f"registry.{code}: некорректная запись ({e})") from e
        return cls(entries, path)

    def __contains__(self, code: str) -> bool:
        return code in self.entries

    def get(self, code: str) -> DatasetEntry:
        if code not in self.entries:
            raise ConfigurationError(f"datasets: неизвестный код датасета '{code}'")
        return self.entries[code]

    def load(self, code: str) -> RawTable:
        """Загружает сырую таблицу датасета по коду"""
        entry = self.get(code)
        if not entry.csv.exists():
            raise IngestionError(f"{code}: файл {entry.csv} не найден")
        try:
            header = list(pd.read_csv(entry.csv, nrows=0, encoding='utf-8').columns)
        except pd.errors.EmptyDataError as e:
            raise IngestionError(f"{entry.csv}: пустой файл") from e
        header = [str(c).strip() for c in header]
        schema = entry.schema_for(header)
        return load_csv(entry.csv, schema, max_rows=entry.max_rows, task=entry.task,
                        classes=entry.classes)
