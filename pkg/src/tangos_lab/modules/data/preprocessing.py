# modules/data/preprocessing.py
"""
Предобработка табличных данных.

Порядок: (1) медианная импутация числовых колонок, (2) log1p для отмеченных
колонок, (3) стандартизация, (4) one-hot для категориальных. Все статистики
считаются только по train-строкам.
"""
import logging
from dataclasses import replace
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from ...core.errors import PreprocessingError
from .data_models import (
    MISSING_LEVEL, ColumnKind, ColumnSchema, Dataset, RawTable,
    SplitPlan, StandardizationStats, TaskType
)

logger = logging.getLogger(__name__)

CONSTANT_SD_THRESHOLD = 1e-12


def preprocess(raw: RawTable, schema: Optional[List[ColumnSchema]] = None,
               split: Optional[SplitPlan] = None,
               train_indices: Optional[np.ndarray] = None) -> Tuple[Dataset, StandardizationStats]:
    """
    Полный конвейер предобработки

    Args:
        raw: сырая таблица
        schema: схема (по умолчанию raw.schema)
        split: разбиение; train-строки по умолчанию - все строки CV (80%)
        train_indices: явный набор train-строк (например, train-часть фолда)

    Returns:
        (Dataset, StandardizationStats)
    """
    schema = schema or raw.schema
    if train_indices is None:
        if split is None:
            raise PreprocessingError("preprocess: нужен split или train_indices")
        train_indices = split.cv_indices
    train_indices = np.asarray(train_indices, dtype=np.int64)
    _check_indices(train_indices, raw.n_rows)
    if split is not None:
        _check_indices(split.test_indices, raw.n_rows)

    stats = fit_stats(raw, schema, train_indices)
    dataset = apply_stats(raw, schema, stats)
    return dataset, stats


def _check_indices(indices: np.ndarray, n_rows: int):
    if len(indices) == 0:
        raise PreprocessingError("preprocess: пустой набор train-строк")
    if indices.min() < 0 or indices.max() >= n_rows:
        raise PreprocessingError(f"preprocess: индексы вне диапазона [0, {n_rows})")


def _numeric_columns(schema: List[ColumnSchema]) -> List[ColumnSchema]:
    return [c for c in schema if c.kind == ColumnKind.NUMERIC]


def _categorical_columns(schema: List[ColumnSchema]) -> List[ColumnSchema]:
    return [c for c in schema if c.kind == ColumnKind.CATEGORICAL]


def _target_column(schema: List[ColumnSchema]) -> ColumnSchema:
    targets = [c for c in schema if c.kind == ColumnKind.TARGET]
    if len(targets) != 1:
        raise PreprocessingError(f"Схема должна содержать ровно одну целевую колонку, найдено {len(targets)}")
    return targets[0]


def _category_values(values: pd.Series) -> np.ndarray:
    """Строковые значения категорий, пропуск -> отдельный уровень"""
    return np.array([MISSING_LEVEL if pd.isna(v) else str(v).strip() for v in values], dtype=object)


def _imputed_logged(raw: RawTable, column: ColumnSchema, median: float) -> np.ndarray:
    values = raw.frame[column.name].to_numpy(dtype=np.float64, na_value=np.nan)
    values = np.where(np.isnan(values), median, values)
    if column.log_transform:
        if np.any(values <= -1.0):
            raise PreprocessingError(f"Колонка '{column.name}': log1p не определен для значений <= -1")
        values = np.log1p(values)
    return values


def fit_stats(raw: RawTable, schema: List[ColumnSchema], train_indices: np.ndarray) -> StandardizationStats:
    """Считает медианы, средние, sd и уровни категорий по train-строкам"""
    numeric = _numeric_columns(schema)
    medians = {}
    means, sds = [], []
    for column in numeric:
        train_values = raw.frame[column.name].to_numpy(dtype=np.float64, na_value=np.nan)[train_indices]
        if np.all(np.isnan(train_values)):
            raise PreprocessingError(f"Колонка '{column.name}': все train-значения пропущены")
        medians[column.name] = float(np.nanmedian(train_values))

        values = _imputed_logged(raw, column, medians[column.name])[train_indices]
        mean = float(np.mean(values))
        sd = float(np.std(values))
        if sd < CONSTANT_SD_THRESHOLD:
            logger.warning(f"Колонка '{column.name}' константна на train, sd := 1")
            sd = 1.0
        means.append(mean)
        sds.append(sd)

    levels = {}
    for column in _categorical_columns(schema):
        train_values = _category_values(raw.frame[column.name])[train_indices]
        levels[column.name] = sorted(set(train_values.tolist()))

    target_mean, target_sd = 0.0, 1.0
    target = _target_column(schema)
    if raw.task == TaskType.REGRESSION:
        y = raw.frame[target.name].to_numpy(dtype=np.float64, na_value=np.nan)
        if np.any(np.isnan(y)):
            row = int(np.flatnonzero(np.isnan(y))[0])
            raise PreprocessingError(f"Целевая колонка '{target.name}': пропуск в строке {row}")
        target_mean = float(np.mean(y[train_indices]))
        target_sd = float(np.std(y[train_indices]))
        if target_sd < CONSTANT_SD_THRESHOLD:
            target_sd = 1.0

    return StandardizationStats(
        mean=np.array(means, dtype=np.float64),
        sd=np.array(sds, dtype=np.float64),
        medians=medians,
        category_levels=levels,
        numeric_columns=[c.name for c in numeric],
        target_mean=target_mean,
        target_sd=target_sd,
        train_indices=np.array(train_indices, dtype=np.int64)
    )


def apply_stats(raw: RawTable, schema: List[ColumnSchema], stats: StandardizationStats) -> Dataset:
    """
    Применяет сохраненные статистики ко всем строкам таблицы

    Повторное применение к тем же строкам воспроизводит матрицу бит-в-бит.
    """
    blocks, names = [], []
    for i, column in enumerate(_numeric_columns(schema)):
        values = _imputed_logged(raw, column, stats.medians[column.name])
        blocks.append(((values - stats.mean[i]) / stats.sd[i]).reshape(-1, 1))
        names.append(column.name)

    encoded_schema = []
    for column in schema:
        if column.kind != ColumnKind.CATEGORICAL:
            encoded_schema.append(replace(column))
            continue
        levels = stats.category_levels[column.name]
        values = _category_values(raw.frame[column.name])
        one_hot = np.zeros((raw.n_rows, len(levels)), dtype=np.float64)
        index = {level: j for j, level in enumerate(levels)}
        for row, value in enumerate(values):
            j = index.get(value)
            if j is not None:
                one_hot[row, j] = 1.0
        blocks.append(one_hot)
        names.extend(f"{column.name}={level}" for level in levels)
        encoded_schema.append(replace(column, category_levels=list(levels)))

    X = np.hstack(blocks) if blocks else np.zeros((raw.n_rows, 0))
    X = np.ascontiguousarray(X, dtype=np.float64)

    target = _target_column(schema)
    classes = None
    n_classes = 0
    if raw.task == TaskType.REGRESSION:
        y = raw.frame[target.name].to_numpy(dtype=np.float64, na_value=np.nan)
        y = (y - stats.target_mean) / stats.target_sd
    else:
        y, classes = _encode_classes(raw, target)
        n_classes = len(classes)

    return Dataset(
        X=X,
        y=y,
        task=raw.task,
        schema=encoded_schema,
        n_classes=n_classes,
        feature_names=names,
        classes=classes,
        raw=raw,
        stats=stats
    )


def _encode_classes(raw: RawTable, target: ColumnSchema):
    """Метки классов -> индексы"""
    labels = raw.frame[target.name]
    if labels.isna().any():
        row = int(np.flatnonzero(labels.isna().to_numpy())[0])
        raise PreprocessingError(f"Целевая колонка '{target.name}': пропуск в строке {row}")
    labels = [str(v).strip() for v in labels]
    classes = [str(c) for c in raw.classes] if raw.classes else sorted(set(labels))
    index = {c: i for i, c in enumerate(classes)}
    unknown = [v for v in labels if v not in index]
    if unknown:
        raise PreprocessingError(f"Целевая колонка '{target.name}': неизвестный класс '{unknown[0]}'")
    return np.array([index[v] for v in labels], dtype=np.int64), classes


def prepare_fold(dataset: Dataset, train_indices: np.ndarray) -> Dataset:
    """
    Датасет для фолда: статистики заново по train-строкам фолда

    Если сырая таблица недоступна (синтетические данные), возвращает исходный.
    """
    if dataset.raw is None:
        return dataset
    fold_dataset, _ = preprocess(dataset.raw, dataset.raw.schema, train_indices=train_indices)
    return fold_dataset
