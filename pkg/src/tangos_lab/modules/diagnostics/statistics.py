# modules/diagnostics/statistics.py
"""
Сравнение методов: знаково-ранговый тест Вилкоксона и агрегирование рангов
"""
import logging
from typing import Dict, Iterable, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy.stats import norm, rankdata

from ...core.errors import (
    ConfigurationError, DegenerateDataError, DomainError, IncompleteGridError, ShapeError
)
from .diagnostics_models import RankTable, WilcoxonResult

logger = logging.getLogger(__name__)

MIN_PAIRS = 5
EXACT_MAX_NONZERO = 15
DIFF_DECIMALS = 12
ALTERNATIVES = ('less', 'greater')
METHODS = ('auto', 'exact', 'approx')


# ============== ВИЛКОКСОН ==============

def _signed_ranks(diffs: np.ndarray):
    """Ранги |d| с учетом нулей (Pratt), затем нули отбрасываются"""
    ranks = rankdata(np.abs(diffs), method='average')
    nonzero = diffs != 0
    return ranks[nonzero], diffs[nonzero]


def _exact_counts(doubled_ranks: np.ndarray) -> np.ndarray:
    """Число подмножеств рангов с каждой суммой (в удвоенных рангах)"""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    return counts


def _exact_p(ranks: np.ndarray, statistic: float, alternative: str) -> float:
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    counts = _exact_counts(doubled)
    t2 = int(round(2.0 * statistic))
    if alternative == 'less':
        tail = counts[:t2 + 1].sum()
    else:
        tail = counts[t2:].sum()
    return float(tail / counts.sum())


def _approx_p(ranks: np.ndarray, statistic: float, alternative: str):
    mean = ranks.sum() / 2.0
    sd = np.sqrt((ranks ** 2).sum() / 4.0)
    z = float((statistic - mean) / sd)
    p = norm.cdf(z) if alternative == 'less' else norm.sf(z)
    return float(p), z


def wilcoxon_test(paired_a, paired_b, alternative: str = 'less',
                  method: str = 'auto') -> WilcoxonResult:
    """
    Односторонний знаково-ранговый тест для парных выборок

    Разности d = a − b округляются до 12 знаков, ранги |d| средние при
    совпадениях, нулевые разности учитываются по Pratt. Статистика T+ -
    сумма рангов положительных разностей.

    Args:
        paired_a, paired_b: метрики двух методов на одних и тех же датасетах
        alternative: less - a систематически меньше b; greater - больше
        method: auto (точное распределение при <= 15 ненулевых разностях),
                exact или approx (нормальное приближение без поправки на непрерывность)

    Returns:
        WilcoxonResult с p-value в (0, 1]
    """
    if alternative not in ALTERNATIVES:
        raise ConfigurationError(f"alternative: ожидается одно из {ALTERNATIVES}, получено {alternative!r}")
    if method not in METHODS:
        raise ConfigurationError(f"method: ожидается одно из {METHODS}, получено {method!r}")

    a = np.asarray(paired_a, dtype=np.float64).reshape(-1)
    b = np.asarray(paired_b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise ShapeError(f"wilcoxon: длины {a.size} и {b.size} не совпадают")
    if a.size < MIN_PAIRS:
        raise DomainError(f"wilcoxon: нужно минимум {MIN_PAIRS} пар, получено {a.size}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise DomainError("wilcoxon: метрики содержат NaN или Inf")

    diffs = np.round(a - b, DIFF_DECIMALS)
    if not np.any(diffs):
        raise DegenerateDataError("wilcoxon: все разности нулевые")

    ranks, nonzero = _signed_ranks(diffs)
    statistic = float(ranks[nonzero > 0].sum())
    n_zero = int(diffs.size - nonzero.size)

    use_exact = method == 'exact' or (method == 'auto' and nonzero.size <= EXACT_MAX_NONZERO)
    z = None
    if use_exact:
        p_value = _exact_p(ranks, statistic, alternative)
    else:
        p_value, z = _approx_p(ranks, statistic, alternative)
    p_value = float(np.clip(p_value, np.finfo(np.float64).tiny, 1.0))

    return WilcoxonResult(
        statistic=statistic,
        p_value=p_value,
        n_nonzero=int(nonzero.size),
        n_zero=n_zero,
        method='exact' if use_exact else 'approx',
        alternative=alternative,
        z=z
    )


def wilcoxon_signed_rank(paired_a, paired_b, alternative: str = 'less',
                         method: str = 'auto') -> float:
    """p-value одностороннего теста Вилкоксона"""
    return wilcoxon_test(paired_a, paired_b, alternative, method).p_value


# ============== РАНГИ ==============

ResultsInput = Union[pd.DataFrame, Mapping[str, Mapping[str, float]]]


def _to_wide(results: ResultsInput, metric_column: str) -> pd.DataFrame:
    if isinstance(results, pd.DataFrame):
        missing_columns = {'dataset', 'method', metric_column} - set(results.columns)
        if missing_columns:
            raise ConfigurationError(f"rank_aggregate: нет колонок {sorted(missing_columns)}")
        grouped = results.groupby(['dataset', 'method'], sort=False)[metric_column].mean()
        return grouped.unstack('method')
    return pd.DataFrame.from_dict({d: dict(row) for d, row in results.items()}, orient='index')


def rank_aggregate(results: ResultsInput,
                   datasets: Optional[Sequence[str]] = None,
                   methods: Optional[Sequence[str]] = None,
                   metric_column: str = 'metric') -> RankTable:
    """
    Ранги методов по каждому датасету и средний ранг

    Args:
        results: длинная таблица (dataset, method, metric; повторы по сидам
                 усредняются) или словарь {dataset: {method: metric}}
        datasets, methods: ожидаемая сетка и порядок (по умолчанию - все встреченные)
        metric_column: имя колонки метрики в длинной таблице

    Returns:
        RankTable; меньшая метрика - ранг 1, совпадения получают средний ранг
    """
    wide = _to_wide(results, metric_column)
    datasets = list(datasets) if datasets is not None else list(wide.index)
    methods = list(methods) if methods is not None else list(wide.columns)
    if not datasets or not methods:
        raise IncompleteGridError([])
    wide = wide.reindex(index=datasets, columns=methods).astype(np.float64)

    missing = [(d, m) for d in datasets for m in methods if not np.isfinite(wide.at[d, m])]
    if missing:
        raise IncompleteGridError(missing)

    ranks = pd.DataFrame(rankdata(wide.to_numpy(), method='average', axis=1),
                         index=wide.index, columns=wide.columns)
    average = ranks.mean(axis=0)
    logger.info(f"Средние ранги по {len(datasets)} датасетам: "
                f"{', '.join(f'{m}={r:.2f}' for m, r in average.items())}")
    return RankTable(metrics=wide, ranks=ranks, average_ranks=average)


def pairwise_wilcoxon(table: RankTable, reference: str,
                      alternative: str = 'less',
                      method: str = 'auto',
                      others: Optional[Iterable[str]] = None) -> pd.DataFrame:
    """
    Тест reference против каждого другого метода по датасетам таблицы

    Returns:
        DataFrame: reference, method, statistic, p_value, n_nonzero, test
    """
    if reference not in table.methods:
        raise ConfigurationError(f"reference: метод {reference!r} отсутствует в таблице")
    others = [m for m in (others or table.methods) if m != reference]

    rows = []
    for other in others:
        row: Dict[str, object] = {'reference': reference, 'method': other}
        try:
            result = wilcoxon_test(table.metrics[reference], table.metrics[other], alternative, method)
            row.update(statistic=result.statistic, p_value=result.p_value,
                       n_nonzero=result.n_nonzero, test=result.method)
        except (DegenerateDataError, DomainError) as e:
            logger.warning(f"Вилкоксон {reference} против {other} не определен: {e}")
            row.update(statistic=np.nan, p_value=np.nan, n_nonzero=0, test='undefined')
        rows.append(row)
    return pd.DataFrame(rows, columns=['reference', 'method', 'statistic', 'p_value', 'n_nonzero', 'test'])
