"""
Диагностика: статистики атрибуций, разложение ансамбля, тест Вилкоксона, ранги
"""

from .diagnostics_models import (
    AttributionStats, DecompositionRecord, SimplexOutputHead, RankTable, WilcoxonResult,
    PairTimingProfile
)
from .attribution_stats import attribution_stats, attribution_monitor, attribution_stats_per_sample
from .decomposition import decomposition_terms, decompose_ensemble, decomposition_monitor
from .statistics import wilcoxon_test, wilcoxon_signed_rank, rank_aggregate, pairwise_wilcoxon
from .module import DiagnosticsModule, ATTRIBUTION_COLUMNS, DECOMPOSITION_COLUMNS

__all__ = [
    'AttributionStats',
    'DecompositionRecord',
    'SimplexOutputHead',
    'RankTable',
    'WilcoxonResult',
    'PairTimingProfile',
    'attribution_stats',
    'attribution_monitor',
    'attribution_stats_per_sample',
    'decomposition_terms',
    'decompose_ensemble',
    'decomposition_monitor',
    'wilcoxon_test',
    'wilcoxon_signed_rank',
    'rank_aggregate',
    'pairwise_wilcoxon',
    'DiagnosticsModule',
    'ATTRIBUTION_COLUMNS',
    'DECOMPOSITION_COLUMNS'
]
