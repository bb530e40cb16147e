# modules/diagnostics/module.py
import logging
from typing import Optional

import numpy as np
import pandas as pd

from ...core.errors import ConfigurationError
from ...core.interfaces import IDiagnostics, ProcessingResult
from ..data import TaskType
from ..model import MlpModel
from .attribution_stats import attribution_monitor, attribution_stats
from .decomposition import decomposition_monitor
from .statistics import pairwise_wilcoxon, rank_aggregate

logger = logging.getLogger(__name__)

ATTRIBUTION_COLUMNS = ['epoch', 'L_spec', 'L_orth']
DECOMPOSITION_COLUMNS = ['epoch', 'err', 'err_bar', 'div', 'identity_gap']


class DiagnosticsModule(IDiagnostics):
    """Статистики атрибуций, кривые по эпохам и сравнение методов"""

    def __init__(self, alternative: str = 'less', wilcoxon_method: str = 'auto'):
        self.alternative = alternative
        self.wilcoxon_method = wilcoxon_method

    def attribution_stats(self, model: MlpModel, X_eval) -> ProcessingResult:
        stats = attribution_stats(model, X_eval)
        return ProcessingResult(success=True, data=stats, metadata=stats.to_dict())

    def monitor(self, mode: str, X_eval, y_eval=None,
                task: Optional[TaskType] = None) -> ProcessingResult:
        """
        Монитор для fit и колонки таблицы кривых

        Args:
            mode: attr - L_spec и L_orth; decomp - Err, Err̄, Div (только регрессия)
        """
        if mode == 'attr':
            monitor, columns, filename = attribution_monitor(X_eval), ATTRIBUTION_COLUMNS, 'attribution_curves.csv'
        elif mode == 'decomp':
            if y_eval is None:
                raise ConfigurationError("monitor: для разложения нужны цели y_eval")
            monitor = decomposition_monitor(X_eval, np.asarray(y_eval), task or TaskType.REGRESSION)
            columns, filename = DECOMPOSITION_COLUMNS, 'decomposition_curves.csv'
        else:
            raise ConfigurationError(f"monitor: неизвестный режим '{mode}'")
        return ProcessingResult(success=True, data=monitor,
                                metadata={'mode': mode, 'columns': columns, 'filename': filename})

    def compare(self, frame: pd.DataFrame, reference: str, alternative: Optional[str] = None,
                method: Optional[str] = None) -> ProcessingResult:
        """
        Ранги по датасетам и тесты reference против остальных методов

        Returns:
            data = {'ranks': длинная таблица рангов, 'tests': таблица тестов}
        """
        methods = list(dict.fromkeys(frame['method']))
        table = rank_aggregate(frame, methods=methods)
        if reference not in table.methods:
            raise ConfigurationError(f"reference_method: '{reference}' нет среди методов {table.methods}")
        tests = pairwise_wilcoxon(table, reference,
                                  alternative=alternative or self.alternative,
                                  method=method or self.wilcoxon_method)
        logger.debug(f"Сравнение: {len(table.datasets)} датасетов, {len(methods)} методов, эталон {reference}")
        return ProcessingResult(
            success=True,
            data={'ranks': table.to_frame(), 'tests': tests},
            metadata={'datasets': len(table.datasets), 'methods': methods,
                      'average_ranks': table.average_ranks.to_dict()}
        )
