# src/tangos_lab/core/orchestrator.py

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd

from ..modules.data import Dataset, DatasetRegistry, SplitPlan, TaskType, make_split, prepare_fold, preprocess
from ..modules.diagnostics import DiagnosticsModule
from ..modules.model import OutputConstraint, check_compatible, load_checkpoint, save_checkpoint
from ..modules.trainer import TrainerModule, build_model, describe_point, evaluate, protocol_grid
from ..utils import read_results, write_csv, write_json
from .config import ExperimentConfig
from .errors import ConfigurationError, IngestionError, UnsupportedTaskError
from .interfaces import IExperimentRunner, ProcessingResult, ResultRow

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ResultRow.columns()
SUMMARY_COLUMNS = ['dataset', 'method', 'n', 'mean', 'sd']


class ExperimentOrchestrator(IExperimentRunner):
    """Главный оркестратор экспериментов: train, benchmark, diagnose, report"""

    def __init__(self, config: ExperimentConfig, registry: Optional[DatasetRegistry] = None):
        self.config = config
        self.output_dir = Path(config.output_dir)
        self._registry = registry
        self._prepared: Dict[Tuple[str, int], Tuple[Dataset, SplitPlan]] = {}
        self._lock = threading.Lock()
        self.trainer = TrainerModule()
        self.diagnostics = DiagnosticsModule(config.alternative, config.wilcoxon_method)
        logger.info(f"ExperimentOrchestrator: вывод в {self.output_dir}, конфигурация {config.config_hash()[:12]}")

    # ============== ДАННЫЕ ==============

    @property
    def registry(self) -> DatasetRegistry:
        if self._registry is None:
            self._registry = DatasetRegistry.from_json(self.config.registry)
        return self._registry

    def _require_datasets(self) -> List[str]:
        if not self.config.datasets:
            raise ConfigurationError("datasets: пустой список")
        for code in self.config.datasets:
            self.registry.get(code)
        return self.config.datasets

    def prepare(self, code: str, seed: int) -> Tuple[Dataset, SplitPlan]:
        """Датасет и разбиение для (код, сид); статистики по строкам CV"""
        key = (code, seed)
        with self._lock:
            if key not in self._prepared:
                raw = self.registry.load(code)
                split = make_split(raw.n_rows, self.config.split_seed(code, seed))
                dataset, _ = preprocess(raw, split=split)
                self._prepared[key] = (dataset, split)
                logger.info(f"{code} (сид {seed}): {dataset.n_rows} строк, {dataset.n_features} признаков, "
                            f"тест {len(split.test_indices)}")
            return self._prepared[key]

    def _write_manifest(self, command: str):
        write_json(self.config.manifest(command), self.output_dir / 'manifest.json')

    # ============== TRAIN ==============

    def train(self) -> ProcessingResult:
        """fit на train/validation строках фолда, история и чекпоинт по каждому датасету"""
        codes = self._require_datasets()
        self._write_manifest('train')
        seed = self.config.seeds[0]
        outputs = {}

        for code in codes:
            dataset, split = self.prepare(code, seed)
            train_idx, val_idx = split.fold(self.config.fold)
            fold_dataset = prepare_fold(dataset, train_idx)
            train_config = self.config.train_config(seed=self.config.cell_seed(code, 'train', seed))

            fitted = self.trainer.fit_fold(fold_dataset, train_idx, val_idx, train_config,
                                           guard_indices=split.test_indices)
            if not fitted.success:
                return ProcessingResult(success=False, data=outputs, metadata={'dataset': code},
                                        error=f"{code}: {fitted.error}")
            result = fitted.data
            test_metric = evaluate(result.model, fold_dataset, split.test_indices)

            target = self.output_dir / code
            history_path = write_csv(result.history_frame(), target / 'history.csv')
            summary = {
                'dataset': code,
                'fold': self.config.fold,
                'best_epoch': result.best_epoch,
                'best_val_loss': result.best_val_loss,
                'test_metric': test_metric,
                'stopped_early': result.stopped_early,
                'config_hash': self.config.config_hash()
            }
            checkpoint_path = save_checkpoint(result.model, target / 'model.json', metadata=summary)
            write_json(summary, target / 'train_result.json')
            outputs[code] = {'history': str(history_path), 'checkpoint': str(checkpoint_path)}
            logger.info(f"{code}: лучшая эпоха {result.best_epoch}, тест {test_metric:.5f}")

        return ProcessingResult(success=True, data=outputs, metadata={'datasets': len(codes)})

    # ============== BENCHMARK ==============

    def _run_cell(self, cell: Tuple[str, str, int]) -> ProcessingResult:
        """Полный протокол CV для одной ячейки (датасет, метод, сид)"""
        code, method, seed = cell
        started = time.time()
        try:
            dataset, split = self.prepare(code, seed)
            base = self.config.train_config(seed=self.config.cell_seed(code, method, seed))
            grid = protocol_grid(method, base, learning_rates=self.config.learning_rates)
            selected = self.trainer.select(dataset, split, grid)
            if selected.success:
                result = selected.data
                row = ResultRow(dataset=code, method=method, seed=seed, **describe_point(result.selected),
                                metric=result.test_metric, seconds=time.time() - started)
            else:
                row = ResultRow.failed_cell(code, method, seed, selected.error, seconds=time.time() - started)
        except Exception as e:
            logger.error(f"Ячейка {code}/{method}/сид {seed} завершилась ошибкой: {e}")
            row = ResultRow.failed_cell(code, method, seed, e, seconds=time.time() - started)

        cell_frame = pd.DataFrame([row.to_dict()], columns=RESULT_COLUMNS)
        write_csv(cell_frame, self.output_dir / 'cells' / f"{code}__{method}__seed{seed}.csv")
        return ProcessingResult(success=not row.failed, data=row, metadata={'cell': cell},
                                error=row.extra if row.failed else None)

    def benchmark(self) -> ProcessingResult:
        """Датасеты × методы × сиды; results.csv и summary.csv"""
        codes = self._require_datasets()
        self._write_manifest('benchmark')
        for code in codes:
            for seed in self.config.seeds:
                self.prepare(code, seed)

        cells = [(code, method, seed) for code in codes
                 for method in self.config.methods for seed in self.config.seeds]
        logger.info(f"Benchmark: {len(cells)} ячеек, потоков {self.config.jobs}")
        if self.config.jobs > 1:
            with ThreadPoolExecutor(max_workers=self.config.jobs) as executor:
                results = list(executor.map(self._run_cell, cells))
        else:
            results = [self._run_cell(cell) for cell in cells]

        frame = pd.DataFrame([r.data.to_dict() for r in results], columns=RESULT_COLUMNS)
        results_path = write_csv(frame, self.output_dir / 'results.csv')
        summary_path = write_csv(summarize(frame), self.output_dir / 'summary.csv')

        failed = [r for r in results if not r.success]
        if failed:
            logger.error(f"Ошибок в {len(failed)} из {len(cells)} ячеек")
        return ProcessingResult(
            success=not failed,
            data={'results': str(results_path), 'summary': str(summary_path)},
            metadata={'cells': len(cells), 'failed': len(failed)},
            error=f"{len(failed)} ячеек завершились ошибкой" if failed else None
        )

    # ============== DIAGNOSE ==============

    def diagnose(self) -> ProcessingResult:
        """Кривые атрибуций или разложения по эпохам, либо профиль стоимости pairs_M"""
        code = self._require_datasets()[0]
        seed = self.config.seeds[0]
        mode = self.config.diagnose_mode
        self._write_manifest(f"diagnose:{mode}")
        dataset, split = self.prepare(code, seed)
        train_config = self.config.train_config(seed=self.config.cell_seed(code, f"diagnose-{mode}", seed))

        if mode == 'pairs':
            profile = self.trainer.profile_pairs(dataset, split.cv_indices, self.config.pair_counts,
                                                 train_config).data
            frame = profile.to_frame()
            frame['slope'] = profile.slope
            frame['intercept'] = profile.intercept
            frame['r_squared'] = profile.r_squared
            path = write_csv(frame, self.output_dir / code / 'pair_timing.csv')
            return ProcessingResult(success=True, data={'pair_timing': str(path)},
                                    metadata={'r_squared': profile.r_squared})

        train_idx, val_idx = split.fold(self.config.fold)
        fold_dataset = prepare_fold(dataset, train_idx)
        X_eval = fold_dataset.X[split.test_indices]
        y_eval = fold_dataset.y[split.test_indices]

        initial = None
        if self.config.checkpoint:
            initial, _ = load_checkpoint(self.config.checkpoint)
            check_compatible(initial, fold_dataset.n_features, fold_dataset.output_width)

        if mode == 'decomp':
            if fold_dataset.task != TaskType.REGRESSION:
                raise UnsupportedTaskError(f"{code}: разложение ансамбля определено только для регрессии")
            if initial is None:
                train_config = replace(train_config, output_constraint=OutputConstraint.SIMPLEX)

        curves = self.diagnostics.monitor(mode, X_eval, y_eval, fold_dataset.task)
        monitor = curves.data

        start = initial if initial is not None else build_model(fold_dataset, train_config)
        rows = [{'epoch': 0, **monitor(0, start)}]
        fitted = self.trainer.fit_fold(fold_dataset, train_idx, val_idx, train_config, monitors=[monitor],
                                       guard_indices=split.test_indices, initial_model=initial)
        if not fitted.success:
            return ProcessingResult(success=False, data=None, metadata={'dataset': code},
                                    error=f"{code}: {fitted.error}")
        result = fitted.data
        rows.extend(result.monitors)

        path = write_csv(pd.DataFrame(rows, columns=curves.metadata['columns']),
                         self.output_dir / code / curves.metadata['filename'])
        return ProcessingResult(success=True, data={mode: str(path)},
                                metadata={'epochs': len(result.history), 'best_epoch': result.best_epoch})

    # ============== REPORT ==============

    def _task_of(self, code: str) -> str:
        try:
            if code in self.registry:
                return self.registry.get(code).task.value
        except ConfigurationError:
            pass
        return 'all'

    def report(self, results_paths: List[str]) -> ProcessingResult:
        """Ранги по задачам и тесты Вилкоксона против эталонного метода"""
        frame = read_results(results_paths)
        missing = set(RESULT_COLUMNS) - set(frame.columns)
        if missing:
            raise IngestionError(f"В результатах нет колонок {sorted(missing)}")
        self._write_manifest('report')

        frame['task'] = [self._task_of(str(code)) for code in frame['dataset']]
        rank_frames, test_frames = [], []
        for task, group in frame.groupby('task', sort=True):
            compared = self.diagnostics.compare(group, self.config.reference_method)
            ranks, tests = compared.data['ranks'], compared.data['tests']
            ranks.insert(0, 'task', task)
            rank_frames.append(ranks)
            tests.insert(0, 'task', task)
            test_frames.append(tests)

        rank_path = write_csv(pd.concat(rank_frames, ignore_index=True), self.output_dir / 'rank_table.csv')
        test_path = write_csv(pd.concat(test_frames, ignore_index=True), self.output_dir / 'wilcoxon.csv')
        return ProcessingResult(success=True,
                                data={'rank_table': str(rank_path), 'wilcoxon': str(test_path)},
                                metadata={'rows': len(frame)})


def summarize(frame: pd.DataFrame) -> pd.DataFrame:
    """Среднее и выборочное стандартное отклонение метрики по (датасет, метод)"""
    grouped = frame.groupby(['dataset', 'method'], sort=False)['metric']
    summary = grouped.agg(n='count', mean='mean', sd='std').reset_index()
    return summary[SUMMARY_COLUMNS]
