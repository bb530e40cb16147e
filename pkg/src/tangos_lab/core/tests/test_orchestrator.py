# core/tests/test_orchestrator.py

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from ..config import ExperimentConfig
from ..errors import CheckpointError, ConfigurationError, IncompleteGridError, UnsupportedTaskError
from ..interfaces import ResultRow
from ..orchestrator import RESULT_COLUMNS, SUMMARY_COLUMNS, ExperimentOrchestrator, summarize
from ...modules.diagnostics import ATTRIBUTION_COLUMNS, DECOMPOSITION_COLUMNS
from ...modules.diagnostics.tests.test_diagnostics import METHODS, REGRESSION_TABLE


def orchestrator(config_path, **changes):
    config = ExperimentConfig.from_json(config_path)
    if changes:
        config = ExperimentConfig.from_dict({**config.to_dict(), **changes})
    return ExperimentOrchestrator(config)


def write_table_results(path, table, methods=METHODS, seeds=(0,)):
    rows = []
    for dataset, values in table.items():
        for method, value in zip(methods, values):
            for seed in seeds:
                rows.append({'dataset': dataset, 'method': method, 'seed': seed, 'lr': 0.001,
                             'lambda1': 0.0, 'lambda2': 0.0, 'extra': '', 'metric': value, 'seconds': 1.0})
    pd.DataFrame(rows, columns=RESULT_COLUMNS).to_csv(path, index=False)
    return path


class TestTrain:
    """Тесты команды train"""

    def test_writes_outputs(self, lab, tmp_path):
        """Тест: история, чекпоинт, итог и манифест"""
        result = orchestrator(lab()).train()
        assert result.success
        out = tmp_path / 'out'
        history = pd.read_csv(out / 'REG' / 'history.csv')
        assert list(history.columns) == ['epoch', 'train_loss', 'val_loss', 'L_spec', 'L_orth']
        assert 1 <= len(history) <= 4
        summary = json.loads((out / 'REG' / 'train_result.json').read_text(encoding='utf-8'))
        assert summary['best_epoch'] in history['epoch'].tolist()
        assert np.isfinite(summary['test_metric'])
        assert (out / 'REG' / 'model.json').exists()
        manifest = json.loads((out / 'manifest.json').read_text(encoding='utf-8'))
        assert manifest['command'] == 'train'

    def test_rerun_is_byte_identical(self, lab, tmp_path):
        """Тест: повтор с тем же сидом дает побитово ту же историю"""
        config_path = lab()
        orchestrator(config_path, output_dir=str(tmp_path / 'first')).train()
        orchestrator(config_path, output_dir=str(tmp_path / 'second')).train()
        first = (tmp_path / 'first' / 'REG' / 'history.csv').read_bytes()
        second = (tmp_path / 'second' / 'REG' / 'history.csv').read_bytes()
        assert first == second

    def test_unknown_dataset(self, lab):
        """Тест неизвестного кода датасета"""
        with pytest.raises(ConfigurationError, match="NOPE"):
            orchestrator(lab(datasets=['NOPE'])).train()

    def test_missing_registry(self, lab):
        """Тест отсутствующего реестра"""
        with pytest.raises(ConfigurationError, match="registry"):
            orchestrator(lab(registry='missing.json')).train()


class TestBenchmark:
    """Тесты команды benchmark"""

    def test_grid_of_cells(self, lab, tmp_path):
        """Тест: 1 датасет × 2 метода × 2 сида = 4 строки, сводка по выборочному sd"""
        result = orchestrator(lab(methods=['baseline', 'NoReg'], seeds=[0, 1])).benchmark()
        assert result.success
        assert result.metadata == {'cells': 4, 'failed': 0}

        out = tmp_path / 'out'
        frame = pd.read_csv(out / 'results.csv')
        assert list(frame.columns) == RESULT_COLUMNS
        assert len(frame) == 4
        assert np.all(np.isfinite(frame['metric']))
        assert len(list((out / 'cells').glob('*.csv'))) == 4

        summary = pd.read_csv(out / 'summary.csv')
        assert list(summary.columns) == SUMMARY_COLUMNS
        for _, row in summary.iterrows():
            values = frame.loc[frame['method'] == row['method'], 'metric'].to_numpy()
            assert row['n'] == 2
            assert row['mean'] == pytest.approx(values.mean())
            assert row['sd'] == pytest.approx(np.std(values, ddof=1))

    def test_parallel_matches_serial(self, lab, tmp_path):
        """Тест: потоки не меняют метрики"""
        config_path = lab(methods=['baseline', 'NoReg'])
        orchestrator(config_path, output_dir=str(tmp_path / 'serial')).benchmark()
        orchestrator(config_path, output_dir=str(tmp_path / 'parallel'), jobs=2).benchmark()
        serial = pd.read_csv(tmp_path / 'serial' / 'results.csv')
        parallel = pd.read_csv(tmp_path / 'parallel' / 'results.csv')
        np.testing.assert_array_equal(serial['metric'].to_numpy(), parallel['metric'].to_numpy())

    def test_failed_cell_is_marked(self, lab, tmp_path, monkeypatch):
        """Тест: упавшая ячейка дает строку с пустой метрикой, остальные считаются"""
        from ...modules.trainer import cross_validation as cross_validation_module
        original = cross_validation_module.cross_validate

        def flaky(dataset, split, grid, jobs=1):
            if grid[0].seed == failing_seed:
                raise RuntimeError("boom")
            return original(dataset, split, grid, jobs)

        runner = orchestrator(lab(methods=['baseline', 'NoReg']))
        failing_seed = runner.config.cell_seed('REG', 'NoReg', 0)
        monkeypatch.setattr(cross_validation_module, 'cross_validate', flaky)
        result = runner.benchmark()

        assert not result.success
        assert result.metadata['failed'] == 1
        frame = pd.read_csv(tmp_path / 'out' / 'results.csv')
        failed = frame[frame['method'] == 'NoReg'].iloc[0]
        assert np.isnan(failed['metric'])
        assert failed['extra'].startswith('FAILED')
        assert np.isfinite(frame.loc[frame['method'] == 'baseline', 'metric']).all()


class TestDiagnose:
    """Тесты команды diagnose"""

    def test_attribution_curves(self, lab, tmp_path):
        """Тест кривых атрибуций: строка эпохи 0 и по строке на эпоху"""
        result = orchestrator(lab()).diagnose()
        assert result.success
        frame = pd.read_csv(tmp_path / 'out' / 'REG' / 'attribution_curves.csv')
        assert list(frame.columns) == ATTRIBUTION_COLUMNS
        assert frame['epoch'].tolist() == list(range(result.metadata['epochs'] + 1))
        assert (frame['L_spec'] >= 0).all()
        assert (frame['L_orth'] >= 0).all()

    def test_decomposition_identity(self, lab, tmp_path):
        """Тест кривых разложения: тождество err = err_bar - div"""
        orchestrator(lab(diagnose_mode='decomp')).diagnose()
        frame = pd.read_csv(tmp_path / 'out' / 'REG' / 'decomposition_curves.csv')
        assert list(frame.columns) == DECOMPOSITION_COLUMNS
        assert (frame['identity_gap'] < 1e-9).all()
        assert (frame['div'] >= 0).all()
        np.testing.assert_allclose(frame['err'], frame['err_bar'] - frame['div'], atol=1e-9)

    def test_decomposition_rejects_classification(self, lab):
        """Тест: разложение на классификации - ошибка"""
        with pytest.raises(UnsupportedTaskError):
            orchestrator(lab(datasets=['CLS'], diagnose_mode='decomp')).diagnose()

    def test_pair_timing(self, lab, tmp_path):
        """Тест профиля стоимости по pairs_M"""
        result = orchestrator(lab(diagnose_mode='pairs', pair_counts=[2, 6])).diagnose()
        frame = pd.read_csv(tmp_path / 'out' / 'REG' / 'pair_timing.csv')
        assert frame['pairs_M'].tolist() == [2, 6]
        assert (frame['seconds'] > 0).all()
        assert {'slope', 'intercept', 'r_squared'} <= set(frame.columns)
        assert 'r_squared' in result.metadata

    def test_starts_from_checkpoint(self, lab, tmp_path):
        """Тест: диагностика от сохраненной модели, эпоха 0 совпадает с ее атрибуциями"""
        config_path = lab()
        orchestrator(config_path).train()
        checkpoint = tmp_path / 'out' / 'REG' / 'model.json'
        runner = orchestrator(config_path, checkpoint=str(checkpoint), output_dir=str(tmp_path / 'diag'))
        assert runner.diagnose().success
        frame = pd.read_csv(tmp_path / 'diag' / 'REG' / 'attribution_curves.csv')
        assert frame['epoch'].iloc[0] == 0

    def test_incompatible_checkpoint(self, lab, tmp_path):
        """Тест чекпоинта другой размерности"""
        orchestrator(lab(datasets=['CLS'])).train()
        checkpoint = tmp_path / 'out' / 'CLS' / 'model.json'
        with pytest.raises(CheckpointError):
            orchestrator(lab(checkpoint=str(checkpoint))).diagnose()


class TestReport:
    """Тесты команды report"""

    def test_reference_table(self, lab, tmp_path):
        """Тест отчета по эталонной таблице регрессии"""
        results = write_table_results(tmp_path / 'table.csv', REGRESSION_TABLE)
        runner = orchestrator(lab(reference_method='TANGOS'))
        assert runner.report([str(results)]).success

        ranks = pd.read_csv(tmp_path / 'out' / 'rank_table.csv')
        averages = ranks[ranks['dataset'] == 'avg_rank'].set_index('method')['rank']
        assert averages['TANGOS'] == pytest.approx(1.9)
        assert averages.idxmin() == 'TANGOS'

        tests = pd.read_csv(tmp_path / 'out' / 'wilcoxon.csv')
        assert set(tests['method']) == set(METHODS) - {'TANGOS'}
        assert (tests['reference'] == 'TANGOS').all()
        assert ((tests['p_value'] > 0) & (tests['p_value'] <= 1)).all()

    def test_seeds_are_averaged(self, lab, tmp_path):
        """Тест: несколько сидов на ячейку усредняются"""
        results = write_table_results(tmp_path / 'table.csv', REGRESSION_TABLE, seeds=(0, 1, 2))
        orchestrator(lab()).report([str(results)])
        ranks = pd.read_csv(tmp_path / 'out' / 'rank_table.csv')
        averages = ranks[ranks['dataset'] == 'avg_rank'].set_index('method')['rank']
        assert averages['TANGOS'] == pytest.approx(1.9)

    def test_incomplete_grid(self, lab, tmp_path):
        """Тест неполной сетки: ошибка называет ячейку"""
        path = write_table_results(tmp_path / 'table.csv', REGRESSION_TABLE)
        frame = pd.read_csv(path)
        frame = frame[~((frame['dataset'] == 'BH') & (frame['method'] == 'L1'))]
        frame.to_csv(path, index=False)
        with pytest.raises(IncompleteGridError) as info:
            orchestrator(lab()).report([str(path)])
        assert ('BH', 'L1') in info.value.missing

    def test_unknown_reference(self, lab, tmp_path):
        """Тест эталонного метода, которого нет в результатах"""
        results = write_table_results(tmp_path / 'table.csv', REGRESSION_TABLE)
        with pytest.raises(ConfigurationError, match="SpecOnly"):
            orchestrator(lab(reference_method='SpecOnly')).report([str(results)])


def test_summarize_single_seed():
    """Тест сводки с одним сидом: sd не определено"""
    frame = pd.DataFrame([{'dataset': 'A', 'method': 'm', 'metric': 0.5}])
    summary = summarize(frame)
    assert summary.loc[0, 'n'] == 1
    assert summary.loc[0, 'mean'] == 0.5
    assert np.isnan(summary.loc[0, 'sd'])


SHIPPED_REGISTRY = Path(__file__).resolve().parents[4] / 'datasets' / 'registry.json'


@pytest.mark.slow
@pytest.mark.skipif(not SHIPPED_REGISTRY.exists(), reason="нет реестра датасетов")
def test_toy_benchmark_baseline_and_tangos(tmp_path):
    """Тест полного протокола на поставляемом TOY: обе строки конечны"""
    config = ExperimentConfig(
        datasets=['TOY'], methods=['baseline', 'TANGOS'], seeds=[0],
        registry=str(SHIPPED_REGISTRY), output_dir=str(tmp_path),
        overrides={'max_epochs': 20, 'patience': 5, 'batch_size': 32}, learning_rates=[0.01]
    )
    result = ExperimentOrchestrator(config).benchmark()
    assert result.success
    frame = pd.read_csv(tmp_path / 'results.csv')
    assert frame['method'].tolist() == ['baseline', 'TANGOS']
    assert np.all(np.isfinite(frame['metric']))
    tangos = frame[frame['method'] == 'TANGOS'].iloc[0]
    assert tangos['lambda1'] in (1.0, 10.0, 100.0)
    assert tangos['lambda2'] in (0.1, 1.0)


def test_result_row_failed_cell():
    """Тест строки упавшей ячейки"""
    row = ResultRow.failed_cell('A', 'TANGOS', 2, RuntimeError("nan gradients"), seconds=1.5)
    assert row.failed
    assert row.extra == 'FAILED: nan gradients'
    assert np.isnan(row.metric)
    assert list(row.to_dict()) == RESULT_COLUMNS
    assert not ResultRow('A', 'TANGOS', 2, metric=0.3).failed


@pytest.mark.skipif(not SHIPPED_REGISTRY.exists(), reason="нет реестра датасетов")
def test_benchmark_cell_rerun_from_manifest(tmp_path):
    """Тест: ячейка benchmark, повторенная по манифесту, дает побитово ту же метрику"""
    config = ExperimentConfig(
        datasets=['TOY'], methods=['TANGOS'], seeds=[0],
        registry=str(SHIPPED_REGISTRY), output_dir=str(tmp_path / 'first'),
        overrides={'max_epochs': 4, 'patience': 2, 'batch_size': 32, 'hidden_widths': [4, 4]},
        learning_rates=[0.01]
    )
    assert ExperimentOrchestrator(config).benchmark().success

    manifest = json.loads((tmp_path / 'first' / 'manifest.json').read_text(encoding='utf-8'))
    rerun = ExperimentConfig.from_dict({**manifest['config'], 'output_dir': str(tmp_path / 'second')})
    assert rerun.config_hash() == manifest['config_hash']
    assert ExperimentOrchestrator(rerun).benchmark().success

    first = pd.read_csv(tmp_path / 'first' / 'results.csv')
    second = pd.read_csv(tmp_path / 'second' / 'results.csv')
    assert np.isfinite(first['metric'].iloc[0])
    assert first['metric'].iloc[0] == second['metric'].iloc[0]
    assert first[['lr', 'lambda1', 'lambda2']].equals(second[['lr', 'lambda1', 'lambda2']])
