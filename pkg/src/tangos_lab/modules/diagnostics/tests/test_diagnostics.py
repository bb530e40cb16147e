# modules/diagnostics/tests/test_diagnostics.py

import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ..attribution_stats import attribution_monitor, attribution_stats, attribution_stats_per_sample
from ..decomposition import decomposition_terms, decompose_ensemble
from ..diagnostics_models import SimplexOutputHead
from ..module import ATTRIBUTION_COLUMNS, DECOMPOSITION_COLUMNS, DiagnosticsModule
from ..statistics import wilcoxon_test, wilcoxon_signed_rank, rank_aggregate, pairwise_wilcoxon
from ...data import make_split, prepare_fold, preprocess
from ...data.data_models import TaskType
from ...model import init_model, forward, attribution_jacobian, predict, OutputConstraint
from ...numeric import SeededRng
from ...regularizers import spec_loss, orth_loss_full, n_pairs
from ...trainer import TrainConfig, fit
from ...trainer.tests.test_trainer import protocol_test_metrics, shipped_table
from ....core.errors import (
    ConfigurationError, DegenerateDataError, DomainError, IncompleteGridError, ShapeError,
    UnsupportedTaskError
)

METHODS = ['baseline', 'L1', 'L2', 'DO', 'BN', 'IN', 'MU', 'TANGOS']

# Эталонные тестовые MSE (регрессия) и NLL (классификация)
REGRESSION_TABLE = {
    'FB': [0.037, 0.081, 0.029, 0.060, 0.699, 0.043, 0.147, 0.032],
    'BH': [0.192, 0.197, 0.183, 0.209, 0.190, 0.215, 0.286, 0.166],
    'WE': [0.118, 0.096, 0.099, 0.097, 0.090, 0.101, 0.146, 0.093],
    'BC': [0.323, 0.263, 0.277, 0.282, 0.294, 0.308, 0.323, 0.244],
    'WQ': [0.673, 0.641, 0.644, 0.658, 0.639, 0.669, 0.713, 0.637],
    'SC': [0.422, 0.408, 0.411, 0.423, 0.410, 0.434, 0.547, 0.387],
    'FF': [1.274, 1.280, 1.274, 1.266, 1.330, 1.201, 1.289, 1.276],
    'PR': [0.624, 0.611, 0.580, 0.592, 0.647, 0.591, 0.745, 0.573],
    'ST': [0.419, 0.416, 0.418, 0.387, 0.461, 0.539, 0.380, 0.382],
    'AB': [0.345, 0.319, 0.332, 0.312, 0.348, 0.355, 0.366, 0.325],
}
REGRESSION_AVG_RANK = [5.4, 3.8, 3.4, 4.0, 5.0, 5.5, 7.1, 1.9]

CLASSIFICATION_TABLE = {
    'HE': [0.490, 0.472, 0.431, 0.428, 0.459, 0.435, 0.416, 0.426],
    'BR': [0.074, 0.070, 0.070, 0.078, 0.080, 0.071, 0.095, 0.069],
    'CE': [0.519, 0.395, 0.407, 0.436, 0.604, 0.457, 0.472, 0.408],
    'CR': [0.464, 0.405, 0.402, 0.456, 0.460, 0.481, 0.448, 0.369],
    'HC': [0.320, 0.222, 0.226, 0.237, 0.257, 0.312, 0.248, 0.215],
    'AU': [0.448, 0.442, 0.385, 0.405, 0.549, 0.479, 0.478, 0.379],
    'TU': [1.649, 1.633, 1.613, 1.621, 1.484, 1.646, 1.657, 1.495],
    'EN': [1.040, 1.040, 1.042, 1.058, 1.098, 1.072, 1.065, 0.974],
    'TH': [0.700, 0.506, 0.500, 0.714, 0.785, 0.638, 0.618, 0.513],
    'SO': [0.606, 0.238, 0.382, 0.567, 0.484, 0.540, 0.412, 0.371],
}


def as_results(table):
    return {dataset: dict(zip(METHODS, values)) for dataset, values in table.items()}


def column(table, method):
    return [values[METHODS.index(method)] for values in table.values()]


def constant_jacobian_model(weight):
    """Один скрытый слой с единичным выходом; смещения делают все нейроны активными"""
    weight = np.asarray(weight, dtype=np.float64)
    model = init_model([weight.shape[1], weight.shape[0], 1], seed=0)
    model.layers[0].weight = weight.copy()
    model.layers[0].bias = np.full(weight.shape[0], 10.0)
    return model


class TestAttributionStats:
    """Тесты статистик атрибуций"""

    def test_orthogonal_rows(self):
        """Тест ортогональных строк якобиана: L_orth = 0"""
        model = constant_jacobian_model(np.eye(2))
        stats = attribution_stats(model, np.full((5, 2), 0.5))
        assert stats.L_orth == pytest.approx(0.0, abs=1e-15)
        assert stats.L_spec == pytest.approx(1.0)
        assert stats.n_samples == 5

    def test_identical_rows(self):
        """Тест одинаковых строк: L_orth ≈ 1"""
        model = constant_jacobian_model([[1.0, 1.0], [1.0, 1.0]])
        stats = attribution_stats(model, np.full((4, 2), 0.5))
        assert stats.L_orth == pytest.approx(1.0, abs=1e-9)
        assert stats.L_spec == pytest.approx(2.0)

    def test_matches_per_sample_values(self):
        """Тест согласованности с поэлементным расчетом модуля регуляризаторов"""
        model = init_model([4, 6, 5, 1], seed=3)
        for layer in model.layers:
            layer.bias[:] = 0.3
        X = np.random.default_rng(3).normal(size=(12, 4))
        stats = attribution_stats(model, X)

        _, trace = forward(model, X)
        per_sample = [attribution_jacobian(model, trace, i).J for i in range(len(X))]
        assert stats.L_spec == pytest.approx(np.mean([spec_loss(J) for J in per_sample]), rel=1e-12)
        assert stats.L_orth == pytest.approx(np.mean([orth_loss_full(J) for J in per_sample]), rel=1e-12)

        rows = attribution_stats_per_sample(model, X)
        assert rows.shape == (12, 2)
        assert rows[:, 0].mean() == pytest.approx(stats.L_spec, rel=1e-12)

    def test_single_latent_neuron(self):
        """Тест d_H = 1: L_orth не определен"""
        model = init_model([3, 1, 1], seed=0)
        stats = attribution_stats(model, np.ones((3, 3)))
        assert math.isnan(stats.L_orth)
        assert not stats.orth_defined

    def test_empty_eval_set(self):
        """Тест пустого набора"""
        model = init_model([3, 4, 1], seed=0)
        with pytest.raises(DomainError):
            attribution_stats(model, np.zeros((0, 3)))

    def test_subsampled_pairs(self):
        """Тест pairs_M = C совпадает с точным значением; без rng - ошибка"""
        model = init_model([3, 5, 5, 1], seed=2)
        X = np.random.default_rng(0).normal(size=(6, 3))
        exact = attribution_stats(model, X)
        full = attribution_stats(model, X, pairs_M=n_pairs(5), rng=SeededRng(1))
        assert full.L_orth == exact.L_orth
        with pytest.raises(ConfigurationError):
            attribution_stats(model, X, pairs_M=3)

    def test_monitor_reports_stats(self):
        """Тест монитора: те же значения, что attribution_stats, и размер набора"""
        model = init_model([3, 5, 5, 1], seed=4)
        X = np.random.default_rng(4).normal(size=(7, 3))
        row = attribution_monitor(X)(2, model)
        stats = attribution_stats(model, X)
        assert row == {'L_spec': stats.L_spec, 'L_orth': stats.L_orth, 'n_samples': 7}


class TestDecomposition:
    """Тесты разложения ошибки ансамбля"""

    def test_hand_example(self):
        """Тест α=[0.5,0.5], T=[0,2], y=1"""
        err, err_bar, div = decomposition_terms([0.5, 0.5], [[0.0, 2.0]], [1.0])
        assert err[0] == 0.0
        assert err_bar[0] == 1.0
        assert div[0] == 1.0

    def test_identical_learners(self):
        """Тест одинаковых учеников: Div = 0, Err = Err̄"""
        T = np.repeat(np.linspace(-1, 1, 7)[:, None], 3, axis=1)
        y = np.linspace(0, 2, 7)
        err, err_bar, div = decomposition_terms([0.2, 0.3, 0.5], T, y)
        np.testing.assert_allclose(div, 0.0, atol=1e-15)
        np.testing.assert_allclose(err, err_bar, rtol=1e-12)

    def test_identity_fuzz_simplex(self):
        """Тест тождества на 10⁵ случайных экземплярах с α на симплексе"""
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(1000):
            alpha = rng.dirichlet(np.ones(5))
            T = rng.normal(size=(100, 5))
            y = rng.normal(size=100)
            err, err_bar, div = decomposition_terms(alpha, T, y)
            worst = max(worst, float(np.max(np.abs(err - (err_bar - div)))))
        assert worst < 1e-12

    @settings(max_examples=200, deadline=None)
    @given(
        raw=arrays(np.float64, 4, elements=st.floats(-1, 1)),
        T=arrays(np.float64, (3, 4), elements=st.floats(-10, 10)),
        y=arrays(np.float64, 3, elements=st.floats(-10, 10))
    )
    def test_identity_arbitrary_sign_weights(self, raw, T, y):
        """Тест тождества при весах любого знака с суммой 1"""
        total = raw.sum()
        if abs(total) < 0.1:
            return
        alpha = raw / total
        alpha[-1] = 1.0 - alpha[:-1].sum()
        err, err_bar, div = decomposition_terms(alpha, T, y)
        f = T @ alpha
        scale = np.abs(alpha) @ ((T - y[:, None]) ** 2).T + np.abs(alpha) @ ((T - f[:, None]) ** 2).T
        assert np.all(np.abs(err - (err_bar - div)) <= 1e-12 * np.maximum(1.0, scale))

    def test_decompose_model(self):
        """Тест разложения сети с simplex-выходом: Err - это MSE сети"""
        model = init_model([3, 4, 4, 1], seed=5, output_constraint=OutputConstraint.SIMPLEX)
        model.layers[-1].weight[:] = [[0.3, -0.2, 1.0, 0.0]]
        rng = np.random.default_rng(5)
        X = rng.normal(size=(20, 3))
        y = rng.normal(size=20)
        record = decompose_ensemble(model, X, y, epoch=3)
        assert record.err == pytest.approx(float(np.mean((predict(model, X)[:, 0] - y) ** 2)), rel=1e-12)
        assert record.identity_gap < 1e-12
        assert record.err == pytest.approx(record.err_bar - record.div, abs=1e-12)
        assert record.epoch == 3
        assert record.n_samples == 20

    def test_classification_unsupported(self):
        """Тест классификации"""
        model = init_model([3, 4, 1], seed=0, output_constraint=OutputConstraint.SIMPLEX)
        with pytest.raises(UnsupportedTaskError):
            decompose_ensemble(model, np.ones((2, 3)), np.zeros(2), task=TaskType.CLASSIFICATION)

    def test_requires_simplex_head(self):
        """Тест сети без simplex-выхода"""
        model = init_model([3, 4, 1], seed=0)
        with pytest.raises(ConfigurationError):
            decompose_ensemble(model, np.ones((2, 3)), np.zeros(2))

    def test_shape_mismatch(self):
        """Тест несогласованных размеров"""
        with pytest.raises(ShapeError):
            decomposition_terms([0.5, 0.5], np.ones((3, 3)), np.ones(3))
        with pytest.raises(ShapeError):
            decomposition_terms([0.5, 0.5], np.ones((3, 2)), np.ones(4))

    @settings(max_examples=100, deadline=None)
    @given(phi=arrays(np.float64, st.integers(1, 8), elements=st.floats(-30, 30)))
    def test_simplex_head_weights(self, phi):
        """Тест весов softmax: положительны и в сумме 1"""
        alpha = SimplexOutputHead(phi=phi).alpha
        assert np.all(alpha > 0)
        assert abs(alpha.sum() - 1.0) <= 1e-15 * len(phi)


class TestWilcoxon:
    """Тесты знаково-рангового теста"""

    def test_all_less(self):
        """Тест a < b во всех 10 парах: p = 1/2¹⁰"""
        a = np.arange(10, dtype=float)
        p = wilcoxon_signed_rank(a, a + np.linspace(0.1, 1.0, 10), alternative='less')
        assert p == pytest.approx(1 / 1024, rel=1e-12)

    def test_reversed_roles(self):
        """Тест обратных ролей"""
        a = np.arange(10, dtype=float)
        assert wilcoxon_signed_rank(a + np.linspace(0.1, 1.0, 10), a, alternative='less') >= 0.999

    def test_reference_regression_comparison(self):
        """Тест эталонных колонок TANGOS и L2 (регрессия)"""
        tangos, l2 = column(REGRESSION_TABLE, 'TANGOS'), column(REGRESSION_TABLE, 'L2')
        approx = wilcoxon_test(tangos, l2, alternative='less', method='approx')
        assert approx.statistic == 3.0
        assert round(approx.p_value, 3) == 0.006

        exact = wilcoxon_test(tangos, l2, alternative='less')
        assert exact.method == 'exact'
        assert exact.p_value == pytest.approx(5 / 1024, rel=1e-12)

    def test_reference_classification_comparison(self):
        """Тест эталонных колонок TANGOS и L2 (классификация)"""
        result = wilcoxon_test(column(CLASSIFICATION_TABLE, 'TANGOS'), column(CLASSIFICATION_TABLE, 'L2'),
                               alternative='less', method='approx')
        assert result.statistic == 8.5
        assert round(result.p_value, 3) == 0.026

    def test_zero_difference_pratt(self):
        """Тест нулевой разности: ранжируется вместе с остальными и отбрасывается"""
        b = np.zeros(5)
        a = np.array([0.0, 1.0, -2.0, 3.0, 4.0])
        result = wilcoxon_test(a, b, alternative='greater')
        assert result.n_zero == 1
        assert result.n_nonzero == 4
        assert result.statistic == 11.0
        assert result.p_value == pytest.approx(3 / 16)
        assert wilcoxon_signed_rank(a, b, alternative='less') == pytest.approx(14 / 16)

    def test_auto_switches_to_approx(self):
        """Тест нормального приближения для больших выборок"""
        rng = np.random.default_rng(0)
        a = rng.normal(size=30)
        result = wilcoxon_test(a, a + 0.5 + rng.uniform(0, 0.1, 30))
        assert result.method == 'approx'
        assert result.z is not None
        assert 0 < result.p_value < 1e-4

    def test_invalid_inputs(self):
        """Тест ошибок входных данных"""
        with pytest.raises(DegenerateDataError):
            wilcoxon_signed_rank(np.ones(6), np.ones(6))
        with pytest.raises(ShapeError):
            wilcoxon_signed_rank(np.ones(6), np.ones(7))
        with pytest.raises(DomainError):
            wilcoxon_signed_rank(np.ones(4), np.zeros(4))
        with pytest.raises(ConfigurationError):
            wilcoxon_signed_rank(np.ones(6), np.zeros(6), alternative='two-sided')
        with pytest.raises(ConfigurationError):
            wilcoxon_signed_rank(np.ones(6), np.zeros(6), method='bootstrap')

    @settings(max_examples=200, deadline=None)
    @given(
        a=arrays(np.float64, 10, elements=st.integers(0, 20).map(float)),
        b=arrays(np.float64, 10, elements=st.integers(0, 20).map(float)),
        method=st.sampled_from(['exact', 'approx'])
    )
    def test_one_tailed_decisions_exclusive(self, a, b, method):
        """Тест p в (0, 1] и несовместимости двух односторонних отказов"""
        if not np.any(a - b):
            return
        less = wilcoxon_signed_rank(a, b, alternative='less', method=method)
        greater = wilcoxon_signed_rank(b, a, alternative='less', method=method)
        assert 0 < less <= 1 and 0 < greater <= 1
        assert not (less < 0.05 and greater < 0.05)


class TestRankAggregate:
    """Тесты агрегирования рангов"""

    def test_reference_regression_ranks(self):
        """Тест эталонной таблицы регрессии: средние ранги"""
        table = rank_aggregate(as_results(REGRESSION_TABLE), methods=METHODS)
        assert table.average_ranks['TANGOS'] == pytest.approx(1.9)
        assert table.average_ranks['baseline'] == pytest.approx(5.4)
        assert table.average_ranks['MU'] == pytest.approx(7.05)
        for method, expected in zip(METHODS, REGRESSION_AVG_RANK):
            assert abs(table.average_ranks[method] - expected) <= 0.05 + 1e-9

    def test_reference_classification_ranks(self):
        """Тест эталонной таблицы классификации: TANGOS 1.7"""
        table = rank_aggregate(as_results(CLASSIFICATION_TABLE), methods=METHODS)
        assert table.average_ranks['TANGOS'] == pytest.approx(1.7)

    def test_ranks_are_permutation(self):
        """Тест: сумма рангов по датасету равна n(n+1)/2, совпадения усредняются"""
        table = rank_aggregate(as_results(REGRESSION_TABLE), methods=METHODS)
        np.testing.assert_allclose(table.ranks.sum(axis=1), 36.0)
        assert table.ranks.at['FF', 'baseline'] == 3.5
        assert table.ranks.at['FF', 'L2'] == 3.5

    def test_dominating_method(self):
        """Тест метода, лучшего на всех датасетах"""
        results = {d: {'a': 0.1, 'b': 0.5, 'c': 0.9} for d in 'xyz'}
        assert rank_aggregate(results).average_ranks['a'] == 1.0

    def test_two_way_tie(self):
        """Тест ничьей двух методов"""
        table = rank_aggregate({'x': {'a': 0.3, 'b': 0.3}})
        assert list(table.ranks.loc['x']) == [1.5, 1.5]

    def test_single_method(self):
        """Тест одного метода"""
        table = rank_aggregate({'x': {'a': 0.3}, 'y': {'a': 0.7}})
        assert list(table.ranks['a']) == [1.0, 1.0]

    def test_missing_cell(self):
        """Тест неполной сетки"""
        with pytest.raises(IncompleteGridError) as info:
            rank_aggregate({'x': {'a': 0.1, 'b': 0.2}, 'y': {'a': 0.3}})
        assert info.value.missing == [('y', 'b')]

    def test_long_frame_averages_seeds(self):
        """Тест длинной таблицы: повторы по сидам усредняются"""
        frame = pd.DataFrame({
            'dataset': ['x', 'x', 'x', 'x'],
            'method': ['a', 'a', 'b', 'b'],
            'seed': [0, 1, 0, 1],
            'metric': [0.1, 0.5, 0.2, 0.2]
        })
        table = rank_aggregate(frame)
        assert table.metrics.at['x', 'a'] == pytest.approx(0.3)
        assert table.ranks.at['x', 'b'] == 1.0

        long = table.to_frame()
        assert list(long.columns) == ['dataset', 'method', 'metric', 'rank']
        assert (long['dataset'] == 'avg_rank').sum() == 2

    @settings(max_examples=100, deadline=None)
    @given(
        values=arrays(np.int64, (4, 5), elements=st.integers(0, 60)),
        row=st.integers(0, 3),
        transform=st.sampled_from(['affine', 'exp', 'cube'])
    )
    def test_monotone_invariance(self, values, row, transform):
        """Тест инвариантности рангов к монотонному преобразованию метрик датасета"""
        metrics = values.astype(np.float64)
        results = {f"d{i}": {f"m{j}": metrics[i, j] for j in range(5)} for i in range(4)}
        before = rank_aggregate(results)

        changed = metrics[row].copy()
        changed = {'affine': 3 * changed + 7, 'exp': np.exp(changed / 10), 'cube': changed ** 3}[transform]
        results[f"d{row}"] = {f"m{j}": changed[j] for j in range(5)}
        after = rank_aggregate(results)
        pd.testing.assert_frame_equal(before.ranks, after.ranks)

    def test_pairwise_against_reference(self):
        """Тест таблицы p-value против эталонного метода"""
        table = rank_aggregate(as_results(REGRESSION_TABLE), methods=METHODS)
        frame = pairwise_wilcoxon(table, 'TANGOS', method='approx')
        assert list(frame['method']) == [m for m in METHODS if m != 'TANGOS']
        p_l2 = frame.loc[frame['method'] == 'L2', 'p_value'].iloc[0]
        assert round(p_l2, 3) == 0.006
        with pytest.raises(ConfigurationError):
            pairwise_wilcoxon(table, 'unknown')


def long_frame(table):
    rows = [{'dataset': d, 'method': m, 'seed': 0, 'metric': v}
            for d, values in table.items() for m, v in zip(METHODS, values)]
    return pd.DataFrame(rows)


class TestDiagnosticsModule:
    """Тесты DiagnosticsModule"""

    def test_attribution_stats(self):
        """Тест attribution_stats: сводка в metadata"""
        model = constant_jacobian_model(np.eye(2))
        result = DiagnosticsModule().attribution_stats(model, np.full((5, 2), 0.5))
        assert result.success
        assert result.metadata['L_spec'] == pytest.approx(1.0)
        assert result.data.n_samples == 5

    def test_monitor_modes(self):
        """Тест monitor: колонки и имя файла для attr и decomp"""
        diagnostics = DiagnosticsModule()
        X = np.random.default_rng(5).normal(size=(6, 3))
        attr = diagnostics.monitor('attr', X)
        assert attr.metadata['columns'] == ATTRIBUTION_COLUMNS
        assert attr.metadata['filename'] == 'attribution_curves.csv'
        model = init_model([3, 4, 1], seed=5)
        assert set(attr.data(1, model)) >= {'L_spec', 'L_orth'}

        decomp = diagnostics.monitor('decomp', X, np.zeros(6), TaskType.REGRESSION)
        assert decomp.metadata['columns'] == DECOMPOSITION_COLUMNS
        assert decomp.metadata['filename'] == 'decomposition_curves.csv'

    def test_monitor_errors(self):
        """Тест monitor: неизвестный режим, разложение без целей"""
        diagnostics = DiagnosticsModule()
        X = np.zeros((3, 2))
        with pytest.raises(ConfigurationError):
            diagnostics.monitor('pairs', X)
        with pytest.raises(ConfigurationError):
            diagnostics.monitor('decomp', X)

    def test_compare(self):
        """Тест compare: средние ранги и тесты против эталона"""
        result = DiagnosticsModule(wilcoxon_method='approx').compare(long_frame(REGRESSION_TABLE), 'TANGOS')
        assert result.success
        for method, expected in zip(METHODS, REGRESSION_AVG_RANK):
            assert abs(result.metadata['average_ranks'][method] - expected) <= 0.05 + 1e-9
        tests = result.data['tests']
        assert round(tests.loc[tests['method'] == 'L2', 'p_value'].iloc[0], 3) == 0.006
        assert set(result.data['ranks']['method']) == set(METHODS)

    def test_compare_unknown_reference(self):
        """Тест compare с неизвестным эталонным методом"""
        with pytest.raises(ConfigurationError):
            DiagnosticsModule().compare(long_frame(REGRESSION_TABLE), 'unknown')


class TestProtocolDiagnostics:
    """Диагностика обученных сетей на UCI-датасетах реестра"""

    @pytest.mark.slow
    def test_attribution_overlap_by_regularizer(self):
        """Тест WE, один сид: L_orth на тесте растет с L2 и падает с TANGOS относительно базовой сети"""
        raw = shipped_table('WE')
        split = make_split(raw.n_rows, 0)
        dataset, _ = preprocess(raw, split=split)
        train_idx, val_idx = split.fold(0)
        fold_dataset = prepare_fold(dataset, train_idx)
        X_test = fold_dataset.X[split.test_indices]

        base = TrainConfig(learning_rate=0.001, seed=0, eval_every=200)
        configs = {
            'baseline': base,
            'L2': TrainConfig.from_dict({'baselines': {'l2_lambda': 0.01}}, base),
            'TANGOS': TrainConfig.from_dict({'tangos': {'lambda1': 1.0, 'lambda2': 1.0}}, base),
        }
        overlap = {}
        for name, config in configs.items():
            result = fit(fold_dataset, train_idx, val_idx, config, guard_indices=split.test_indices)
            overlap[name] = attribution_stats(result.model, X_test).L_orth

        assert overlap['L2'] >= overlap['baseline']
        assert overlap['TANGOS'] < overlap['baseline']

    @pytest.mark.slow
    def test_full_tangos_within_ablations(self):
        """Тест BC, 5 сидов: TANGOS не хуже худшей из абляций SpecOnly и OrthOnly"""
        means = protocol_test_metrics('BC', ['TANGOS', 'SpecOnly', 'OrthOnly'])
        assert means['TANGOS'] <= max(means['SpecOnly'], means['OrthOnly'])
