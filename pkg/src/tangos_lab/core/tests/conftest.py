# core/tests/conftest.py

import json

import numpy as np
import pytest

QUICK_OVERRIDES = {'max_epochs': 4, 'patience': 2, 'batch_size': 16, 'hidden_widths': [4, 4]}


def write_toy_csvs(root):
    """Маленькие регрессия и классификация по 60 строк"""
    rng = np.random.default_rng(3)
    X = rng.normal(size=(60, 3))
    y = X[:, 0] - 0.5 * X[:, 1] + 0.1 * rng.normal(size=60)
    lines = ['x1,x2,x3,target'] + [f"{a:.6f},{b:.6f},{c:.6f},{t:.6f}" for (a, b, c), t in zip(X, y)]
    (root / 'toy_reg.csv').write_text('\n'.join(lines) + '\n', encoding='utf-8')

    labels = np.where(X[:, 0] + X[:, 1] > 0, 'pos', 'neg')
    lines = ['x1,x2,label'] + [f"{a:.6f},{b:.6f},{lab}" for (a, b, _), lab in zip(X, labels)]
    (root / 'toy_cls.csv').write_text('\n'.join(lines) + '\n', encoding='utf-8')


@pytest.fixture
def lab(tmp_path):
    """Каталог с CSV, реестром и фабрикой конфигураций"""
    data_dir = tmp_path / 'data'
    data_dir.mkdir()
    write_toy_csvs(data_dir)
    (data_dir / 'registry.json').write_text(json.dumps({'datasets': {
        'REG': {'csv': 'toy_reg.csv', 'task': 'regression', 'target': 'target'},
        'CLS': {'csv': 'toy_cls.csv', 'task': 'classification', 'target': 'label'},
    }}), encoding='utf-8')

    def make_config(name='experiment.json', **values):
        payload = {
            'datasets': ['REG'],
            'methods': ['baseline'],
            'seeds': [0],
            'registry': 'registry.json',
            'output_dir': str(tmp_path / 'out'),
            'overrides': dict(QUICK_OVERRIDES),
            'learning_rates': [0.01],
        }
        payload.update(values)
        path = data_dir / name
        path.write_text(json.dumps(payload), encoding='utf-8')
        return path

    return make_config
