# src/tangos_lab/core/config.py
"""
Конфигурация эксперимента (JSON) и манифест воспроизводимости
"""
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

from .. import __version__
from ..modules.numeric import SeededRng
from ..modules.trainer import DEFAULT_TRAIN_CONFIG, TrainConfig, known_methods
from .errors import ConfigurationError

logger = logging.getLogger(__name__)

DIAGNOSE_MODES = ('attr', 'decomp', 'pairs')
# Поля, не влияющие на результаты (не входят в хеш)
RUNTIME_FIELDS = ('output_dir', 'jobs')


@dataclass
class ExperimentConfig:
    """Описание запуска: датасеты × методы × сиды и переопределения TrainConfig"""

    datasets: List[str] = field(default_factory=list)
    methods: List[str] = field(default_factory=lambda: ['baseline', 'TANGOS'])
    seeds: List[int] = field(default_factory=lambda: [0])
    master_seed: int = 0

    registry: str = 'datasets/registry.json'
    output_dir: str = 'results'
    jobs: int = 1

    # Переопределения полей TrainConfig (вложенные tangos / baselines допускаются)
    overrides: Dict[str, Any] = field(default_factory=dict)
    learning_rates: Optional[List[float]] = None

    # train / diagnose: номер фолда, чьи train/validation строки используются
    fold: int = 0
    diagnose_mode: str = 'attr'
    checkpoint: Optional[str] = None
    pair_counts: List[int] = field(default_factory=lambda: [10, 50, 100, 200])

    # report
    reference_method: str = 'TANGOS'
    alternative: str = 'less'
    wilcoxon_method: str = 'auto'

    def __post_init__(self):
        self.datasets = [str(d) for d in self.datasets]
        self.methods = [str(m) for m in self.methods]
        self.seeds = [int(s) for s in self.seeds]
        valid = set(known_methods())
        for method in self.methods:
            if method not in valid:
                raise ConfigurationError(f"methods: неизвестный метод '{method}'")
        if not self.seeds:
            raise ConfigurationError("seeds: пустой список")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError(f"seeds: повторяющиеся значения {self.seeds}")
        if self.jobs < 1:
            raise ConfigurationError(f"jobs: {self.jobs} < 1")
        if not 0 <= self.fold < 5:
            raise ConfigurationError(f"fold: {self.fold} вне [0, 5)")
        if self.diagnose_mode not in DIAGNOSE_MODES:
            raise ConfigurationError(
                f"diagnose_mode: ожидается одно из {DIAGNOSE_MODES}, получено '{self.diagnose_mode}'"
            )
        # Проверка переопределений: ошибка называет поле
        self.train_config()

    # ---------- загрузка ----------

    @classmethod
    def from_dict(cls, values: Dict[str, Any], base_dir: Optional[Path] = None) -> 'ExperimentConfig':
        values = dict(values)
        allowed = {f.name for f in fields(cls)}
        unknown = set(values) - allowed
        if unknown:
            raise ConfigurationError(f"config: неизвестные поля {sorted(unknown)}")
        if base_dir is not None:
            for key in ('registry', 'checkpoint'):
                if values.get(key) and not Path(values[key]).is_absolute():
                    values[key] = str((base_dir / values[key]).resolve())
        try:
            return cls(**values)
        except ConfigurationError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"config: {e}") from e

    @classmethod
    def from_json(cls, path) -> 'ExperimentConfig':
        """Читает JSON; относительные пути registry и checkpoint - от файла конфигурации"""
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"config: файл {path} не найден")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                values = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"config: {path} не является корректным JSON ({e})") from e
        if not isinstance(values, dict):
            raise ConfigurationError(f"config: {path} должен содержать JSON-объект")
        config = cls.from_dict(values, base_dir=path.parent)
        logger.info(f"Конфигурация {path.name}: {len(config.datasets)} датасетов, "
                    f"методы {config.methods}, сиды {config.seeds}")
        return config

    def with_runtime(self, output_dir: Optional[str] = None, master_seed: Optional[int] = None,
                     jobs: Optional[int] = None) -> 'ExperimentConfig':
        """Переопределения из командной строки"""
        values = asdict(self)
        if output_dir is not None:
            values['output_dir'] = output_dir
        if master_seed is not None:
            values['master_seed'] = master_seed
        if jobs is not None:
            values['jobs'] = jobs
        return ExperimentConfig(**values)

    # ---------- производные значения ----------

    def train_config(self, seed: Optional[int] = None) -> TrainConfig:
        base = DEFAULT_TRAIN_CONFIG.with_overrides(seed=self.master_seed if seed is None else seed)
        return TrainConfig.from_dict(self.overrides, base)

    def split_seed(self, dataset: str, seed: int) -> int:
        """Сид разбиения общий для всех методов (парное сравнение)"""
        return SeededRng(self.master_seed).split(dataset).derive_seed(f"split{seed}")

    def cell_seed(self, dataset: str, method: str, seed: int) -> int:
        """Сид обучения ячейки (датасет, метод, сид)"""
        return SeededRng(self.master_seed).split(dataset).split(method).derive_seed(f"seed{seed}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        values = {k: v for k, v in self.to_dict().items() if k not in RUNTIME_FIELDS}
        canonical = json.dumps(values, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def manifest(self, command: str) -> Dict[str, Any]:
        """Все, что нужно для побитового повтора запуска"""
        return {
            'command': command,
            'config_hash': self.config_hash(),
            'master_seed': self.master_seed,
            'version': __version__,
            'config': self.to_dict()
        }


DEFAULT_EXPERIMENT_CONFIG = ExperimentConfig()
