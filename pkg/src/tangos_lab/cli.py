# src/tangos_lab/cli.py
"""
Командная строка tangos-lab: train | benchmark | diagnose | report

Коды выхода: 0 - успех; 1 - ошибка использования, конфигурации или входных
данных; 2 - ошибка выполнения (обучение, упавшие ячейки benchmark).
"""
import argparse
import logging
import sys
from typing import List, Optional

from . import __version__
from .core.config import DEFAULT_EXPERIMENT_CONFIG, DIAGNOSE_MODES, ExperimentConfig
from .core.errors import (
    CheckpointError, ConfigurationError, IncompleteGridError, IngestionError, PreprocessingError,
    SplitError, TangosLabError
)
from .core.orchestrator import ExperimentOrchestrator

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

USAGE_ERRORS = (ConfigurationError, IngestionError, PreprocessingError, SplitError,
                CheckpointError, IncompleteGridError)


class UsageError(Exception):
    """Ошибка разбора аргументов"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='tangos-lab', description="Лаборатория регуляризации атрибуций для табличных MLP")
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")

    common = _Parser(add_help=False)
    common.add_argument('--config', type=str, help="JSON-конфигурация эксперимента")
    common.add_argument('--out', type=str, help="Каталог результатов (перекрывает output_dir)")
    common.add_argument('--seed', type=int, help="Главный сид (перекрывает master_seed)")
    common.add_argument('--jobs', type=int, help="Число потоков для ячеек benchmark")
    common.add_argument('--log-level', type=str, default='INFO',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], help="Уровень логирования")

    commands = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)
    commands.add_parser('train', parents=[common], help="Обучение на фолде, история и чекпоинт")
    commands.add_parser('benchmark', parents=[common], help="Полный протокол CV по сетке")

    diagnose = commands.add_parser('diagnose', parents=[common], help="Кривые атрибуций, разложения, профиль pairs_M")
    diagnose.add_argument('--mode', choices=DIAGNOSE_MODES, help="attr | decomp | pairs")
    diagnose.add_argument('--checkpoint', type=str, help="Стартовые веса модели")
    diagnose.add_argument('--dataset', type=str, help="Код датасета (перекрывает datasets)")

    report = commands.add_parser('report', parents=[common], help="Таблица рангов и тесты Вилкоксона")
    report.add_argument('results', nargs='+', help="CSV результатов benchmark")
    report.add_argument('--reference', type=str, help="Эталонный метод для тестов")
    return parser


def load_config(args) -> ExperimentConfig:
    """Конфигурация из файла (report допускает запуск без нее) с переопределениями CLI"""
    if args.config:
        config = ExperimentConfig.from_json(args.config)
    elif args.command == 'report':
        config = DEFAULT_EXPERIMENT_CONFIG
    else:
        raise ConfigurationError(f"{args.command}: требуется --config")

    config = config.with_runtime(output_dir=args.out, master_seed=args.seed, jobs=args.jobs)
    changes = {}
    if args.command == 'diagnose':
        if args.mode:
            changes['diagnose_mode'] = args.mode
        if args.checkpoint:
            changes['checkpoint'] = args.checkpoint
        if args.dataset:
            changes['datasets'] = [args.dataset]
    if args.command == 'report' and args.reference:
        changes['reference_method'] = args.reference
    if changes:
        config = ExperimentConfig.from_dict({**config.to_dict(), **changes})
    return config


def run(args) -> int:
    config = load_config(args)
    orchestrator = ExperimentOrchestrator(config)
    if args.command == 'train':
        result = orchestrator.train()
    elif args.command == 'benchmark':
        result = orchestrator.benchmark()
    elif args.command == 'diagnose':
        result = orchestrator.diagnose()
    else:
        result = orchestrator.report(args.results)

    if not result.success:
        logger.error(f"{args.command}: {result.error}")
        return EXIT_RUNTIME
    logger.info(f"{args.command}: готово, {result.data}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Точка входа; возвращает код выхода"""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"tangos-lab: {e}", file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(level=getattr(logging, args.log_level),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return run(args)
    except USAGE_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE
    except TangosLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_RUNTIME
    except Exception as e:
        logger.exception(f"Непредвиденная ошибка: {e}")
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())
