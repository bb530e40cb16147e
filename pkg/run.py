#!/usr/bin/env python
"""
Основной скрипт для запуска tangos-lab

    python run.py train --config experiments/toy.json --out results/toy
    python run.py benchmark --config experiments/toy.json --jobs 4
    python run.py diagnose --config experiments/toy.json --mode decomp
    python run.py report results/toy/results.csv --reference TANGOS
"""
import sys
from pathlib import Path

# Добавляем путь к модулям
sys.path.append(str(Path(__file__).parent / "src"))

from tangos_lab.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
