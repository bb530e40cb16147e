"""
Атомарная запись результатов: CSV и JSON через временный файл и os.replace
"""
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List

import pandas as pd

from ..core.errors import IngestionError

logger = logging.getLogger(__name__)


def atomic_write(path, text: str) -> Path:
    """Пишет текст через временный .name.tmp и os.replace: файл появляется целиком или не меняется"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(f".{path.name}.tmp")
    with open(tmp_path, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
    os.replace(tmp_path, path)
    return path


def write_csv(frame: pd.DataFrame, path) -> Path:
    """Записывает таблицу без индекса; файл появляется целиком или не появляется"""
    path = Path(path)
    atomic_write(path, frame.to_csv(index=False, lineterminator='\n'))
    logger.info(f"Результат сохранен в {path} ({len(frame)} строк)")
    return path


def write_json(payload: Dict[str, Any], path) -> Path:
    path = Path(path)
    atomic_write(path, json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + '\n')
    logger.info(f"Результат сохранен в {path}")
    return path


def read_results(paths: List[str]) -> pd.DataFrame:
    """Склеивает несколько CSV результатов в одну таблицу"""
    frames = []
    for path in paths:
        try:
            frames.append(pd.read_csv(path))
        except (FileNotFoundError, pd.errors.EmptyDataError, pd.errors.ParserError) as e:
            raise IngestionError(f"Не удалось прочитать результаты {path}: {e}") from e
    if not frames:
        raise IngestionError("Не переданы файлы результатов")
    return pd.concat(frames, ignore_index=True)
