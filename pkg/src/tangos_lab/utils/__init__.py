"""
Вспомогательные функции ввода-вывода
"""

from .io_utils import atomic_write, write_csv, write_json, read_results

__all__ = ['atomic_write', 'write_csv', 'write_json', 'read_results']
