# src/tangos_lab/__init__.py

"""
tangos-lab - лаборатория обучения полносвязных сетей на табличных данных
с регуляризацией атрибуций латентных нейронов (специализация + ортогонализация)
"""

__version__ = "1.0.0"
__author__ = "tangos-lab team"

__all__ = ['__version__']
