"""
Модули лаборатории: numeric, data, model, regularizers, trainer, diagnostics
"""
