# modules/trainer/config.py
"""
Конфигурация обучения по умолчанию
"""
from .trainer_models import TrainConfig

# Протокол сравнения: 200 эпох, терпение 30, батч 64
DEFAULT_TRAIN_CONFIG = TrainConfig()
