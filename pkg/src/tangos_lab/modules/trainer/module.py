# modules/trainer/module.py
"""
Цикл обучения: мини-батчи, аугментации, штрафы, Adam, ранняя остановка; TrainerModule
"""
import logging
import math
import threading
import time
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from ...core.errors import ConfigurationError, TrainingError
from ...core.interfaces import ITrainer, ProcessingResult
from ..data import Dataset, minibatch_indices
from ..diagnostics.attribution_stats import attribution_stats
from ..model import (
    MlpModel, backward, commit_running_stats, forward, init_model, penalty_value_and_grads, task_loss
)
from ..numeric import SeededRng
from ..regularizers import apply_input_noise, apply_mixup, resolve_pair_count, weight_penalty
from .optimizer import adam_step
from .trainer_models import EpochRecord, FitResult, OptimizerState, TrainConfig

logger = logging.getLogger(__name__)

# monitor(epoch, model) -> словарь метрик
Monitor = Callable[[int, MlpModel], Dict[str, Any]]


def build_model(dataset: Dataset, config: TrainConfig) -> MlpModel:
    """Модель под размерности датасета"""
    widths = [dataset.n_features] + config.hidden_layout(dataset.n_features) + [dataset.output_width]
    return init_model(
        widths,
        SeededRng(config.seed).derive_seed('init'),
        attribution_layer=config.attribution_layer,
        batchnorm=config.baselines.batchnorm_enabled,
        output_constraint=config.output_constraint
    )


def evaluate(model: MlpModel, dataset: Dataset, indices) -> float:
    """MSE или NLL без штрафов в режиме инференса"""
    indices = np.asarray(indices, dtype=np.int64)
    predictions, _ = forward(model, dataset.X[indices], training=False)
    loss, _ = task_loss(predictions, dataset.y[indices], dataset.task)
    return loss


def _check_indices(train_idx: np.ndarray, val_idx: Optional[np.ndarray],
                   guard_indices: Optional[np.ndarray]):
    if len(train_idx) == 0:
        raise ConfigurationError("fit: пустой набор train-строк")
    if val_idx is not None:
        if len(val_idx) == 0:
            raise ConfigurationError("fit: пустой набор validation-строк")
        if np.intersect1d(train_idx, val_idx).size:
            raise ConfigurationError("fit: train и validation пересекаются")
    if guard_indices is not None:
        used = train_idx if val_idx is None else np.concatenate([train_idx, val_idx])
        if np.intersect1d(used, guard_indices).size:
            raise ConfigurationError("fit: тестовые строки попали в обучение или валидацию")


def _train_epoch(model: MlpModel, state: OptimizerState, dataset: Dataset, train_idx: np.ndarray,
                 config: TrainConfig, stream: SeededRng) -> float:
    """Одна эпоха; возвращает среднюю потерю задачи по строкам"""
    baselines = config.baselines
    tangos = config.tangos
    batches = minibatch_indices(train_idx, config.batch_size, stream.split('shuffle'),
                                drop_single=baselines.batchnorm_enabled)
    noise_rng = stream.split('noise')
    mixup_rng = stream.split('mixup')
    dropout_rng = stream.split('dropout')
    pairs_rng = stream.split('pairs')

    total_loss = 0.0
    total_rows = 0
    for k, batch in enumerate(batches):
        X = dataset.X[batch]
        y = dataset.y[batch]
        if baselines.input_noise_sd > 0:
            X = apply_input_noise(X, baselines.input_noise_sd, noise_rng.split(k))
        if baselines.mixup_enabled:
            X, y = apply_mixup(X, y, baselines.mixup_alpha, mixup_rng.split(k), dataset.task,
                               n_classes=dataset.n_classes)

        predictions, trace = forward(model, X, training=True, dropout_p=baselines.dropout_p,
                                     rng=dropout_rng.split(k))
        loss, grad_output = task_loss(predictions, y, dataset.task)
        if not math.isfinite(loss):
            raise TrainingError(f"Нечисловая потеря на батче {k}")
        grads = backward(model, trace, grad_output)

        if tangos.active:
            _, _, penalty_grads = penalty_value_and_grads(model, trace, X, tangos, pairs_rng.split(k))
            grads = grads + penalty_grads
        if baselines.l1_lambda > 0 or baselines.l2_lambda > 0:
            _, weight_grads = weight_penalty(model, baselines.l1_lambda, baselines.l2_lambda)
            grads = grads + weight_grads

        commit_running_stats(model, trace)
        adam_step(state, model, grads)
        total_loss += loss * len(batch)
        total_rows += len(batch)
    return total_loss / total_rows


def fit(dataset: Dataset, train_idx, val_idx, config: TrainConfig,
        monitors: Sequence[Monitor] = (),
        guard_indices=None,
        fixed_epochs: Optional[int] = None,
        initial_model: Optional[MlpModel] = None) -> FitResult:
    """
    Обучение с ранней остановкой по validation-потере

    Args:
        dataset: датасет (статистики предобработки уже учтены)
        train_idx: строки обучения
        val_idx: строки валидации; None - обучение ровно fixed_epochs эпох
        config: настройки
        monitors: функции (epoch, model) -> dict, вызываются раз в eval_every эпох;
            L_spec и L_orth истории считаются в те же эпохи, в остальных nan
        guard_indices: строки, которые не должны участвовать (тест)
        fixed_epochs: число эпох при val_idx = None
        initial_model: стартовые веса (например, из чекпоинта) вместо инициализации

    Returns:
        FitResult с лучшей (по validation) моделью и историей
    """
    started = time.time()
    train_idx = np.asarray(train_idx, dtype=np.int64)
    val_idx = None if val_idx is None else np.asarray(val_idx, dtype=np.int64)
    guard = None if guard_indices is None else np.asarray(guard_indices, dtype=np.int64)
    _check_indices(train_idx, val_idx, guard)
    if val_idx is None and (fixed_epochs is None or fixed_epochs < 1):
        raise ConfigurationError("fit: без validation-строк нужен fixed_epochs >= 1")

    if config.train_fraction < 1.0:
        keep = max(1, int(math.ceil(config.train_fraction * len(train_idx))))
        train_idx = train_idx[:keep]

    model = initial_model.copy() if initial_model is not None else build_model(dataset, config)
    if config.tangos.active and model.d_H >= 2:
        resolve_pair_count(config.tangos.pairs_M, model.d_H, warn=True)
    state = OptimizerState.for_model(model, config.learning_rate)
    root = SeededRng(config.seed).split('epochs')
    max_epochs = config.max_epochs if val_idx is not None else fixed_epochs
    stats_rows = val_idx if val_idx is not None else train_idx

    history: List[EpochRecord] = []
    monitor_rows: List[Dict[str, Any]] = []
    best_loss, best_epoch, best_model = math.inf, 0, model.copy()
    since_best = 0
    stopped_early = False

    for epoch in range(1, max_epochs + 1):
        train_loss = _train_epoch(model, state, dataset, train_idx, config, root.split(epoch))
        val_loss = evaluate(model, dataset, val_idx) if val_idx is not None else train_loss
        if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
            raise TrainingError(f"Обучение разошлось на эпохе {epoch} (lr={config.learning_rate})")

        evaluated = epoch % config.eval_every == 0
        L_spec = L_orth = float('nan')
        if evaluated:
            stats = attribution_stats(model, dataset.X[stats_rows])
            L_spec, L_orth = stats.L_spec, stats.L_orth
        history.append(EpochRecord(epoch, train_loss, val_loss, L_spec, L_orth))
        if monitors and evaluated:
            row = {'epoch': epoch}
            for monitor in monitors:
                row.update(monitor(epoch, model))
            monitor_rows.append(row)

        if val_idx is None or val_loss < best_loss:
            best_loss, best_epoch, best_model = val_loss, epoch, model.copy()
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                stopped_early = True
                logger.debug(f"Ранняя остановка на эпохе {epoch}, лучшая {best_epoch}")
                break

        logger.debug(f"Эпоха {epoch}: train={train_loss:.5f}, val={val_loss:.5f}")

    seconds = time.time() - started
    logger.debug(f"fit завершен: лучшая эпоха {best_epoch}, val={best_loss:.5f}, {seconds:.1f}s")
    return FitResult(
        model=best_model,
        best_val_loss=best_loss,
        best_epoch=best_epoch,
        history=history,
        monitors=monitor_rows,
        stopped_early=stopped_early,
        seconds=seconds
    )


def refit(dataset: Dataset, train_idx, config: TrainConfig, epochs: int,
          guard_indices=None) -> FitResult:
    """Переобучение на всех строках CV фиксированное число эпох"""
    return fit(dataset, train_idx, None, config, guard_indices=guard_indices, fixed_epochs=epochs)


class TrainerModule(ITrainer):
    """Обучение, выбор по сетке и профилирование pairs_M как единицы работы"""

    def __init__(self, config: Optional[TrainConfig] = None):
        self.config = config or TrainConfig()
        self.stats = {
            'fits': 0,
            'selections': 0,
            'diverged': 0,
            'seconds': 0.0
        }
        self._lock = threading.Lock()

    def _diverged(self, where: str, error: TrainingError) -> ProcessingResult:
        with self._lock:
            self.stats['diverged'] += 1
        logger.warning(f"{where}: {error}")
        return ProcessingResult(success=False, data=None, metadata={'error': str(error)}, error=str(error))

    def fit_fold(self, dataset: Dataset, train_idx, val_idx,
                 config: Optional[TrainConfig] = None, **options) -> ProcessingResult:
        """
        fit с ранней остановкой; расхождение обучения - неуспешный результат

        Args:
            options: monitors, guard_indices, fixed_epochs, initial_model (см. fit)
        """
        try:
            result = fit(dataset, train_idx, val_idx, config or self.config, **options)
        except TrainingError as e:
            return self._diverged("fit", e)

        with self._lock:
            self.stats['fits'] += 1
            self.stats['seconds'] += result.seconds
        return ProcessingResult(
            success=True,
            data=result,
            metadata={
                'best_epoch': result.best_epoch,
                'best_val_loss': result.best_val_loss,
                'epochs': len(result.history),
                'stopped_early': result.stopped_early
            }
        )

    def select(self, dataset: Dataset, split, grid: Sequence[TrainConfig]) -> ProcessingResult:
        """Кросс-валидация по сетке, переобучение на строках CV и тестовая метрика"""
        from .cross_validation import cross_validate

        try:
            result = cross_validate(dataset, split, grid)
        except TrainingError as e:
            return self._diverged("cross_validate", e)

        with self._lock:
            self.stats['selections'] += 1
            self.stats['seconds'] += result.seconds
        return ProcessingResult(
            success=True,
            data=result,
            metadata={
                'selected_index': result.selected_index,
                'final_epochs': result.final_epochs,
                'test_metric': result.test_metric,
                'grid_size': len(grid)
            }
        )

    def profile_pairs(self, dataset: Dataset, train_idx, pair_counts: Sequence[int],
                      config: Optional[TrainConfig] = None) -> ProcessingResult:
        """Время эпохи для каждого pairs_M и МНК-прямая"""
        from .profiling import profile_pair_counts

        profile = profile_pair_counts(dataset, train_idx, config or self.config, pair_counts=pair_counts)
        return ProcessingResult(
            success=True,
            data=profile,
            metadata={'slope': profile.slope, 'r_squared': profile.r_squared}
        )
