# modules/model/model_models.py
"""
Модели данных MLP: слои, трасса прямого прохода, градиенты
"""
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Optional, Tuple

import numpy as np

from ..regularizers.regularizer_models import BatchNormCache, BatchNormParams


class OutputConstraint(Enum):
    """Ограничение на веса выходного слоя"""
    NONE = "none"
    SIMPLEX = "simplex"   # α = softmax(φ), без смещения


@dataclass
class DenseLayer:
    """Полносвязный слой: W (out × in), b (out)"""
    weight: np.ndarray
    bias: np.ndarray
    batchnorm: Optional[BatchNormParams] = None

    @property
    def fan_in(self) -> int:
        return self.weight.shape[1]

    @property
    def width(self) -> int:
        return self.weight.shape[0]

    def copy(self) -> 'DenseLayer':
        return DenseLayer(self.weight.copy(), self.bias.copy(),
                          self.batchnorm.copy() if self.batchnorm else None)


@dataclass
class MlpModel:
    """
    MLP: ReLU на скрытых слоях, тождественный выход

    attribution_layer - индекс скрытого слоя, чьи активации образуют h
    (по умолчанию последний скрытый слой).
    """
    layers: List[DenseLayer]
    attribution_layer: int
    output_constraint: OutputConstraint = OutputConstraint.NONE

    @property
    def n_hidden(self) -> int:
        return len(self.layers) - 1

    @property
    def d_X(self) -> int:
        return self.layers[0].fan_in

    @property
    def d_H(self) -> int:
        return self.layers[self.attribution_layer].width

    @property
    def d_out(self) -> int:
        return self.layers[-1].width

    @property
    def widths(self) -> List[int]:
        return [self.d_X] + [layer.width for layer in self.layers]

    @property
    def uses_batchnorm(self) -> bool:
        return any(layer.batchnorm is not None for layer in self.layers[:-1])

    def output_weight(self) -> np.ndarray:
        """Эффективная матрица выходного слоя (softmax(φ) для simplex)"""
        weight = self.layers[-1].weight
        if self.output_constraint == OutputConstraint.SIMPLEX:
            shifted = np.exp(weight - weight.max(axis=1, keepdims=True))
            return shifted / shifted.sum(axis=1, keepdims=True)
        return weight

    def parameters(self) -> List[np.ndarray]:
        """Все обучаемые массивы в фиксированном порядке (W, b, [gamma, beta]) по слоям"""
        params = []
        for layer in self.layers:
            params.extend([layer.weight, layer.bias])
            if layer.batchnorm is not None:
                params.extend([layer.batchnorm.gamma, layer.batchnorm.beta])
        return params

    def zero_grads(self) -> 'ParamGrads':
        return ParamGrads([LayerGrads.zeros_like(layer) for layer in self.layers])

    def copy(self) -> 'MlpModel':
        return MlpModel([layer.copy() for layer in self.layers], self.attribution_layer,
                        self.output_constraint)


@dataclass
class LayerGrads:
    """Градиенты одного слоя"""
    dW: np.ndarray
    db: np.ndarray
    dgamma: Optional[np.ndarray] = None
    dbeta: Optional[np.ndarray] = None

    @classmethod
    def zeros_like(cls, layer: DenseLayer) -> 'LayerGrads':
        bn = layer.batchnorm
        return cls(
            dW=np.zeros_like(layer.weight),
            db=np.zeros_like(layer.bias),
            dgamma=np.zeros_like(bn.gamma) if bn is not None else None,
            dbeta=np.zeros_like(bn.beta) if bn is not None else None
        )

    def arrays(self) -> List[np.ndarray]:
        out = [self.dW, self.db]
        if self.dgamma is not None:
            out.extend([self.dgamma, self.dbeta])
        return out


@dataclass
class ParamGrads:
    """Градиенты по всем параметрам, формы совпадают с моделью"""
    layers: List[LayerGrads]

    def arrays(self) -> List[np.ndarray]:
        """Массивы в порядке MlpModel.parameters()"""
        out = []
        for layer in self.layers:
            out.extend(layer.arrays())
        return out

    def __add__(self, other: 'ParamGrads') -> 'ParamGrads':
        result = []
        for mine, theirs in zip(self.layers, other.layers):
            result.append(LayerGrads(
                dW=mine.dW + theirs.dW,
                db=mine.db + theirs.db,
                dgamma=None if mine.dgamma is None else mine.dgamma + theirs.dgamma,
                dbeta=None if mine.dbeta is None else mine.dbeta + theirs.dbeta
            ))
        return ParamGrads(result)

    def scaled(self, factor: float) -> 'ParamGrads':
        return ParamGrads([
            LayerGrads(
                dW=layer.dW * factor,
                db=layer.db * factor,
                dgamma=None if layer.dgamma is None else layer.dgamma * factor,
                dbeta=None if layer.dbeta is None else layer.dbeta * factor
            )
            for layer in self.layers
        ])

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(a))) if a.size else 0.0 for a in self.arrays())


@dataclass
class LayerTrace:
    """Кэш одного скрытого слоя для одного батча"""
    inputs: np.ndarray                  # A_{l-1}: вход линейного слоя
    linear: np.ndarray                  # W A + b
    z: np.ndarray                       # пред-активация ReLU (после batch norm)
    mask: np.ndarray                    # 1, если z > 0
    a: np.ndarray                       # z ⊙ mask
    out: np.ndarray                     # a после dropout
    bn: Optional[BatchNormCache] = None
    dropout_scale: Optional[np.ndarray] = None  # 0 или 1/(1-p)

    @property
    def gate(self) -> np.ndarray:
        """mask ⊙ bn_scale (без dropout), батч × ширина"""
        return self.mask * self.bn.scale if self.bn is not None else self.mask


@dataclass
class ForwardTrace:
    """Трасса прямого прохода по всем слоям"""
    hidden: List[LayerTrace]
    output_inputs: np.ndarray
    output: np.ndarray
    widths: List[int]
    training: bool = False

    @property
    def batch_size(self) -> int:
        return self.output.shape[0]

    def masks(self) -> List[np.ndarray]:
        return [layer.mask for layer in self.hidden]

    def preactivations(self) -> Iterator[Tuple[int, np.ndarray]]:
        for i, layer in enumerate(self.hidden):
            yield i, layer.z


@dataclass
class AttributionMatrix:
    """Якобиан d_H × d_X для одного объекта: строка i - атрибуции нейрона i"""
    J: np.ndarray
    sample_index: int = 0

    @property
    def shape(self) -> Tuple[int, int]:
        return self.J.shape

