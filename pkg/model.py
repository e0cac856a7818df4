"""
CCGC Siamese Encoders
=====================
Two MLP encoders of identical architecture with un-shared parameters,
each followed by row l2 normalization.

Version: 1.0.0
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import Activation
from errors import ShapeError
from tensor_core import matmul, row_norms, row_l2_normalize

logger = logging.getLogger(__name__)


# =============================================================================
# ACTIVATIONS
# =============================================================================

def _linear(z: np.ndarray) -> np.ndarray:
    return z


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def _tanh(z: np.ndarray) -> np.ndarray:
    return np.tanh(z)


# activation -> (forward, derivative given (z, a))
ACTIVATIONS: Dict[Activation, Tuple[Callable, Callable]] = {
    Activation.LINEAR: (_linear, lambda z, a: np.ones_like(z)),
    Activation.RELU: (_relu, lambda z, a: (z > 0.0).astype(np.float64)),
    Activation.TANH: (_tanh, lambda z, a: 1.0 - a * a),
}


# =============================================================================
# PARAMETERS
# =============================================================================

@dataclass(eq=False)
class LinearLayer:
    """One fully connected layer: x @ weight + bias."""
    weight: np.ndarray
    bias: Optional[np.ndarray] = None

    @property
    def shape(self) -> Tuple[int, int]:
        return tuple(self.weight.shape)

    def copy(self) -> "LinearLayer":
        return LinearLayer(
            weight=self.weight.copy(),
            bias=None if self.bias is None else self.bias.copy(),
        )


@dataclass(eq=False)
class EncoderParams:
    """Parameters of both encoders. With `shared`, encoder2 is encoder1."""
    encoder1: List[LinearLayer]
    encoder2: List[LinearLayer]
    activation: Activation = Activation.LINEAR
    shared: bool = False

    @property
    def w1(self) -> np.ndarray:
        return self.encoder1[0].weight

    @property
    def b1(self) -> Optional[np.ndarray]:
        return self.encoder1[0].bias

    @property
    def w2(self) -> np.ndarray:
        return self.encoder2[0].weight

    @property
    def b2(self) -> Optional[np.ndarray]:
        return self.encoder2[0].bias

    @property
    def d_in(self) -> int:
        return int(self.encoder1[0].weight.shape[0])

    @property
    def d_out(self) -> int:
        return int(self.encoder1[-1].weight.shape[1])

    def encoders(self) -> List[List[LinearLayer]]:
        """Distinct encoders (one when shared)."""
        return [self.encoder1] if self.shared else [self.encoder1, self.encoder2]

    def tensors(self) -> List[np.ndarray]:
        """Every distinct trainable array, in a fixed order."""
        out: List[np.ndarray] = []
        for layers in self.encoders():
            for layer in layers:
                out.append(layer.weight)
                if layer.bias is not None:
                    out.append(layer.bias)
        return out

    def copy(self) -> "EncoderParams":
        encoder1 = [layer.copy() for layer in self.encoder1]
        encoder2 = encoder1 if self.shared else [layer.copy() for layer in self.encoder2]
        return EncoderParams(encoder1, encoder2, self.activation, self.shared)


def _xavier_layers(
    rng: np.random.Generator,
    dims: Sequence[int],
    bias: bool,
) -> List[LinearLayer]:
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weight = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        layers.append(LinearLayer(
            weight=weight,
            bias=np.zeros(fan_out) if bias else None,
        ))
    return layers


def init_params(
    seed: int,
    d_in: int,
    d_out: Union[int, Sequence[int]],
    activation: Activation = Activation.LINEAR,
    bias: bool = False,
    shared: bool = False,
) -> EncoderParams:
    """
    Xavier-uniform initialization of both encoders.

    Encoder 1 draws from sub-seed 2*seed, encoder 2 from 2*seed + 1. Biases
    start at zero.

    Args:
        seed: Run seed
        d_in: Input feature dimension
        d_out: Output width, or a sequence of layer widths for a deeper MLP
        activation: Activation after every layer
        bias: Include bias vectors
        shared: Use a single encoder for both views

    Returns:
        EncoderParams
    """
    widths = [int(d_out)] if np.isscalar(d_out) else [int(w) for w in d_out]
    if d_in < 1 or not widths or any(w < 1 for w in widths):
        raise ShapeError(f"encoder dimensions must be >= 1, got d_in={d_in}, widths={widths}")
    dims = [int(d_in)] + widths

    encoder1 = _xavier_layers(np.random.default_rng(seed * 2 + 0), dims, bias)
    encoder2 = encoder1 if shared else _xavier_layers(np.random.default_rng(seed * 2 + 1), dims, bias)
    return EncoderParams(encoder1, encoder2, activation, shared)


# =============================================================================
# FORWARD PASS
# =============================================================================

@dataclass(eq=False)
class LayerCache:
    """Input, pre-activation and output of one layer."""
    inputs: np.ndarray
    z: np.ndarray
    a: np.ndarray


@dataclass(eq=False)
class ViewPair:
    """Row-normalized views plus what backward needs."""
    e1: np.ndarray
    e2: np.ndarray
    pre1: np.ndarray
    pre2: np.ndarray
    norms1: np.ndarray
    norms2: np.ndarray
    cache1: List[LayerCache] = field(default_factory=list)
    cache2: List[LayerCache] = field(default_factory=list)

    @property
    def num_nodes(self) -> int:
        return int(self.e1.shape[0])

    @classmethod
    def of(cls, e1: np.ndarray, e2: np.ndarray) -> "ViewPair":
        """Wrap already-normalized embeddings (no layer caches)."""
        e1 = np.asarray(e1, dtype=np.float64)
        e2 = np.asarray(e2, dtype=np.float64)
        return cls(e1=e1, e2=e2, pre1=e1, pre2=e2, norms1=row_norms(e1), norms2=row_norms(e2))


def encode(
    layers: List[LinearLayer],
    x: np.ndarray,
    activation: Activation,
) -> Tuple[np.ndarray, List[LayerCache]]:
    """Run one encoder, returning its pre-normalization output and caches."""
    act, _ = ACTIVATIONS[activation]
    cache: List[LayerCache] = []
    h = x
    for layer in layers:
        z = matmul(h, layer.weight)
        if layer.bias is not None:
            z = z + layer.bias
        a = act(z)
        cache.append(LayerCache(inputs=h, z=z, a=a))
        h = a
    return h, cache


def forward(
    params: EncoderParams,
    x_smooth: np.ndarray,
    x_view2: Optional[np.ndarray] = None,
) -> ViewPair:
    """
    Encode the smoothed attributes into two normalized views.

    Args:
        params: Encoder parameters
        x_smooth: Smoothed attributes (N x d_in)
        x_view2: Alternative input for the second encoder (augmentation ablation)

    Returns:
        ViewPair
    """
    x2 = x_smooth if x_view2 is None else x_view2
    for x in (x_smooth, x2):
        if x.shape[1] != params.d_in:
            raise ShapeError(f"input has {x.shape[1]} columns, encoder expects {params.d_in}")
    if x2.shape[0] != x_smooth.shape[0]:
        raise ShapeError("both views need the same number of nodes")

    pre1, cache1 = encode(params.encoder1, x_smooth, params.activation)
    pre2, cache2 = encode(params.encoder2, x2, params.activation)
    norms1 = row_norms(pre1)
    norms2 = row_norms(pre2)
    return ViewPair(
        e1=row_l2_normalize(pre1, norms1),
        e2=row_l2_normalize(pre2, norms2),
        pre1=pre1,
        pre2=pre2,
        norms1=norms1,
        norms2=norms2,
        cache1=cache1,
        cache2=cache2,
    )
