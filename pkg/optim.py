"""
CCGC Optimizer
==============
Adam with bias correction over the encoder parameters.

Version: 1.0.0
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import ShapeError

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class AdamState:
    """Moment buffers and hyper-parameters. Owned by a single trainer."""
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    clip_norm: Optional[float] = None
    step: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def from_config(cls, cfg) -> "AdamState":
        return cls(
            lr=cfg.lr,
            beta1=cfg.beta1,
            beta2=cfg.beta2,
            eps=cfg.adam_eps,
            weight_decay=cfg.weight_decay,
            clip_norm=cfg.clip_norm,
        )


def _clip(grads: List[np.ndarray], max_norm: float) -> List[np.ndarray]:
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if norm <= max_norm or norm == 0.0:
        return grads
    scale = max_norm / norm
    return [g * scale for g in grads]


def adam_update(
    tensors: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
) -> AdamState:
    """
    One Adam step on a list of arrays, updated in place.

    Args:
        tensors: Parameters
        grads: Gradients, shaped like tensors
        state: Moment buffers (created on the first step)

    Returns:
        The same state with t incremented by one
    """
    if len(tensors) != len(grads):
        raise ShapeError(f"{len(tensors)} parameters but {len(grads)} gradients")
    for t, g in zip(tensors, grads):
        if t.shape != g.shape:
            raise ShapeError(f"gradient shape {g.shape} does not match parameter {t.shape}")
    if not state.m:
        state.m = [np.zeros_like(t) for t in tensors]
        state.v = [np.zeros_like(t) for t in tensors]
    elif len(state.m) != len(tensors) or any(m.shape != t.shape for m, t in zip(state.m, tensors)):
        raise ShapeError("moment buffers do not match the parameters")

    grads = list(grads)
    if state.weight_decay:
        grads = [g + state.weight_decay * t for t, g in zip(tensors, grads)]
    if state.clip_norm is not None:
        grads = _clip(grads, state.clip_norm)

    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step

    for t, g, m, v in zip(tensors, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        t -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return state


def adam_step(params, grads, state: AdamState) -> Tuple[object, AdamState]:
    """Adam step on EncoderParams with matching Gradients."""
    adam_update(params.tensors(), grads.tensors(), state)
    return params, state
