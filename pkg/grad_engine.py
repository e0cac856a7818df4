"""
CCGC Gradient Engine
====================
Manual reverse-mode gradients of the total loss with respect to the encoder
parameters, plus a central finite-difference verifier.

Pseudo-labels, the high-confidence set and the block membership are
constants within a step. Gradients flow through the center means (unless
centers are detached), the cosine, the squared distances, the row
normalization, the activation and the linear layers.

Version: 1.0.0
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from clustering import ClusterState, ContrastBatch, build_contrast_batch, cluster_state, fuse_views
from config import Activation, Defaults, NegativeMode, PairMode
from errors import CCGCError
from losses import LossBreakdown, LossSettings, compute_losses
from model import ACTIVATIONS, EncoderParams, LayerCache, ViewPair, forward, init_params
from tensor_core import ZERO_NORM, row_l2_normalize, row_norms

logger = logging.getLogger(__name__)


# =============================================================================
# GRADIENT CONTAINERS
# =============================================================================

@dataclass(eq=False)
class LayerGrad:
    weight: np.ndarray
    bias: Optional[np.ndarray] = None


@dataclass(eq=False)
class Gradients:
    """Gradients shaped exactly like EncoderParams."""
    encoder1: List[LayerGrad]
    encoder2: List[LayerGrad]
    shared: bool = False

    @property
    def g_w1(self) -> np.ndarray:
        return self.encoder1[0].weight

    @property
    def g_b1(self) -> Optional[np.ndarray]:
        return self.encoder1[0].bias

    @property
    def g_w2(self) -> np.ndarray:
        return self.encoder2[0].weight

    @property
    def g_b2(self) -> Optional[np.ndarray]:
        return self.encoder2[0].bias

    def tensors(self) -> List[np.ndarray]:
        """Same order as EncoderParams.tensors()."""
        out: List[np.ndarray] = []
        for layers in ([self.encoder1] if self.shared else [self.encoder1, self.encoder2]):
            for layer in layers:
                out.append(layer.weight)
                if layer.bias is not None:
                    out.append(layer.bias)
        return out

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(t)) for t in self.tensors())


# =============================================================================
# EMBEDDING-LEVEL GRADIENTS
# =============================================================================

def _normalize_backward(v: np.ndarray, norms: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Row-wise (I - e e^T) / ||v|| applied to grad; zero rows pass nothing."""
    safe = np.where(norms > ZERO_NORM, norms, 1.0)
    e = v / safe[:, None]
    proj = np.einsum("ij,ij->i", e, grad)
    out = (grad - e * proj[:, None]) / safe[:, None]
    out[norms <= ZERO_NORM] = 0.0
    return out


def _positive_grads(batch: ContrastBatch, pair_mode: PairMode, d1: np.ndarray, d2: np.ndarray) -> None:
    k = batch.k
    for idx, b1, b2 in zip(batch.members, batch.blocks1, batch.blocks2):
        if pair_mode is PairMode.FULL_INTRA_CLUSTER:
            n_p = b1.shape[0]
            s1 = b1.sum(axis=0)
            s2 = b2.sum(axis=0)
            d1[idx] += (2.0 * b1 - (2.0 / n_p) * s2) / k
            d2[idx] += (2.0 * b2 - (2.0 / n_p) * s1) / k
        else:
            diff = (2.0 / k) * (b1 - b2)
            d1[idx] += diff
            d2[idx] -= diff


def _center_negative_grads(batch: ContrastBatch, d1: np.ndarray, d2: np.ndarray, detach: bool) -> None:
    if detach:
        return
    k = batch.k
    coef = 1.0 / (k * k - k)
    n1 = row_norms(batch.cen1)
    n2 = row_norms(batch.cen2)
    u = row_l2_normalize(batch.cen1, n1)
    w = row_l2_normalize(batch.cen2, n2)
    # d/du_p sum_{q != p} <u_p, w_q>
    du = coef * (w.sum(axis=0)[None, :] - w)
    dw = coef * (u.sum(axis=0)[None, :] - u)
    dc1 = _normalize_backward(batch.cen1, n1, du)
    dc2 = _normalize_backward(batch.cen2, n2, dw)
    for p, idx in enumerate(batch.members):
        n_p = idx.shape[0]
        d1[idx] += dc1[p] / n_p
        d2[idx] += dc2[p] / n_p


def _instance_negative_grads(batch: ContrastBatch, d1: np.ndarray, d2: np.ndarray) -> None:
    idx = np.concatenate(batch.members)
    h1 = np.concatenate(batch.blocks1)
    h2 = np.concatenate(batch.blocks2)
    m = h1.shape[0]
    coef = 1.0 / (m * m - m)
    d1[idx] += coef * (h2.sum(axis=0)[None, :] - h2)
    d2[idx] += coef * (h1.sum(axis=0)[None, :] - h1)


def embedding_grads(
    batch: ContrastBatch,
    settings: LossSettings,
    shape: Tuple[int, int],
) -> Tuple[Tuple[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]:
    """
    Gradients of l_pos and l_neg with respect to the normalized views.

    Returns:
        ((dpos1, dpos2), (dneg1, dneg2)), each N x d_out
    """
    pos1, pos2 = np.zeros(shape), np.zeros(shape)
    neg1, neg2 = np.zeros(shape), np.zeros(shape)
    _positive_grads(batch, settings.pair_mode, pos1, pos2)
    if settings.negative_mode is NegativeMode.INSTANCES:
        _instance_negative_grads(batch, neg1, neg2)
    else:
        _center_negative_grads(batch, neg1, neg2, settings.detach_centers)
    return (pos1, pos2), (neg1, neg2)


# =============================================================================
# ENCODER BACKWARD
# =============================================================================

def _encoder_backward(
    params_layers,
    cache: List[LayerCache],
    activation: Activation,
    grad_out: np.ndarray,
) -> List[LayerGrad]:
    _, act_grad = ACTIVATIONS[activation]
    grads: List[LayerGrad] = []
    da = grad_out
    for layer, c in zip(reversed(params_layers), reversed(cache)):
        dz = da * act_grad(c.z, c.a)
        grads.append(LayerGrad(
            weight=c.inputs.T @ dz,
            bias=dz.sum(axis=0) if layer.bias is not None else None,
        ))
        da = dz @ layer.weight.T
    grads.reverse()
    return grads


def _param_grads(params: EncoderParams, view: ViewPair, de1: np.ndarray, de2: np.ndarray) -> Gradients:
    dz1 = _normalize_backward(view.pre1, view.norms1, de1)
    dz2 = _normalize_backward(view.pre2, view.norms2, de2)
    g1 = _encoder_backward(params.encoder1, view.cache1, params.activation, dz1)
    g2 = _encoder_backward(params.encoder2, view.cache2, params.activation, dz2)
    if not params.shared:
        return Gradients(encoder1=g1, encoder2=g2, shared=False)

    merged = [
        LayerGrad(
            weight=a.weight + b.weight,
            bias=None if a.bias is None else a.bias + b.bias,
        )
        for a, b in zip(g1, g2)
    ]
    return Gradients(encoder1=merged, encoder2=merged, shared=True)


def _check_state(view: ViewPair, state: ClusterState) -> None:
    if state.num_nodes != view.num_nodes:
        raise StaleStateError(f"cluster state covers {state.num_nodes} nodes, views have {view.num_nodes}")
    if state.centers.shape[1] != view.e1.shape[1]:
        raise StaleStateError(
            f"cluster centers have width {state.centers.shape[1]}, embeddings have {view.e1.shape[1]}"
        )
    h = state.high_conf_idx
    if h.size and (h.min() < 0 or h.max() >= view.num_nodes):
        raise StaleStateError("high-confidence indices out of range for this forward pass")


def frozen_loss(
    params: EncoderParams,
    x_smooth: np.ndarray,
    state: ClusterState,
    settings: LossSettings,
    x_view2: Optional[np.ndarray] = None,
) -> LossBreakdown:
    """Loss on the frozen graph (same h, same pseudo-labels)."""
    view = forward(params, x_smooth, x_view2)
    _check_state(view, state)
    return compute_losses(build_contrast_batch(view, state), settings)


def backward(
    params: EncoderParams,
    x_smooth: np.ndarray,
    state: ClusterState,
    cfg,
    x_view2: Optional[np.ndarray] = None,
    view: Optional[ViewPair] = None,
) -> Tuple[LossBreakdown, Gradients]:
    """
    Loss and exact gradients of l_pos + alpha * l_neg.

    Args:
        params: Encoder parameters
        x_smooth: Smoothed attributes
        state: Cluster state computed in this epoch
        cfg: TrainConfig or LossSettings
        x_view2: Second-view input for augmentation variants
        view: Forward pass already computed with these params

    Returns:
        (LossBreakdown, Gradients)
    """
    settings = LossSettings.from_config(cfg)
    if view is None:
        view = forward(params, x_smooth, x_view2)
    _check_state(view, state)

    batch = build_contrast_batch(view, state)
    losses = compute_losses(batch, settings)
    (pos1, pos2), (neg1, neg2) = embedding_grads(batch, settings, view.e1.shape)
    grads = _param_grads(params, view, pos1 + settings.alpha * neg1, pos2 + settings.alpha * neg2)
    return losses, grads


def split_backward(
    params: EncoderParams,
    x_smooth: np.ndarray,
    state: ClusterState,
    cfg,
    x_view2: Optional[np.ndarray] = None,
) -> Tuple[Gradients, Gradients]:
    """Gradients of l_pos and of l_neg separately."""
    settings = LossSettings.from_config(cfg)
    view = forward(params, x_smooth, x_view2)
    _check_state(view, state)
    batch = build_contrast_batch(view, state)
    (pos1, pos2), (neg1, neg2) = embedding_grads(batch, settings, view.e1.shape)
    return _param_grads(params, view, pos1, pos2), _param_grads(params, view, neg1, neg2)


# =============================================================================
# FINITE DIFFERENCES
# =============================================================================

def finite_diff_gradients(
    params: EncoderParams,
    x_smooth: np.ndarray,
    state: ClusterState,
    cfg,
    epsilon: float = Defaults.GRADCHECK_EPSILON,
    x_view2: Optional[np.ndarray] = None,
) -> List[np.ndarray]:
    """Central-difference gradient of the total loss, one entry at a time."""
    settings = LossSettings.from_config(cfg)
    probe = params.copy()
    numeric = []
    for tensor in probe.tensors():
        grad = np.zeros_like(tensor)
        for i in np.ndindex(*tensor.shape):
            original = tensor[i]
            tensor[i] = original + epsilon
            plus = frozen_loss(probe, x_smooth, state, settings, x_view2).total
            tensor[i] = original - epsilon
            minus = frozen_loss(probe, x_smooth, state, settings, x_view2).total
            tensor[i] = original
            grad[i] = (plus - minus) / (2.0 * epsilon)
        numeric.append(grad)
    return numeric


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max |a - n| / max(|a|, |n|, floor) over entries."""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), Defaults.GRADCHECK_SCALE_FLOOR)
    return float(np.max(np.abs(analytic - numeric) / scale)) if analytic.size else 0.0


def finite_diff_check(
    params: EncoderParams,
    x_smooth: np.ndarray,
    state: ClusterState,
    cfg,
    epsilon: float = Defaults.GRADCHECK_EPSILON,
    x_view2: Optional[np.ndarray] = None,
) -> float:
    """
    Maximum relative error between analytic and central-difference gradients.

    The computation graph is frozen: the same h and pseudo-labels are used
    for every perturbed evaluation.
    """
    _, grads = backward(params, x_smooth, state, cfg, x_view2)
    numeric = finite_diff_gradients(params, x_smooth, state, cfg, epsilon, x_view2)
    errors = [relative_error(a, n) for a, n in zip(grads.tensors(), numeric)]
    worst = max(errors) if errors else 0.0
    logger.debug(f"Gradient check eps={epsilon:g}: max relative error {worst:.3e}")
    return worst


def difference_order_ratio(
    params: EncoderParams,
    x_smooth: np.ndarray,
    state: ClusterState,
    cfg,
    epsilon: float = 1e-2,
) -> float:
    """
    Ratio of the max absolute finite-difference error at 2*epsilon to that at
    epsilon. Close to 4 for a second-order accurate scheme.
    """
    _, grads = backward(params, x_smooth, state, cfg)
    analytic = grads.tensors()

    def worst(eps: float) -> float:
        numeric = finite_diff_gradients(params, x_smooth, state, cfg, eps)
        return max(float(np.max(np.abs(a - n))) for a, n in zip(analytic, numeric))

    small = worst(epsilon)
    if small == 0.0:
        return float("nan")
    return worst(2.0 * epsilon) / small


# =============================================================================
# RANDOM INSTANCES
# =============================================================================

@dataclass(eq=False)
class GradInstance:
    """A small frozen problem for gradient verification."""
    params: EncoderParams
    x_smooth: np.ndarray
    state: ClusterState
    settings: LossSettings


def random_instance(
    seed: int,
    n: int = 12,
    d_in: int = 6,
    d_out: int = 3,
    k: int = 2,
    tau: float = 0.6,
    alpha: float = 1.0,
    activation: Activation = Activation.TANH,
    bias: bool = True,
    pair_mode: PairMode = PairMode.SAME_NODE,
    negative_mode: NegativeMode = NegativeMode.CENTERS,
) -> GradInstance:
    """Random features, random parameters and the cluster state of their forward pass."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d_in))
    params = init_params(seed, d_in, d_out, activation=activation, bias=bias)
    if bias:
        for layers in params.encoders():
            for layer in layers:
                layer.bias = rng.normal(scale=0.1, size=layer.bias.shape)
    view = forward(params, x)
    state = cluster_state(fuse_views(view), k, tau, seed=seed)
    settings = LossSettings(alpha=alpha, pair_mode=pair_mode, negative_mode=negative_mode)
    return GradInstance(params=params, x_smooth=x, state=state, settings=settings)


# =============================================================================
# EXCEPTIONS
# =============================================================================

class StaleStateError(CCGCError):
    """The cluster state does not belong to the current forward pass."""
    pass
