"""Binarized and full-precision graph convolution layers.

Binarized layers keep full-precision "latent" master weights that the
optimizer updates; the forward pass re-binarizes them every call. Two
forward routes exist and agree within float tolerance:

* float simulation — dense products of the reconstructed scalar-rescaled
  sign matrices; used in training so an inverted-dropout mask can zero
  individual entries of the binarized features.
* packed kernel — XNOR/popcount on packed words; used for inference.

The backward pass propagates the approximated gradient through the sign
function with a straight-through gate. The gate condition is selectable:
``grad`` gates on the gradient's own magnitude, ``input`` on the
pre-binarization input magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bitlinalg as bl
from .graph import NormalizedAdjacency, aggregate

STE_MODES = ("grad", "input")


def xavier_uniform(rng: np.random.Generator, d_in: int, d_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (d_in + d_out))
    return rng.uniform(-bound, bound, size=(d_in, d_out))


@dataclass
class BiGCNLayer:
    """Graph convolution with binarized weights and input features.

    `w_latent` is the full-precision master copy; it is clipped to
    [-1, 1] after optimizer updates so the straight-through gate on the
    weight gradient cannot permanently zero a coordinate.
    """

    w_latent: np.ndarray

    def __post_init__(self):
        self.w_latent = np.asarray(self.w_latent, dtype=np.float64)
        if self.w_latent.ndim != 2:
            raise ValueError("weights must be 2-D")

    @property
    def d_in(self) -> int:
        return self.w_latent.shape[0]

    @property
    def d_out(self) -> int:
        return self.w_latent.shape[1]


@dataclass
class LayerCache:
    """Forward intermediates a binarized layer's backward pass needs.

    The rescaled binarized features themselves are never stored: the row
    scalars commute with the dropout mask and the weight product, so the
    backward pass folds them into the (much smaller) gradient instead.
    The packed inference path leaves `f_signs` as None; the backward pass
    recomputes the signs from `h_in` on demand.
    """

    h_in: np.ndarray  # pre-binarization input
    f_signs: np.ndarray | None  # (N, d_in) +-1 signs of h_in
    beta: np.ndarray  # (N,) row scalars
    b_signs: np.ndarray  # (d_in, d_out) +-1 signs of w_latent
    alpha: np.ndarray  # (d_out,) column scalars
    w_latent: np.ndarray
    zeta: np.ndarray  # binarized feature-extraction output
    drop_mask: np.ndarray | None = None


def _dropout_mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray:
    """Inverted-dropout mask: zeros with probability `rate`, else 1/(1-rate)."""
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def bigcn_forward(
    adj: NormalizedAdjacency,
    h_in: np.ndarray,
    layer: BiGCNLayer,
    training: bool = False,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, LayerCache]:
    """Binarized graph convolution: aggregate(bin(H) x bin(W)).

    No nonlinearity is applied; the sign in the next layer's input
    binarization plays that role. Training mode runs the float
    simulation (dropout masks individual entries of the binarized
    features, which a packed word cannot represent); inference mode runs
    the packed XNOR/popcount kernel.
    """
    h_in = np.asarray(h_in, dtype=np.float64)
    if h_in.ndim != 2 or h_in.shape[1] != layer.d_in:
        raise ValueError(f"expected (N, {layer.d_in}) input, got {h_in.shape}")

    b_signs = bl.sign_pm1(layer.w_latent)
    alpha = np.abs(layer.w_latent).mean(axis=0)

    drop_mask = None
    if training:
        f_signs = bl.sign_pm1(h_in)
        beta = np.abs(h_in).mean(axis=1)
        fm = f_signs
        if dropout > 0.0:
            if rng is None:
                raise ValueError("training with dropout requires an rng")
            drop_mask = _dropout_mask(rng, h_in.shape, dropout)
            fm = f_signs * drop_mask
        zeta = (fm @ (b_signs * alpha[None, :])) * beta[:, None]
    else:
        packed_f = bl.binarize_rows(h_in)
        f_signs = None
        beta = packed_f.scalars
        zeta = bl.bin_gemm(packed_f, bl.binarize_columns(layer.w_latent))

    h_out = aggregate(adj, zeta)
    cache = LayerCache(
        h_in=h_in,
        f_signs=f_signs,
        beta=beta,
        b_signs=b_signs,
        alpha=alpha,
        w_latent=layer.w_latent,
        zeta=zeta,
        drop_mask=drop_mask,
    )
    return h_out, cache


def ste_gate(grad: np.ndarray, reference: np.ndarray, mode: str) -> np.ndarray:
    """Straight-through gate: pass the gradient where |reference| < 1."""
    if mode == "grad":
        return grad * (np.abs(grad) < 1.0)
    if mode == "input":
        return grad * (np.abs(reference) < 1.0)
    raise ValueError(f"unknown STE mode {mode!r}; expected one of {STE_MODES}")


def _latent_weight_grad(
    grad_w_tilde: np.ndarray,
    b_signs: np.ndarray,
    alpha: np.ndarray,
    w_latent: np.ndarray,
) -> np.ndarray:
    """Full-precision weight gradient through the column binarization.

    Each column couples through its shared scalar (the mean absolute
    value), contributing sign(w_ij)/d_in times the column's rescaled
    gradient mass, plus the straight-through term for the sign itself.
    """
    d_in = w_latent.shape[0]
    col_mass = (grad_w_tilde * b_signs).sum(axis=0)
    scalar_term = b_signs * (col_mass[None, :] / d_in)
    sign_term = alpha[None, :] * grad_w_tilde * (np.abs(w_latent) < 1.0)
    return scalar_term + sign_term


def bigcn_backward(
    cache: LayerCache,
    adj: NormalizedAdjacency,
    grad_out: np.ndarray,
    ste_mode: str = "grad",
    need_input_grad: bool = True,
) -> tuple[np.ndarray | None, np.ndarray]:
    """Gradients of a binarized graph convolution.

    Returns (grad_h_in, grad_w_latent). The feature gradient is the
    binary-approximated one passed through the straight-through gate;
    the weight gradient keeps full precision.
    """
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if grad_out.shape != cache.zeta.shape:
        raise ValueError(f"gradient shape {grad_out.shape} != {cache.zeta.shape}")

    grad_zeta = adj.matrix.T @ grad_out
    f_signs = cache.f_signs if cache.f_signs is not None else bl.sign_pm1(cache.h_in)
    fm = f_signs * cache.drop_mask if cache.drop_mask is not None else f_signs
    # (beta * fm)^T grad_zeta with the row scaling folded into the gradient
    grad_w_tilde = fm.T @ (grad_zeta * cache.beta[:, None])
    grad_w_latent = _latent_weight_grad(grad_w_tilde, cache.b_signs,
                                        cache.alpha, cache.w_latent)

    grad_h_in = None
    if need_input_grad:
        w_tilde = cache.b_signs * cache.alpha[None, :]
        grad_h_tilde = grad_zeta @ w_tilde.T
        if cache.drop_mask is not None:
            grad_h_tilde = grad_h_tilde * cache.drop_mask
        grad_h_in = ste_gate(grad_h_tilde, cache.h_in, ste_mode)
    return grad_h_in, grad_w_latent


@dataclass
class GCNLayer:
    """Full-precision graph convolution weights (baseline)."""

    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)

    @property
    def d_in(self) -> int:
        return self.w.shape[0]

    @property
    def d_out(self) -> int:
        return self.w.shape[1]


@dataclass
class GCNCache:
    h_in: np.ndarray  # input after dropout, as fed to the product
    w: np.ndarray
    pre_act: np.ndarray
    activation: bool
    drop_mask: np.ndarray | None = None


def gcn_forward(
    adj: NormalizedAdjacency,
    h_in: np.ndarray,
    w: np.ndarray,
    activation: bool,
) -> np.ndarray:
    """Full-precision graph convolution, ReLU optional."""
    h_in = np.asarray(h_in, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if h_in.ndim != 2 or h_in.shape[1] != w.shape[0]:
        raise ValueError(f"shape mismatch: {h_in.shape} x {w.shape}")
    out = aggregate(adj, h_in @ w)
    return np.maximum(out, 0.0) if activation else out


def gcn_forward_cached(
    adj: NormalizedAdjacency,
    h_in: np.ndarray,
    layer: GCNLayer,
    activation: bool,
    training: bool = False,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, GCNCache]:
    h_in = np.asarray(h_in, dtype=np.float64)
    if h_in.shape[1] != layer.d_in:
        raise ValueError(f"expected (N, {layer.d_in}) input, got {h_in.shape}")
    drop_mask = None
    if training and dropout > 0.0:
        if rng is None:
            raise ValueError("training with dropout requires an rng")
        drop_mask = _dropout_mask(rng, h_in.shape, dropout)
        h_in = h_in * drop_mask
    pre_act = aggregate(adj, h_in @ layer.w)
    out = np.maximum(pre_act, 0.0) if activation else pre_act
    return out, GCNCache(h_in=h_in, w=layer.w, pre_act=pre_act,
                         activation=activation, drop_mask=drop_mask)


def gcn_backward(
    cache: GCNCache,
    adj: NormalizedAdjacency,
    grad_out: np.ndarray,
    need_input_grad: bool = True,
) -> tuple[np.ndarray | None, np.ndarray]:
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if grad_out.shape != cache.pre_act.shape:
        raise ValueError(f"gradient shape {grad_out.shape} != {cache.pre_act.shape}")
    if cache.activation:
        grad_out = grad_out * (cache.pre_act > 0.0)
    grad_z = adj.matrix.T @ grad_out
    grad_w = cache.h_in.T @ grad_z
    grad_h = None
    if need_input_grad:
        grad_h = grad_z @ cache.w.T
        if cache.drop_mask is not None:
            grad_h = grad_h * cache.drop_mask
    return grad_h, grad_w


@dataclass
class BiSAGELayer:
    """Binarized mean-aggregator convolution: self path plus neighbor path."""

    w_self: np.ndarray
    w_neigh: np.ndarray

    def __post_init__(self):
        self.w_self = np.asarray(self.w_self, dtype=np.float64)
        self.w_neigh = np.asarray(self.w_neigh, dtype=np.float64)
        if self.w_self.shape != self.w_neigh.shape:
            raise ValueError("self and neighbor weights must share a shape")

    @property
    def d_in(self) -> int:
        return self.w_self.shape[0]

    @property
    def d_out(self) -> int:
        return self.w_self.shape[1]


@dataclass
class BiSAGECache:
    self_cache: "SageHalfCache"
    neigh_cache: "SageHalfCache"
    h_in: np.ndarray
    f_signs: np.ndarray | None
    beta: np.ndarray
    drop_mask: np.ndarray | None


@dataclass
class SageHalfCache:
    b_signs: np.ndarray
    alpha: np.ndarray
    w_latent: np.ndarray


def bisage_forward(
    neighbor_mean,
    h_in: np.ndarray,
    layer: BiSAGELayer,
    training: bool = False,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, BiSAGECache]:
    """Binarized GraphSAGE convolution with a mean aggregator.

    `neighbor_mean` is the row-stochastic neighbor operator from
    `graph.neighbor_mean_matrix`; nodes without neighbors get a zero
    neighbor term. Both weight matrices consume the same binarized
    input. No nonlinearity, as with the binarized graph convolution.
    """
    h_in = np.asarray(h_in, dtype=np.float64)
    if h_in.ndim != 2 or h_in.shape[1] != layer.d_in:
        raise ValueError(f"expected (N, {layer.d_in}) input, got {h_in.shape}")

    drop_mask = None
    if training:
        f_signs = bl.sign_pm1(h_in)
        beta = np.abs(h_in).mean(axis=1)
        fm = f_signs
        if dropout > 0.0:
            if rng is None:
                raise ValueError("training with dropout requires an rng")
            drop_mask = _dropout_mask(rng, h_in.shape, dropout)
            fm = f_signs * drop_mask
        packed_f = None
    else:
        packed_f = bl.binarize_rows(h_in)
        f_signs = None
        beta = packed_f.scalars

    halves = []
    zetas = []
    for w in (layer.w_self, layer.w_neigh):
        b_signs = bl.sign_pm1(w)
        alpha = np.abs(w).mean(axis=0)
        if training:
            zeta = (fm @ (b_signs * alpha[None, :])) * beta[:, None]
        else:
            zeta = bl.bin_gemm(packed_f, bl.binarize_columns(w))
        halves.append(SageHalfCache(b_signs=b_signs, alpha=alpha, w_latent=w))
        zetas.append(zeta)

    h_out = zetas[0] + neighbor_mean @ zetas[1]
    cache = BiSAGECache(self_cache=halves[0], neigh_cache=halves[1],
                        h_in=h_in, f_signs=f_signs, beta=beta, drop_mask=drop_mask)
    return h_out, cache


def bisage_backward(
    cache: BiSAGECache,
    neighbor_mean,
    grad_out: np.ndarray,
    ste_mode: str = "grad",
    need_input_grad: bool = True,
) -> tuple[np.ndarray | None, np.ndarray, np.ndarray]:
    """Gradients of the binarized mean-aggregator convolution.

    Returns (grad_h_in, grad_w_self, grad_w_neigh).
    """
    grad_out = np.asarray(grad_out, dtype=np.float64)
    grad_zeta_self = grad_out
    grad_zeta_neigh = neighbor_mean.T @ grad_out

    f_signs = cache.f_signs if cache.f_signs is not None else bl.sign_pm1(cache.h_in)
    fm = f_signs * cache.drop_mask if cache.drop_mask is not None else f_signs

    grads_w = []
    grad_h_tilde = np.zeros_like(cache.h_in)
    for half, grad_zeta in (
        (cache.self_cache, grad_zeta_self),
        (cache.neigh_cache, grad_zeta_neigh),
    ):
        grad_w_tilde = fm.T @ (grad_zeta * cache.beta[:, None])
        grads_w.append(_latent_weight_grad(grad_w_tilde, half.b_signs,
                                           half.alpha, half.w_latent))
        if need_input_grad:
            w_tilde = half.b_signs * half.alpha[None, :]
            grad_h_tilde += grad_zeta @ w_tilde.T

    grad_h_in = None
    if need_input_grad:
        if cache.drop_mask is not None:
            grad_h_tilde = grad_h_tilde * cache.drop_mask
        grad_h_in = ste_gate(grad_h_tilde, cache.h_in, ste_mode)
    return grad_h_in, grads_w[0], grads_w[1]


@dataclass
class BatchNormState:
    """Running statistics for affine-free per-column standardization."""

    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.9
    eps: float = 1e-5

    @classmethod
    def for_dim(cls, dim: int, momentum: float = 0.9, eps: float = 1e-5) -> "BatchNormState":
        return cls(running_mean=np.zeros(dim), running_var=np.ones(dim),
                   momentum=momentum, eps=eps)


def batch_norm_apply(h: np.ndarray, training: bool, state: BatchNormState) -> np.ndarray:
    """Standardize columns to zero mean and unit variance (no affine).

    Training uses batch statistics and folds them into the running ones;
    inference standardizes with the running statistics.
    """
    out, _ = batch_norm_forward(h, training, state)
    return out


@dataclass
class BatchNormCache:
    normalized: np.ndarray
    inv_std: np.ndarray


def batch_norm_forward(
    h: np.ndarray, training: bool, state: BatchNormState
) -> tuple[np.ndarray, BatchNormCache]:
    h = np.asarray(h, dtype=np.float64)
    if training:
        mean = h.mean(axis=0)
        var = h.var(axis=0)
        state.running_mean = state.momentum * state.running_mean + (1 - state.momentum) * mean
        state.running_var = state.momentum * state.running_var + (1 - state.momentum) * var
    else:
        mean = state.running_mean
        var = state.running_var
    inv_std = 1.0 / np.sqrt(var + state.eps)
    normalized = (h - mean) * inv_std
    return normalized, BatchNormCache(normalized=normalized, inv_std=inv_std)


def batch_norm_backward(cache: BatchNormCache, grad_out: np.ndarray) -> np.ndarray:
    """Backward through training-mode standardization (batch statistics)."""
    n = grad_out.shape[0]
    y = cache.normalized
    mean_g = grad_out.mean(axis=0)
    mean_gy = (grad_out * y).mean(axis=0) if n > 1 else np.zeros(grad_out.shape[1])
    return cache.inv_std * (grad_out - mean_g - y * mean_gy)


def masked_softmax_xent(
    logits: np.ndarray, labels: np.ndarray, mask: np.ndarray
) -> tuple[float, np.ndarray]:
    """Cross-entropy over the masked nodes, averaged over their count.

    Returns (loss, grad_logits); gradient rows outside the mask are zero.
    """
    logits = np.asarray(logits, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise ValueError("mask selects no nodes")
    labels = np.asarray(labels, dtype=np.int64)
    sel = logits[idx]
    sel_labels = labels[idx]
    if sel_labels.min() < 0 or sel_labels.max() >= logits.shape[1]:
        raise ValueError("labels out of range for the logit width")

    shifted = sel - sel.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    picked = probs[np.arange(idx.size), sel_labels]
    loss = float(-np.log(np.maximum(picked, 1e-300)).mean())

    grad = np.zeros_like(logits)
    g = probs.copy()
    g[np.arange(idx.size), sel_labels] -= 1.0
    grad[idx] = g / idx.size
    return loss, grad


def masked_accuracy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("mask selects no nodes")
    pred = np.asarray(logits)[mask].argmax(axis=1)
    return float((pred == np.asarray(labels)[mask]).mean())
