"""Forward and backward kernels for the MBConv classifier.

Tensors are numpy arrays in NCHW layout. Every forward kernel has a
``*_backward`` partner that takes the upstream gradient plus the forward
inputs and returns gradients with respect to those inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit, softmax as _softmax

from chorus.core.errors import LabelOutOfRange, ModeMisuse, ShapeMismatch

BN_EPS = 1e-5
BN_MOMENTUM = 0.9
PROB_FLOOR = 1e-12


def _out_dim(size: int, k: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - k) // stride + 1


def _pad(x: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def _tap(xp: np.ndarray, i: int, j: int, stride: int, ho: int, wo: int):
    """Strided view of the padded input seen by kernel tap (i, j)."""
    return (
        slice(None),
        slice(None),
        slice(i, i + stride * (ho - 1) + 1, stride),
        slice(j, j + stride * (wo - 1) + 1, stride),
    )


def _check_nchw(x: np.ndarray, name: str = "input") -> None:
    if x.ndim != 4:
        raise ShapeMismatch(f"{name} must be NCHW, got shape {x.shape}")


def _check_conv(x: np.ndarray, k: int, stride: int, padding: int) -> Tuple[int, int]:
    if stride < 1 or padding < 0:
        raise ShapeMismatch(f"invalid stride {stride} / padding {padding}")
    ho = _out_dim(x.shape[2], k, stride, padding)
    wo = _out_dim(x.shape[3], k, stride, padding)
    if ho < 1 or wo < 1:
        raise ShapeMismatch(f"kernel {k} does not fit input {x.shape[2:]} with padding {padding}")
    return ho, wo


# convolution


def conv2d(
    x: np.ndarray,
    weights: np.ndarray,
    bias: Optional[np.ndarray],
    stride: int = 1,
    padding: int = 0,
) -> np.ndarray:
    """Cross-correlation of NCHW input with OIKK weights."""
    _check_nchw(x)
    if weights.ndim != 4 or weights.shape[2] != weights.shape[3]:
        raise ShapeMismatch(f"weights must be O x I x K x K, got {weights.shape}")
    if weights.shape[1] != x.shape[1]:
        raise ShapeMismatch(f"weights expect {weights.shape[1]} input channels, input has {x.shape[1]}")
    if bias is not None and bias.shape != (weights.shape[0],):
        raise ShapeMismatch(f"bias shape {bias.shape} != ({weights.shape[0]},)")
    k = weights.shape[2]
    ho, wo = _check_conv(x, k, stride, padding)
    xp = _pad(x, padding)
    out = np.zeros((x.shape[0], weights.shape[0], ho, wo), dtype=np.result_type(x, weights))
    for i in range(k):
        for j in range(k):
            patch = xp[_tap(xp, i, j, stride, ho, wo)]
            out += np.einsum("nchw,oc->nohw", patch, weights[:, :, i, j], optimize=True)
    if bias is not None:
        out += bias[None, :, None, None]
    return out


def conv2d_backward(
    dout: np.ndarray,
    x: np.ndarray,
    weights: np.ndarray,
    stride: int = 1,
    padding: int = 0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dx, dweights, dbias) of conv2d."""
    k = weights.shape[2]
    ho, wo = dout.shape[2], dout.shape[3]
    xp = _pad(x, padding)
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(weights)
    for i in range(k):
        for j in range(k):
            idx = _tap(xp, i, j, stride, ho, wo)
            dw[:, :, i, j] = np.einsum("nohw,nchw->oc", dout, xp[idx], optimize=True)
            dxp[idx] += np.einsum("nohw,oc->nchw", dout, weights[:, :, i, j], optimize=True)
    dx = dxp[:, :, padding : padding + x.shape[2], padding : padding + x.shape[3]]
    return dx, dw, dout.sum(axis=(0, 2, 3))


def depthwise_conv2d(x: np.ndarray, weights: np.ndarray, stride: int = 1, padding: int = 0) -> np.ndarray:
    """Per-channel spatial convolution with C x 1 x K x K weights."""
    _check_nchw(x)
    if weights.ndim != 4 or weights.shape[1] != 1 or weights.shape[2] != weights.shape[3]:
        raise ShapeMismatch(f"depthwise weights must be C x 1 x K x K, got {weights.shape}")
    if weights.shape[0] != x.shape[1]:
        raise ShapeMismatch(f"depthwise weights have {weights.shape[0]} channels, input has {x.shape[1]}")
    k = weights.shape[2]
    ho, wo = _check_conv(x, k, stride, padding)
    xp = _pad(x, padding)
    out = np.zeros((x.shape[0], x.shape[1], ho, wo), dtype=np.result_type(x, weights))
    for i in range(k):
        for j in range(k):
            out += xp[_tap(xp, i, j, stride, ho, wo)] * weights[None, :, 0, i, j, None, None]
    return out


def depthwise_conv2d_backward(
    dout: np.ndarray,
    x: np.ndarray,
    weights: np.ndarray,
    stride: int = 1,
    padding: int = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    k = weights.shape[2]
    ho, wo = dout.shape[2], dout.shape[3]
    xp = _pad(x, padding)
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(weights)
    for i in range(k):
        for j in range(k):
            idx = _tap(xp, i, j, stride, ho, wo)
            dw[:, 0, i, j] = np.sum(dout * xp[idx], axis=(0, 2, 3))
            dxp[idx] += dout * weights[None, :, 0, i, j, None, None]
    dx = dxp[:, :, padding : padding + x.shape[2], padding : padding + x.shape[3]]
    return dx, dw


# batch normalization


@dataclass
class BatchNormState:
    """Running statistics of one normalized layer plus the statistics last used."""

    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = BN_MOMENTUM
    eps: float = BN_EPS
    used_mean: Optional[np.ndarray] = field(default=None, repr=False)
    used_var: Optional[np.ndarray] = field(default=None, repr=False)
    used_mode: str = "infer"

    @classmethod
    def fresh(cls, channels: int, dtype=np.float32) -> "BatchNormState":
        return cls(np.zeros(channels, dtype=dtype), np.ones(channels, dtype=dtype))


def batch_norm(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    state: BatchNormState,
    mode: str,
) -> np.ndarray:
    """Per-channel normalization; train mode uses batch statistics and updates running ones."""
    _check_nchw(x)
    if gamma.shape != (x.shape[1],) or beta.shape != (x.shape[1],):
        raise ShapeMismatch(f"gamma/beta must have shape ({x.shape[1]},)")
    if mode == "train":
        if x.shape[0] * x.shape[2] * x.shape[3] == 1:
            raise ModeMisuse("train-mode batch norm needs more than one value per channel")
        mean = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
        m = state.momentum
        state.running_mean = (m * state.running_mean + (1.0 - m) * mean).astype(state.running_mean.dtype)
        state.running_var = (m * state.running_var + (1.0 - m) * var).astype(state.running_var.dtype)
    elif mode == "infer":
        mean, var = state.running_mean, state.running_var
    else:
        raise ModeMisuse(f"unknown mode {mode!r}")
    state.used_mean, state.used_var, state.used_mode = mean, var, mode
    inv_std = 1.0 / np.sqrt(var + state.eps)
    xhat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
    return gamma[None, :, None, None] * xhat + beta[None, :, None, None]


def batch_norm_backward(
    dout: np.ndarray,
    x: np.ndarray,
    gamma: np.ndarray,
    state: BatchNormState,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dx, dgamma, dbeta) using the statistics of the matching forward call."""
    mean, var = state.used_mean, state.used_var
    if mean is None or var is None:
        raise ModeMisuse("batch_norm_backward called before batch_norm")
    inv_std = (1.0 / np.sqrt(var + state.eps))[None, :, None, None]
    xhat = (x - mean[None, :, None, None]) * inv_std
    axes = (0, 2, 3)
    dgamma = np.sum(dout * xhat, axis=axes)
    dbeta = np.sum(dout, axis=axes)
    dxhat = dout * gamma[None, :, None, None]
    if state.used_mode == "train":
        m = x.shape[0] * x.shape[2] * x.shape[3]
        dx = (inv_std / m) * (
            m * dxhat
            - np.sum(dxhat, axis=axes, keepdims=True)
            - xhat * np.sum(dxhat * xhat, axis=axes, keepdims=True)
        )
    else:
        dx = dxhat * inv_std
    return dx, dgamma, dbeta


# activations


def sigmoid(x: np.ndarray) -> np.ndarray:
    return expit(x)


def swish(x: np.ndarray) -> np.ndarray:
    return x * expit(x)


def swish_backward(dout: np.ndarray, x: np.ndarray) -> np.ndarray:
    s = expit(x)
    return dout * s * (1.0 + x * (1.0 - s))


# squeeze-excitation


def se_reduced_dim(channels: int, se_ratio: float) -> int:
    return max(1, int(round(channels * se_ratio)))


def squeeze_excite(
    x: np.ndarray,
    reduce_weights: np.ndarray,
    reduce_bias: np.ndarray,
    expand_weights: np.ndarray,
    expand_bias: np.ndarray,
) -> np.ndarray:
    """x scaled per channel by sigmoid(W2 · swish(W1 · GAP(x) + b1) + b2)."""
    _check_nchw(x)
    c = x.shape[1]
    r = reduce_weights.shape[0]
    if reduce_weights.shape != (r, c) or expand_weights.shape != (c, r):
        raise ShapeMismatch(
            f"SE weights {reduce_weights.shape}/{expand_weights.shape} do not match {c} channels"
        )
    if reduce_bias.shape != (r,) or expand_bias.shape != (c,):
        raise ShapeMismatch("SE bias shapes do not match weights")
    gate = _se_gate(x, reduce_weights, reduce_bias, expand_weights, expand_bias)[-1]
    return x * gate[:, :, None, None]


def _se_gate(x, w1, b1, w2, b2):
    pooled = x.mean(axis=(2, 3))
    z1 = pooled @ w1.T + b1
    a1 = swish(z1)
    gate = expit(a1 @ w2.T + b2)
    return pooled, z1, a1, gate


def squeeze_excite_backward(
    dout: np.ndarray,
    x: np.ndarray,
    reduce_weights: np.ndarray,
    reduce_bias: np.ndarray,
    expand_weights: np.ndarray,
    expand_bias: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dx, dW1, db1, dW2, db2)."""
    pooled, z1, a1, gate = _se_gate(x, reduce_weights, reduce_bias, expand_weights, expand_bias)
    dx = dout * gate[:, :, None, None]
    dgate = np.sum(dout * x, axis=(2, 3))
    dz2 = dgate * gate * (1.0 - gate)
    dw2 = dz2.T @ a1
    db2 = dz2.sum(axis=0)
    dz1 = swish_backward(dz2 @ expand_weights, z1)
    dw1 = dz1.T @ pooled
    db1 = dz1.sum(axis=0)
    dpooled = dz1 @ reduce_weights
    dx = dx + dpooled[:, :, None, None] / (x.shape[2] * x.shape[3])
    return dx, dw1, db1, dw2, db2


# pooling and head


def global_average_pool(x: np.ndarray) -> np.ndarray:
    _check_nchw(x)
    return x.mean(axis=(2, 3))


def global_average_pool_backward(dout: np.ndarray, spatial: Tuple[int, int]) -> np.ndarray:
    h, w = spatial
    return np.broadcast_to(dout[:, :, None, None] / (h * w), dout.shape + (h, w)).copy()


def dense(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """x · Wᵀ + b for N x C input and K x C weights."""
    if x.ndim != 2 or weights.ndim != 2 or weights.shape[1] != x.shape[1]:
        raise ShapeMismatch(f"dense input {x.shape} incompatible with weights {weights.shape}")
    if bias.shape != (weights.shape[0],):
        raise ShapeMismatch(f"bias shape {bias.shape} != ({weights.shape[0]},)")
    return x @ weights.T + bias


def dense_backward(
    dout: np.ndarray, x: np.ndarray, weights: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    return dout @ weights, dout.T @ x, dout.sum(axis=0)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, computed as exp(x - max) / sum."""
    return _softmax(logits, axis=1)


def _check_labels(labels: Sequence[int], n: int, k: int) -> np.ndarray:
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != (n,):
        raise ShapeMismatch(f"expected {n} labels, got {y.shape}")
    if n and (y.min() < 0 or y.max() >= k):
        raise LabelOutOfRange(f"labels must be in [0, {k}), got range [{y.min()}, {y.max()}]")
    return y


def cross_entropy(probs: np.ndarray, labels: Sequence[int]) -> float:
    """Mean over the batch of -ln p[label], p clamped below at 1e-12."""
    y = _check_labels(labels, probs.shape[0], probs.shape[1])
    picked = probs[np.arange(probs.shape[0]), y]
    return float(np.mean(-np.log(np.maximum(picked, PROB_FLOOR))))


def softmax_cross_entropy_backward(probs: np.ndarray, labels: Sequence[int]) -> np.ndarray:
    """Gradient of mean cross-entropy w.r.t. logits: (p - one_hot(y)) / N."""
    y = _check_labels(labels, probs.shape[0], probs.shape[1])
    grad = probs.copy()
    grad[np.arange(probs.shape[0]), y] -= 1.0
    return grad / probs.shape[0]
