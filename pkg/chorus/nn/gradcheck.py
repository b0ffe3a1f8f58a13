"""Finite-difference audit of every backward kernel and of a micro-width network.

All checks run in float64. Layer checks differentiate sum(out * R) for a fixed
random R; the network check differentiates the mean cross-entropy in infer
mode so batch statistics stay frozen.
"""

from __future__ import annotations

from typing import Callable, Dict, List, Optional

import numpy as np

from chorus.utils.logger import get_logger

from . import layers as L
from .model import Network, NetworkConfig

EPS = 1e-4
TOLERANCE = 1e-4

logger = get_logger(__name__)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    diff = np.linalg.norm(analytic - numeric)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-8)
    return float(diff / scale)


def numeric_gradient(f: Callable[[], float], x: np.ndarray, eps: float = EPS) -> np.ndarray:
    """Central differences of scalar f() with respect to every entry of x (perturbed in place)."""
    grad = np.zeros_like(x)
    flat, gflat = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + eps
        plus = f()
        flat[i] = original - eps
        minus = f()
        flat[i] = original
        gflat[i] = (plus - minus) / (2.0 * eps)
    return grad


def _check_layer(
    name: str,
    forward: Callable[[], np.ndarray],
    backward: Callable[[np.ndarray], Dict[str, np.ndarray]],
    tensors: Dict[str, np.ndarray],
    rng: np.random.Generator,
) -> List[dict]:
    r = rng.standard_normal(forward().shape)
    analytic = backward(r)
    rows = []
    for key, x in tensors.items():
        numeric = numeric_gradient(lambda: float(np.sum(forward() * r)), x)
        rows.append({"check": name, "tensor": key, "rel_error": relative_error(analytic[key], numeric)})
    return rows


def layer_checks(seed: int = 0) -> List[dict]:
    rng = np.random.default_rng(seed)
    rows: List[dict] = []

    x = rng.standard_normal((2, 3, 5, 6))
    w = rng.standard_normal((4, 3, 3, 3))
    b = rng.standard_normal(4)

    def conv_back(r):
        dx, dw, db = L.conv2d_backward(r, x, w, stride=2, padding=1)
        return {"input": dx, "weights": dw, "bias": db}

    rows += _check_layer(
        "conv2d", lambda: L.conv2d(x, w, b, stride=2, padding=1), conv_back,
        {"input": x, "weights": w, "bias": b}, rng,
    )

    dw_w = rng.standard_normal((3, 1, 3, 3))

    def dw_back(r):
        dx, dw = L.depthwise_conv2d_backward(r, x, dw_w, stride=1, padding=1)
        return {"input": dx, "weights": dw}

    rows += _check_layer(
        "depthwise_conv2d", lambda: L.depthwise_conv2d(x, dw_w, stride=1, padding=1), dw_back,
        {"input": x, "weights": dw_w}, rng,
    )

    gamma = rng.uniform(0.5, 1.5, 3)
    beta = rng.standard_normal(3)
    for mode in ("train", "infer"):
        state = L.BatchNormState(rng.standard_normal(3) * 0.1, rng.uniform(0.5, 1.5, 3))

        def bn_forward(mode=mode, state=state):
            return L.batch_norm(x, gamma, beta, state, mode)

        def bn_back(r, state=state, mode=mode):
            L.batch_norm(x, gamma, beta, state, mode)
            dx, dg, db = L.batch_norm_backward(r, x, gamma, state)
            return {"input": dx, "gamma": dg, "beta": db}

        rows += _check_layer(f"batch_norm[{mode}]", bn_forward, bn_back, {"input": x, "gamma": gamma, "beta": beta}, rng)

    rows += _check_layer(
        "swish", lambda: L.swish(x), lambda r: {"input": L.swish_backward(r, x)}, {"input": x}, rng
    )

    w1, b1 = rng.standard_normal((2, 3)), rng.standard_normal(2)
    w2, b2 = rng.standard_normal((3, 2)), rng.standard_normal(3)

    def se_back(r):
        dx, dw1, db1, dw2, db2 = L.squeeze_excite_backward(r, x, w1, b1, w2, b2)
        return {"input": dx, "reduce_weights": dw1, "reduce_bias": db1, "expand_weights": dw2, "expand_bias": db2}

    rows += _check_layer(
        "squeeze_excite", lambda: L.squeeze_excite(x, w1, b1, w2, b2), se_back,
        {"input": x, "reduce_weights": w1, "reduce_bias": b1, "expand_weights": w2, "expand_bias": b2}, rng,
    )

    rows += _check_layer(
        "global_average_pool",
        lambda: L.global_average_pool(x),
        lambda r: {"input": L.global_average_pool_backward(r, x.shape[2:])},
        {"input": x},
        rng,
    )

    v = rng.standard_normal((4, 5))
    dw_dense, db_dense = rng.standard_normal((3, 5)), rng.standard_normal(3)

    def dense_back(r):
        dx, dw, db = L.dense_backward(r, v, dw_dense)
        return {"input": dx, "weights": dw, "bias": db}

    rows += _check_layer(
        "dense", lambda: L.dense(v, dw_dense, db_dense), dense_back,
        {"input": v, "weights": dw_dense, "bias": db_dense}, rng,
    )

    logits = rng.standard_normal((4, 3))
    labels = [0, 2, 1, 2]
    analytic = L.softmax_cross_entropy_backward(L.softmax(logits), labels)
    numeric = numeric_gradient(lambda: L.cross_entropy(L.softmax(logits), labels), logits)
    rows.append({"check": "softmax_cross_entropy", "tensor": "logits", "rel_error": relative_error(analytic, numeric)})
    return rows


def network_checks(
    config: Optional[NetworkConfig] = None, seed: int = 0, n_frames: int = 12
) -> List[dict]:
    """Compare Network.loss_and_gradients with central differences for every parameter."""
    config = config or NetworkConfig.micro()
    rng = np.random.default_rng(seed)
    net = Network(config, seed=seed, dtype=np.float64).set_mode("infer")
    for state in net.bn.values():
        state.running_mean = rng.standard_normal(state.running_mean.shape) * 0.1
        state.running_var = rng.uniform(0.5, 1.5, state.running_var.shape)
    batch = rng.standard_normal((2, 1, config.n_mels, n_frames))
    labels = [int(i) for i in rng.integers(0, config.n_classes, size=2)]

    _, grads, _ = net.loss_and_gradients(batch, labels)

    def loss() -> float:
        return L.cross_entropy(L.softmax(net.forward(batch)), labels)

    rows = []
    for name, value in net.params.items():
        numeric = numeric_gradient(loss, value)
        rows.append({"check": "network", "tensor": name, "rel_error": relative_error(grads[name], numeric)})
    return rows


def run_gradcheck(seed: int = 0, config: Optional[NetworkConfig] = None) -> dict:
    """Full audit report; passed is True when every relative error is below the tolerance."""
    rows = layer_checks(seed) + network_checks(config, seed)
    worst = max(row["rel_error"] for row in rows)
    report = {
        "dtype": "float64",
        "eps": EPS,
        "tolerance": TOLERANCE,
        "max_rel_error": worst,
        "passed": bool(worst < TOLERANCE),
        "checks": rows,
    }
    logger.info("gradcheck_complete", checks=len(rows), max_rel_error=worst, passed=report["passed"])
    return report
