"""Compact MBConv classifier: stem, inverted-residual blocks with SE, head, dense."""

from __future__ import annotations

import copy
from collections import OrderedDict
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from chorus.core.classifier import Classifier
from chorus.core.errors import ModeMisuse, ShapeMismatch, TooFewFrames
from chorus.utils.seeds import derive_seed

from .init import he_init
from .layers import (
    BatchNormState,
    batch_norm,
    batch_norm_backward,
    conv2d,
    conv2d_backward,
    cross_entropy,
    dense,
    dense_backward,
    depthwise_conv2d,
    depthwise_conv2d_backward,
    global_average_pool,
    global_average_pool_backward,
    se_reduced_dim,
    softmax,
    softmax_cross_entropy_backward,
    squeeze_excite,
    squeeze_excite_backward,
    swish,
    swish_backward,
)

STEM_KERNEL = 3
STEM_STRIDE = 2

Gradients = Dict[str, np.ndarray]
Backward = Callable[[np.ndarray, Gradients], np.ndarray]


class BlockSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    expand_ratio: int = Field(1, ge=1)
    out_channels: int = Field(..., ge=1)
    stride: int = 1
    repeats: int = Field(1, ge=1)
    se_ratio: float = 0.25
    kernel_size: int = Field(3, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "BlockSpec":
        if self.stride not in (1, 2):
            raise ValueError(f"stride must be 1 or 2, got {self.stride}")
        if not 0.0 < self.se_ratio <= 1.0:
            raise ValueError(f"se_ratio must be in (0, 1], got {self.se_ratio}")
        if self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd")
        return self


def _default_blocks() -> List[BlockSpec]:
    return [
        BlockSpec(expand_ratio=1, out_channels=16, stride=1, repeats=1),
        BlockSpec(expand_ratio=4, out_channels=24, stride=2, repeats=2),
        BlockSpec(expand_ratio=4, out_channels=40, stride=2, repeats=2),
        BlockSpec(expand_ratio=4, out_channels=80, stride=2, repeats=2),
    ]


class NetworkConfig(BaseModel):
    """Architecture of the classifier. Parameter count is a pure function of this."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_classes: int = Field(182, ge=2)
    n_mels: int = Field(64, ge=1)
    stem_channels: int = Field(16, ge=1)
    blocks: List[BlockSpec] = Field(default_factory=_default_blocks)
    head_channels: int = Field(128, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "NetworkConfig":
        if not self.blocks:
            raise ValueError("at least one block is required")
        return self

    @classmethod
    def micro(cls, n_classes: int = 3, n_mels: int = 8) -> "NetworkConfig":
        """Tiny width used by gradient audits and unit tests; still has expand, SE and a residual."""
        return cls(
            n_classes=n_classes,
            n_mels=n_mels,
            stem_channels=4,
            blocks=[
                BlockSpec(expand_ratio=1, out_channels=4, stride=1, repeats=1, se_ratio=0.5),
                BlockSpec(expand_ratio=2, out_channels=6, stride=2, repeats=2, se_ratio=0.25),
            ],
            head_channels=8,
        )

    @property
    def total_stride(self) -> int:
        stride = STEM_STRIDE
        for block in self.blocks:
            stride *= block.stride
        return stride


@dataclass(frozen=True)
class BlockPlan:
    """One expanded MBConv unit (a BlockSpec with repeats unrolled)."""

    index: int
    in_channels: int
    mid_channels: int
    out_channels: int
    stride: int
    kernel_size: int
    se_channels: int

    @property
    def expands(self) -> bool:
        return self.mid_channels != self.in_channels

    @property
    def residual(self) -> bool:
        return self.stride == 1 and self.in_channels == self.out_channels

    @property
    def prefix(self) -> str:
        return f"blocks.{self.index}"


def block_plan(config: NetworkConfig) -> List[BlockPlan]:
    plans: List[BlockPlan] = []
    channels = config.stem_channels
    for spec in config.blocks:
        for r in range(spec.repeats):
            mid = channels * spec.expand_ratio
            plans.append(
                BlockPlan(
                    index=len(plans),
                    in_channels=channels,
                    mid_channels=mid,
                    out_channels=spec.out_channels,
                    stride=spec.stride if r == 0 else 1,
                    kernel_size=spec.kernel_size,
                    se_channels=se_reduced_dim(mid, spec.se_ratio),
                )
            )
            channels = spec.out_channels
    return plans


def _conv_bn_shapes(prefix: str, weight: Tuple[int, ...]) -> List[Tuple[str, Tuple[int, ...]]]:
    c = weight[0]
    return [
        (f"{prefix}.conv.weight", weight),
        (f"{prefix}.bn.gamma", (c,)),
        (f"{prefix}.bn.beta", (c,)),
    ]


def parameter_shapes(config: NetworkConfig) -> "OrderedDict[str, Tuple[int, ...]]":
    """Declared shape of every trainable tensor, in forward order."""
    shapes: List[Tuple[str, Tuple[int, ...]]] = []
    shapes += _conv_bn_shapes("stem", (config.stem_channels, 1, STEM_KERNEL, STEM_KERNEL))
    channels = config.stem_channels
    for plan in block_plan(config):
        p = plan.prefix
        if plan.expands:
            shapes += _conv_bn_shapes(f"{p}.expand", (plan.mid_channels, plan.in_channels, 1, 1))
        k = plan.kernel_size
        shapes += _conv_bn_shapes(f"{p}.dw", (plan.mid_channels, 1, k, k))
        shapes += [
            (f"{p}.se.reduce.weight", (plan.se_channels, plan.mid_channels)),
            (f"{p}.se.reduce.bias", (plan.se_channels,)),
            (f"{p}.se.expand.weight", (plan.mid_channels, plan.se_channels)),
            (f"{p}.se.expand.bias", (plan.mid_channels,)),
        ]
        shapes += _conv_bn_shapes(f"{p}.project", (plan.out_channels, plan.mid_channels, 1, 1))
        channels = plan.out_channels
    shapes += _conv_bn_shapes("head", (config.head_channels, channels, 1, 1))
    shapes += [
        ("classifier.weight", (config.n_classes, config.head_channels)),
        ("classifier.bias", (config.n_classes,)),
    ]
    return OrderedDict(shapes)


def count_parameters(config: NetworkConfig) -> int:
    """Closed-form trainable parameter count, computed from the config alone."""
    stem = config.stem_channels
    total = stem * STEM_KERNEL * STEM_KERNEL + 2 * stem
    c_in = stem
    for spec in config.blocks:
        for _ in range(spec.repeats):
            mid = c_in * spec.expand_ratio
            r = max(1, int(round(mid * spec.se_ratio)))
            if spec.expand_ratio > 1:
                total += c_in * mid + 2 * mid
            total += mid * spec.kernel_size**2 + 2 * mid
            total += 2 * r * mid + r + mid
            total += mid * spec.out_channels + 2 * spec.out_channels
            c_in = spec.out_channels
    total += c_in * config.head_channels + 2 * config.head_channels
    total += config.head_channels * config.n_classes + config.n_classes
    return total


def _initial_value(name: str, shape: Tuple[int, ...], seed: int, dtype) -> np.ndarray:
    if name.endswith(".gamma"):
        return np.ones(shape, dtype=dtype)
    if name.endswith((".beta", ".bias")):
        return np.zeros(shape, dtype=dtype)
    return he_init(shape, seed, dtype=dtype)


class Network(Classifier):
    """Parameters, batch-norm running statistics and mode of one classifier instance.

    Forward/backward on one instance are single-threaded; separate instances are
    independent.
    """

    def __init__(
        self,
        config: NetworkConfig,
        seed: int = 0,
        dtype=np.float32,
        metadata: Optional[dict] = None,
    ) -> None:
        self.config = config
        self.plan = block_plan(config)
        self.params: "OrderedDict[str, np.ndarray]" = OrderedDict(
            (name, _initial_value(name, shape, derive_seed(seed, i), dtype))
            for i, (name, shape) in enumerate(parameter_shapes(config).items())
        )
        self.bn: Dict[str, BatchNormState] = {
            name[: -len(".gamma")]: BatchNormState.fresh(shape[0], dtype)
            for name, shape in parameter_shapes(config).items()
            if name.endswith(".bn.gamma")
        }
        self.mode = "train"
        self.metadata: dict = dict(metadata or {})

    # bookkeeping

    @property
    def n_classes(self) -> int:
        return self.config.n_classes

    @property
    def dtype(self):
        return next(iter(self.params.values())).dtype

    @property
    def class_names(self) -> List[str]:
        names = self.metadata.get("class_names")
        return list(names) if names else [str(i) for i in range(self.n_classes)]

    def set_mode(self, mode: str) -> "Network":
        if mode not in ("train", "infer"):
            raise ModeMisuse(f"unknown mode {mode!r}")
        self.mode = mode
        return self

    def copy(self) -> "Network":
        return copy.deepcopy(self)

    def astype(self, dtype) -> "Network":
        """Copy with every parameter and running statistic cast to dtype."""
        other = self.copy()
        other.params = OrderedDict((k, v.astype(dtype)) for k, v in other.params.items())
        for state in other.bn.values():
            state.running_mean = state.running_mean.astype(dtype)
            state.running_var = state.running_var.astype(dtype)
        return other

    def buffers(self) -> "OrderedDict[str, np.ndarray]":
        out: "OrderedDict[str, np.ndarray]" = OrderedDict()
        for prefix, state in self.bn.items():
            out[f"{prefix}.running_mean"] = state.running_mean
            out[f"{prefix}.running_var"] = state.running_var
        return out

    def state_dict(self) -> Dict[str, np.ndarray]:
        tensors = dict(self.params)
        tensors.update(self.buffers())
        return tensors

    def load_state_dict(self, tensors: Dict[str, np.ndarray]) -> None:
        expected = self.state_dict()
        missing = sorted(set(expected) - set(tensors))
        unexpected = sorted(set(tensors) - set(expected))
        if missing or unexpected:
            raise ShapeMismatch(f"tensor names differ: missing={missing[:3]} unexpected={unexpected[:3]}")
        dtype = self.dtype
        for name, ref in expected.items():
            if tuple(tensors[name].shape) != tuple(ref.shape):
                raise ShapeMismatch(f"{name}: expected shape {ref.shape}, got {tensors[name].shape}")
        for name in self.params:
            self.params[name] = np.asarray(tensors[name], dtype=dtype).copy()
        for prefix, state in self.bn.items():
            state.running_mean = np.asarray(tensors[f"{prefix}.running_mean"], dtype=dtype).copy()
            state.running_var = np.asarray(tensors[f"{prefix}.running_var"], dtype=dtype).copy()

    # forward stages; each returns (output, backward closure)

    def _conv_bn(
        self,
        x: np.ndarray,
        prefix: str,
        stride: int,
        padding: int,
        depthwise: bool = False,
        activate: bool = True,
    ) -> Tuple[np.ndarray, Backward]:
        w_name, g_name, b_name = f"{prefix}.conv.weight", f"{prefix}.bn.gamma", f"{prefix}.bn.beta"
        w, gamma, beta = self.params[w_name], self.params[g_name], self.params[b_name]
        if depthwise:
            y = depthwise_conv2d(x, w, stride, padding)
        else:
            y = conv2d(x, w, None, stride, padding)
        state = self.bn[f"{prefix}.bn"]
        z = batch_norm(y, gamma, beta, state, self.mode)
        stats = replace(state)
        out = swish(z) if activate else z

        def backward(dout: np.ndarray, grads: Gradients) -> np.ndarray:
            dz = swish_backward(dout, z) if activate else dout
            dy, grads[g_name], grads[b_name] = batch_norm_backward(dz, y, gamma, stats)
            if depthwise:
                dx, grads[w_name] = depthwise_conv2d_backward(dy, x, w, stride, padding)
            else:
                dx, grads[w_name], _ = conv2d_backward(dy, x, w, stride, padding)
            return dx

        return out, backward

    def _squeeze_excite(self, x: np.ndarray, prefix: str) -> Tuple[np.ndarray, Backward]:
        names = [f"{prefix}.reduce.weight", f"{prefix}.reduce.bias", f"{prefix}.expand.weight", f"{prefix}.expand.bias"]
        weights = [self.params[n] for n in names]
        out = squeeze_excite(x, *weights)

        def backward(dout: np.ndarray, grads: Gradients) -> np.ndarray:
            dx, *dparams = squeeze_excite_backward(dout, x, *weights)
            for name, g in zip(names, dparams):
                grads[name] = g
            return dx

        return out, backward

    def _block(self, x: np.ndarray, plan: BlockPlan) -> Tuple[np.ndarray, Backward]:
        p = plan.prefix
        stages: List[Backward] = []
        h = x
        if plan.expands:
            h, back = self._conv_bn(h, f"{p}.expand", 1, 0)
            stages.append(back)
        h, back = self._conv_bn(h, f"{p}.dw", plan.stride, plan.kernel_size // 2, depthwise=True)
        stages.append(back)
        h, back = self._squeeze_excite(h, f"{p}.se")
        stages.append(back)
        h, back = self._conv_bn(h, f"{p}.project", 1, 0, activate=False)
        stages.append(back)
        out = h + x if plan.residual else h

        def backward(dout: np.ndarray, grads: Gradients) -> np.ndarray:
            d = dout
            for stage in reversed(stages):
                d = stage(d, grads)
            return d + dout if plan.residual else d

        return out, backward

    def _check_batch(self, batch: np.ndarray) -> np.ndarray:
        batch = np.asarray(batch)
        if batch.ndim != 4 or batch.shape[1] != 1:
            raise ShapeMismatch(f"batch must be N x 1 x n_mels x n_frames, got {batch.shape}")
        if batch.shape[2] != self.config.n_mels:
            raise ShapeMismatch(f"batch has {batch.shape[2]} mel bins, network expects {self.config.n_mels}")
        if batch.shape[3] < self.config.total_stride:
            raise TooFewFrames(
                f"{batch.shape[3]} frames is fewer than the total stride {self.config.total_stride}"
            )
        return batch.astype(self.dtype, copy=False)

    def _features(self, batch: np.ndarray) -> Tuple[np.ndarray, List[Backward]]:
        x = self._check_batch(batch)
        stages: List[Backward] = []
        h, back = self._conv_bn(x, "stem", STEM_STRIDE, STEM_KERNEL // 2)
        stages.append(back)
        for plan in self.plan:
            h, back = self._block(h, plan)
            stages.append(back)
        h, back = self._conv_bn(h, "head", 1, 0)
        stages.append(back)
        spatial = (h.shape[2], h.shape[3])
        pooled = global_average_pool(h)
        stages.append(lambda dout, grads: global_average_pool_backward(dout, spatial))
        return pooled, stages

    def forward_features(self, batch: np.ndarray) -> np.ndarray:
        """Pooled head activations (N x head_channels)."""
        return self._features(batch)[0]

    def forward(self, batch: np.ndarray) -> np.ndarray:
        """Logits N x n_classes in the current mode."""
        pooled, _ = self._features(batch)
        return dense(pooled, self.params["classifier.weight"], self.params["classifier.bias"])

    def loss_and_gradients(
        self, batch: np.ndarray, labels: Sequence[int]
    ) -> Tuple[float, Gradients, np.ndarray]:
        """Mean cross-entropy, its gradient for every parameter, and the batch probabilities."""
        pooled, stages = self._features(batch)
        w, b = self.params["classifier.weight"], self.params["classifier.bias"]
        probs = softmax(dense(pooled, w, b))
        loss = cross_entropy(probs, labels)

        grads: Gradients = {}
        dlogits = softmax_cross_entropy_backward(probs, labels)
        d, grads["classifier.weight"], grads["classifier.bias"] = dense_backward(dlogits, pooled, w)
        for stage in reversed(stages):
            d = stage(d, grads)
        return loss, OrderedDict((name, grads[name]) for name in self.params), probs

    def predict_proba(self, batch: np.ndarray) -> np.ndarray:
        previous = self.mode
        self.mode = "infer"
        try:
            return softmax(self.forward(batch))
        finally:
            self.mode = previous


def model_forward(net: Network, batch: np.ndarray) -> np.ndarray:
    return net.forward(batch)


def model_backward(net: Network, batch: np.ndarray, labels: Sequence[int]) -> Gradients:
    return net.loss_and_gradients(batch, labels)[1]
