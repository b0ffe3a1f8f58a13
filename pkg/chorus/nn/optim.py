"""Adam and RMSprop, as pure step functions and as stateful optimizers."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from chorus.core.errors import InvalidParams

Params = Dict[str, np.ndarray]


@dataclass
class AdamState:
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)
    t: int = 0


@dataclass
class RMSpropState:
    v: Params = field(default_factory=dict)


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Params:
    """Bias-corrected Adam update; advances state.t and returns new parameters."""
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    updated: Params = {}
    for name, theta in params.items():
        g = grads[name]
        m = beta1 * state.m.get(name, np.zeros_like(theta)) + (1.0 - beta1) * g
        v = beta2 * state.v.get(name, np.zeros_like(theta)) + (1.0 - beta2) * g * g
        state.m[name], state.v[name] = m, v
        step = lr * (m / c1) / (np.sqrt(v / c2) + eps)
        updated[name] = (theta - step).astype(theta.dtype, copy=False)
    return updated


def rmsprop_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: RMSpropState,
    lr: float,
    rho: float = 0.9,
    eps: float = 1e-8,
) -> Params:
    """v <- rho*v + (1-rho)*g^2; theta <- theta - lr*g/(sqrt(v) + eps)."""
    updated: Params = {}
    for name, theta in params.items():
        g = grads[name]
        v = rho * state.v.get(name, np.zeros_like(theta)) + (1.0 - rho) * g * g
        state.v[name] = v
        updated[name] = (theta - lr * g / (np.sqrt(v) + eps)).astype(theta.dtype, copy=False)
    return updated


class Optimizer(ABC):
    def __init__(self, lr: float) -> None:
        if lr <= 0:
            raise InvalidParams(f"learning rate must be positive, got {lr}")
        self.lr = lr

    @abstractmethod
    def step(self, params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray]) -> Params:
        """Return updated parameters."""


class Adam(Optimizer):
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
        super().__init__(lr)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.state = AdamState()

    def step(self, params, grads):
        return adam_step(params, grads, self.state, self.lr, self.beta1, self.beta2, self.eps)


class RMSprop(Optimizer):
    def __init__(self, lr: float, rho: float = 0.9, eps: float = 1e-8) -> None:
        super().__init__(lr)
        self.rho, self.eps = rho, eps
        self.state = RMSpropState()

    def step(self, params, grads):
        return rmsprop_step(params, grads, self.state, self.lr, self.rho, self.eps)


def create_optimizer(name: str, lr: float) -> Optimizer:
    """Factory for the optimizers named in TrainConfig."""
    name = name.lower()
    if name == "adam":
        return Adam(lr)
    if name == "rmsprop":
        return RMSprop(lr)
    raise InvalidParams(f"unknown optimizer {name!r}; expected 'adam' or 'rmsprop'")
