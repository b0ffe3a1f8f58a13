"""Neural-network kernels, the MBConv classifier and its optimizers."""

from .gradcheck import run_gradcheck
from .init import he_init
from .layers import (
    BatchNormState,
    batch_norm,
    conv2d,
    cross_entropy,
    dense,
    depthwise_conv2d,
    global_average_pool,
    softmax,
    squeeze_excite,
    swish,
)
from .model import (
    BlockSpec,
    Network,
    NetworkConfig,
    count_parameters,
    model_backward,
    model_forward,
    parameter_shapes,
)
from .optim import Adam, AdamState, Optimizer, RMSprop, RMSpropState, adam_step, create_optimizer, rmsprop_step

__all__ = [
    "Adam",
    "AdamState",
    "BatchNormState",
    "BlockSpec",
    "Network",
    "NetworkConfig",
    "Optimizer",
    "RMSprop",
    "RMSpropState",
    "adam_step",
    "batch_norm",
    "conv2d",
    "count_parameters",
    "create_optimizer",
    "cross_entropy",
    "dense",
    "depthwise_conv2d",
    "global_average_pool",
    "he_init",
    "model_backward",
    "model_forward",
    "parameter_shapes",
    "rmsprop_step",
    "run_gradcheck",
    "softmax",
    "squeeze_excite",
    "swish",
]
