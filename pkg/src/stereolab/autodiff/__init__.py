from .tensor import (
    Tensor,
    NonFiniteError,
    ShapeError,
    no_grad,
    is_grad_enabled,
    set_default_dtype,
    default_dtype,
    tensor,
    attention,
    concat,
    conv1d,
    conv2d,
    gelu,
    matmul,
    mean,
    relu,
    reshape,
    softmax,
    tensor_sum,
    transpose,
    upsample1d,
)
from .rng import RngStream
from .nn import Module, Parameter, Linear, Conv2d, Conv1d, GroupNorm, LayerNorm
from .optim import Adam
from .gradcheck import grad_check

__all__ = [
    "Tensor", "NonFiniteError", "ShapeError", "no_grad", "is_grad_enabled",
    "set_default_dtype", "default_dtype", "tensor", "attention", "concat",
    "conv1d", "conv2d", "gelu", "matmul", "mean", "relu", "reshape",
    "softmax", "tensor_sum", "transpose", "upsample1d",
    "RngStream", "Module", "Parameter", "Linear", "Conv2d", "Conv1d",
    "GroupNorm", "LayerNorm", "Adam", "grad_check",
]
