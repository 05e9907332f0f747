"""Small reverse-mode autodiff engine with the layers the denoiser needs."""
from tada.gradnet import functional
from tada.gradnet.functional import (
    batchnorm1d,
    bce,
    conv1d,
    cross_entropy,
    dense,
    dropout,
    flatten,
    lstm,
    maxpool2,
    power_spectrum,
    softmax,
    upsample2,
)
from tada.gradnet.nn import LSTM, BatchNorm1d, Conv1d, Dense, Dropout, Module, count_params
from tada.gradnet.optim import Adam, AdamState, adam_step
from tada.gradnet.tensor import (
    Tensor,
    as_tensor,
    concat,
    exp,
    leaky_relu,
    log,
    no_grad,
    relu,
    sigmoid,
    sqrt,
    tanh,
    transpose,
)

__all__ = [
    "functional", "batchnorm1d", "bce", "conv1d", "cross_entropy", "dense", "dropout", "flatten",
    "lstm", "maxpool2", "power_spectrum", "softmax", "upsample2",
    "LSTM", "BatchNorm1d", "Conv1d", "Dense", "Dropout", "Module", "count_params",
    "Adam", "AdamState", "adam_step",
    "Tensor", "as_tensor", "concat", "exp", "leaky_relu", "log", "no_grad", "relu", "sigmoid",
    "sqrt", "tanh", "transpose",
]
