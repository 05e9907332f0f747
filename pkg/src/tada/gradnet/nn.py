"""Parameter-holding layers and a minimal ``Module`` container."""
from __future__ import annotations

import numpy as np

from tada.errors import InvalidProbability
from tada.gradnet import functional as F
from tada.gradnet.tensor import Tensor


def parameter(data, name=None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


def kaiming_uniform(rng, shape, fan_in):
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def xavier_uniform(rng, shape, fan_in, fan_out):
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


class Module:
    """Attribute-order registry of parameters, buffers and submodules."""

    training = True

    def named_parameters(self, prefix=""):
        for key, val in vars(self).items():
            if isinstance(val, Tensor) and val.requires_grad:
                yield prefix + key, val
            elif isinstance(val, Module):
                yield from val.named_parameters(f"{prefix}{key}.")
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{prefix}{key}.{i}.")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix=""):
        for key, val in vars(self).items():
            if key.startswith("running_") and isinstance(val, np.ndarray):
                yield prefix + key, val
            elif isinstance(val, Module):
                yield from val.named_buffers(f"{prefix}{key}.")
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield from item.named_buffers(f"{prefix}{key}.{i}.")

    def modules(self):
        yield self
        for val in vars(self).values():
            if isinstance(val, Module):
                yield from val.modules()
            elif isinstance(val, (list, tuple)):
                for item in val:
                    if isinstance(item, Module):
                        yield from item.modules()

    def train(self, mode: bool = True):
        for m in self.modules():
            m.training = mode
        return self

    def eval(self):
        return self.train(False)

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {name: p.data.copy() for name, p in self.named_parameters()}
        state.update({name: b.copy() for name, b in self.named_buffers()})
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]):
        targets = dict(self.named_parameters())
        buffers = dict(self.named_buffers())
        missing = (set(targets) | set(buffers)) - set(state)
        if missing:
            raise KeyError(f"missing entries: {sorted(missing)}")
        for name, p in targets.items():
            if state[name].shape != p.shape:
                raise ValueError(f"{name}: shape {state[name].shape} != {p.shape}")
            p.data = np.array(state[name], dtype=np.float64)
        for name, b in buffers.items():
            b[...] = state[name]
        return self

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class Conv1d(Module):
    def __init__(self, rng, c_in, c_out, kernel=5, init="kaiming"):
        fan_in = c_in * kernel
        if init == "kaiming":
            w = kaiming_uniform(rng, (c_out, c_in, kernel), fan_in)
        else:
            w = xavier_uniform(rng, (c_out, c_in, kernel), fan_in, c_out * kernel)
        self.weight = parameter(w)
        self.bias = parameter(np.zeros(c_out))

    def forward(self, x):
        return F.conv1d(x, self.weight, self.bias)


class BatchNorm1d(Module):
    def __init__(self, channels):
        self.gamma = parameter(np.ones(channels))
        self.beta = parameter(np.zeros(channels))
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)

    def forward(self, x):
        return F.batchnorm1d(x, self.gamma, self.beta, self.running_mean, self.running_var, self.training)


class Dense(Module):
    def __init__(self, rng, n_in, n_out, init="kaiming"):
        if init == "kaiming":
            w = kaiming_uniform(rng, (n_out, n_in), n_in)
        else:
            w = xavier_uniform(rng, (n_out, n_in), n_in, n_out)
        self.weight = parameter(w)
        self.bias = parameter(np.zeros(n_out))

    def forward(self, x):
        return F.dense(x, self.weight, self.bias)


class LSTM(Module):
    def __init__(self, rng, n_in, hidden):
        self.hidden = hidden
        self.w_ih = parameter(xavier_uniform(rng, (4 * hidden, n_in), n_in, hidden))
        self.w_hh = parameter(xavier_uniform(rng, (4 * hidden, hidden), hidden, hidden))
        b = np.zeros(4 * hidden)
        b[hidden:2 * hidden] = 1.0  # forget gate starts open
        self.bias = parameter(b)

    def forward(self, x):
        return F.lstm(x, self.w_ih, self.w_hh, self.bias)


class Dropout(Module):
    def __init__(self, p, rng):
        if not 0.0 <= p < 1.0:
            raise InvalidProbability(f"dropout probability {p} not in [0, 1)")
        self.p = p
        self.rng = rng

    def forward(self, x):
        return F.dropout(x, self.p, self.training, self.rng)


def count_params(model: Module) -> int:
    """Trainable scalars; running statistics are not counted."""
    return int(sum(p.data.size for p in model.parameters()))
