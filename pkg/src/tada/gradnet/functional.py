"""Fused network primitives with hand-written backward passes.

Layout conventions: sequences are [N, C, L] (a missing batch axis is
accepted and restored on output), recurrent inputs are [N, T, D].
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from tada.errors import (
    DegenerateBatch,
    InvalidProbability,
    NonPowerOfTwoLength,
    OddLength,
    ShapeMismatch,
)
from tada.gradnet.tensor import DTYPE, Tensor, _sigmoid, as_tensor, make_op, reshape

BN_EPS = 1e-5
BN_MOMENTUM = 0.9
BCE_CLAMP = 1e-7


def _batched(x: Tensor, ndim: int):
    """Return (data with batch axis, squeeze flag)."""
    if x.ndim == ndim - 1:
        return x.data[None], True
    if x.ndim != ndim:
        raise ShapeMismatch(f"expected {ndim - 1} or {ndim} dims, got shape {x.shape}")
    return x.data, False


def conv1d(x, weight, bias):
    """Same-length cross-correlation with zero padding; odd kernels only."""
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    xd, squeeze = _batched(x, 3)
    n, c_in, length = xd.shape
    if weight.ndim != 3 or weight.shape[1] != c_in:
        raise ShapeMismatch(f"kernel {weight.shape} does not match input channels {c_in}")
    c_out, _, k = weight.shape
    if k % 2 == 0:
        raise ShapeMismatch("kernel size must be odd")
    if bias.shape != (c_out,):
        raise ShapeMismatch(f"bias {bias.shape} vs {c_out} output channels")
    pad = (k - 1) // 2
    xp = np.pad(xd, ((0, 0), (0, 0), (pad, pad)))
    cols = sliding_window_view(xp, k, axis=2).transpose(0, 2, 1, 3).reshape(n * length, c_in * k)
    w2 = weight.data.reshape(c_out, c_in * k)
    out = (cols @ w2.T).reshape(n, length, c_out).transpose(0, 2, 1) + bias.data[None, :, None]
    if squeeze:
        out = out[0]

    def backward(g):
        g = g.reshape(n, c_out, length).transpose(0, 2, 1).reshape(n * length, c_out)
        if weight.requires_grad:
            weight._accum((g.T @ cols).reshape(weight.shape))
        if bias.requires_grad:
            bias._accum(g.sum(axis=0))
        if x.requires_grad:
            dcols = (g @ w2).reshape(n, length, c_in, k)
            dxp = np.zeros_like(xp)
            for j in range(k):
                dxp[:, :, j:j + length] += dcols[:, :, :, j].transpose(0, 2, 1)
            dx = dxp[:, :, pad:pad + length]
            x._accum(dx[0] if squeeze else dx)

    return make_op(np.ascontiguousarray(out), (x, weight, bias), backward)


def batchnorm1d(x, gamma, beta, running_mean, running_var, training: bool,
                momentum: float = BN_MOMENTUM, eps: float = BN_EPS):
    """Per-channel batch normalization over batch and time axes.

    ``running_mean``/``running_var`` are plain arrays updated in place in
    training mode as ``momentum * old + (1 - momentum) * batch``.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    xd, squeeze = _batched(x, 3)
    n, c, length = xd.shape
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeMismatch("gamma/beta must have one entry per channel")
    g3 = gamma.data[None, :, None]
    if training:
        count = n * length
        if count < 2:
            raise DegenerateBatch("batch statistics need at least two positions")
        mu = xd.mean(axis=(0, 2))
        var = xd.var(axis=(0, 2))
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mu
        running_var *= momentum
        running_var += (1.0 - momentum) * var
    else:
        count = None
        mu, var = running_mean.copy(), running_var.copy()
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (xd - mu[None, :, None]) * inv_std[None, :, None]
    out = g3 * xhat + beta.data[None, :, None]

    def backward(g):
        g = g[None] if squeeze else g
        if gamma.requires_grad:
            gamma._accum((g * xhat).sum(axis=(0, 2)))
        if beta.requires_grad:
            beta._accum(g.sum(axis=(0, 2)))
        if x.requires_grad:
            dxhat = g * g3
            if training:
                s1 = dxhat.sum(axis=(0, 2), keepdims=True)
                s2 = (dxhat * xhat).sum(axis=(0, 2), keepdims=True)
                dx = inv_std[None, :, None] / count * (count * dxhat - s1 - xhat * s2)
            else:
                dx = dxhat * inv_std[None, :, None]
            x._accum(dx[0] if squeeze else dx)

    return make_op(out[0] if squeeze else out, (x, gamma, beta), backward)


def maxpool2(x):
    """Non-overlapping width-2 max pooling on the last axis; ties go to the earlier index."""
    x = as_tensor(x)
    length = x.shape[-1]
    if length % 2:
        raise OddLength(f"length {length} is odd")
    pairs = x.data.reshape(*x.shape[:-1], length // 2, 2)
    pick_second = pairs[..., 1] > pairs[..., 0]
    out = np.where(pick_second, pairs[..., 1], pairs[..., 0])

    def backward(g):
        dx = np.zeros_like(pairs)
        dx[..., 0] = np.where(pick_second, 0.0, g)
        dx[..., 1] = np.where(pick_second, g, 0.0)
        x._accum(dx.reshape(x.shape))

    return make_op(out, (x,), backward)


def upsample2(x):
    """Nearest-neighbour doubling of the last axis."""
    x = as_tensor(x)
    out = np.repeat(x.data, 2, axis=-1)

    def backward(g):
        x._accum(g.reshape(*x.shape, 2).sum(axis=-1))

    return make_op(out, (x,), backward)


def dense(x, weight, bias):
    """Affine map ``x @ W.T + b`` for x of shape [N] or [B, N]."""
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    if weight.ndim != 2 or x.shape[-1] != weight.shape[1] or bias.shape != (weight.shape[0],):
        raise ShapeMismatch(f"dense: x {x.shape}, W {weight.shape}, b {bias.shape}")
    out = x.data @ weight.data.T + bias.data

    def backward(g):
        if x.requires_grad:
            x._accum(g @ weight.data)
        if weight.requires_grad:
            weight._accum(np.atleast_2d(g).T @ np.atleast_2d(x.data))
        if bias.requires_grad:
            bias._accum(g if g.ndim == 1 else g.sum(axis=0))

    return make_op(out, (x, weight, bias), backward)


def lstm(x, w_ih, w_hh, bias):
    """Single-layer LSTM from a zero state; returns the full hidden sequence.

    Gate rows are stacked as input, forget, cell, output. x is [T, D] or
    [N, T, D]; weights are [4H, D], [4H, H] and [4H].
    """
    x, w_ih, w_hh, bias = (as_tensor(t) for t in (x, w_ih, w_hh, bias))
    xd, squeeze = _batched(x, 3)
    n, steps, d = xd.shape
    hidden = w_hh.shape[1]
    if w_ih.shape != (4 * hidden, d) or w_hh.shape != (4 * hidden, hidden) or bias.shape != (4 * hidden,):
        raise ShapeMismatch(f"lstm weights {w_ih.shape}, {w_hh.shape}, {bias.shape} vs input dim {d}")
    hs = np.zeros((n, steps + 1, hidden))
    cs = np.zeros((n, steps + 1, hidden))
    gates = np.zeros((n, steps, 4 * hidden))
    pre_x = xd @ w_ih.data.T + bias.data
    for t in range(steps):
        a = pre_x[:, t] + hs[:, t] @ w_hh.data.T
        act = np.empty_like(a)
        act[:, :2 * hidden] = _sigmoid(a[:, :2 * hidden])
        act[:, 2 * hidden:3 * hidden] = np.tanh(a[:, 2 * hidden:3 * hidden])
        act[:, 3 * hidden:] = _sigmoid(a[:, 3 * hidden:])
        i, f, gg, o = np.split(act, 4, axis=1)
        cs[:, t + 1] = f * cs[:, t] + i * gg
        hs[:, t + 1] = o * np.tanh(cs[:, t + 1])
        gates[:, t] = act
    out = hs[:, 1:]

    def backward(gout):
        gout = gout[None] if squeeze else gout
        dw_ih = np.zeros_like(w_ih.data)
        dw_hh = np.zeros_like(w_hh.data)
        db = np.zeros_like(bias.data)
        dx = np.zeros_like(xd)
        dh_next = np.zeros((n, hidden))
        dc_next = np.zeros((n, hidden))
        for t in reversed(range(steps)):
            i, f, gg, o = np.split(gates[:, t], 4, axis=1)
            tc = np.tanh(cs[:, t + 1])
            dh = gout[:, t] + dh_next
            dc = dh * o * (1.0 - tc * tc) + dc_next
            da = np.concatenate([
                dc * gg * i * (1.0 - i),
                dc * cs[:, t] * f * (1.0 - f),
                dc * i * (1.0 - gg * gg),
                dh * tc * o * (1.0 - o),
            ], axis=1)
            dw_ih += da.T @ xd[:, t]
            dw_hh += da.T @ hs[:, t]
            db += da.sum(axis=0)
            dx[:, t] = da @ w_ih.data
            dh_next = da @ w_hh.data
            dc_next = dc * f
        x._accum(dx[0] if squeeze else dx)
        w_ih._accum(dw_ih)
        w_hh._accum(dw_hh)
        bias._accum(db)

    return make_op(out[0] if squeeze else out, (x, w_ih, w_hh, bias), backward)


def dropout(x, p: float, training: bool, rng: np.random.Generator | None = None):
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p)."""
    if not 0.0 <= p < 1.0:
        raise InvalidProbability(f"dropout probability {p} not in [0, 1)")
    x = as_tensor(x)
    if not training or p == 0.0:
        return x
    if rng is None:
        raise ValueError("training-mode dropout needs a seeded generator")
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return make_op(x.data * mask, (x,), lambda g: x._accum(g * mask))


def bce(pred, label):
    """Mean binary cross-entropy of probabilities against 0/1 labels."""
    pred = as_tensor(pred)
    y = np.broadcast_to(np.asarray(label, dtype=DTYPE), pred.shape)
    p = np.clip(pred.data, BCE_CLAMP, 1.0 - BCE_CLAMP)
    inside = (pred.data >= BCE_CLAMP) & (pred.data <= 1.0 - BCE_CLAMP)
    count = max(p.size, 1)
    loss = -np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))

    def backward(g):
        pred._accum(g * inside * (-(y / p) + (1.0 - y) / (1.0 - p)) / count)

    return make_op(loss, (pred,), backward)


def cross_entropy(logits, labels):
    """Mean softmax cross-entropy; logits [B, C] (or [C]) and integer labels."""
    logits = as_tensor(logits)
    z = np.atleast_2d(logits.data)
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if labels.shape[0] != z.shape[0]:
        raise ShapeMismatch("one label per row of logits")
    shifted = z - z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logsum
    rows = np.arange(z.shape[0])
    loss = -logp[rows, labels].mean()

    def backward(g):
        d = np.exp(logp)
        d[rows, labels] -= 1.0
        d *= g / z.shape[0]
        logits._accum(d.reshape(logits.shape))

    return make_op(loss, (logits,), backward)


def softmax(x, axis=-1):
    x = as_tensor(x)
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        x._accum(out * (g - (g * out).sum(axis=axis, keepdims=True)))

    return make_op(out, (x,), backward)


def power_spectrum(x):
    """Differentiable squared rFFT magnitudes along the last axis."""
    x = as_tensor(x)
    length = x.shape[-1]
    if length < 1 or length & (length - 1):
        raise NonPowerOfTwoLength(f"length {length} is not a power of two")
    spec = np.fft.rfft(x.data, axis=-1)
    out = spec.real ** 2 + spec.imag ** 2

    def backward(g):
        z = np.zeros(x.shape, dtype=np.complex128)
        z[..., :spec.shape[-1]] = g * np.conj(spec)
        x._accum(2.0 * np.fft.fft(z, axis=-1).real)

    return make_op(out, (x,), backward)


def flatten(x):
    """Collapse everything after the batch axis."""
    return reshape(as_tensor(x), (x.shape[0], -1))
