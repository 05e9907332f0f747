import math

import numpy as np
import pytest

from gradcases import CASES, GRAD_TOL, run_case
from tada.errors import DegenerateBatch, InvalidProbability, OddLength, ShapeMismatch
from tada.gradnet import (
    LSTM,
    Adam,
    AdamState,
    BatchNorm1d,
    Conv1d,
    Dense,
    Dropout,
    Module,
    Tensor,
    adam_step,
    count_params,
    functional as F,
    leaky_relu,
    no_grad,
    relu,
    sigmoid,
)
from tada.gradnet.tensor import tanh


@pytest.mark.parametrize("name", sorted(CASES))
def test_finite_difference_gradients(name):
    assert run_case(name) <= GRAD_TOL


# ---------------------------------------------------------------- conv1d


def test_conv1d_hand_example():
    out = F.conv1d(np.array([[1.0, 2.0, 3.0]]), np.array([[[1.0, 0.0, -1.0]]]), np.zeros(1))
    np.testing.assert_array_equal(out.data, [[-2.0, -2.0, 2.0]])


def test_conv1d_identity_and_constant():
    x = np.random.default_rng(0).normal(size=(2, 3, 10))
    delta = np.zeros((3, 3, 5))
    for c in range(3):
        delta[c, c, 2] = 1.0
    np.testing.assert_array_equal(F.conv1d(x, delta, np.zeros(3)).data, x)
    out = F.conv1d(x, np.zeros((4, 3, 3)), np.full(4, 1.5))
    assert out.shape == (2, 4, 10)
    assert np.all(out.data == 1.5)


def test_conv1d_shape_errors():
    with pytest.raises(ShapeMismatch):
        F.conv1d(np.ones((2, 8)), np.ones((1, 3, 3)), np.zeros(1))
    with pytest.raises(ShapeMismatch):
        F.conv1d(np.ones((1, 8)), np.ones((1, 1, 4)), np.zeros(1))
    with pytest.raises(ShapeMismatch):
        F.conv1d(np.ones((1, 8)), np.ones((2, 1, 3)), np.zeros(1))


# ---------------------------------------------------------------- batch norm


def test_batchnorm_train_on_standardized_channel():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(4, 1, 64))
    x = (x - x.mean()) / x.std()
    out = F.batchnorm1d(x, np.ones(1), np.zeros(1), np.zeros(1), np.ones(1), True).data
    # exactly x / sqrt(1 + eps) with eps = 1e-5; about 5e-6 relative off the identity
    np.testing.assert_allclose(out, x / np.sqrt(1.0 + 1e-5), rtol=1e-12, atol=1e-12)
    assert np.max(np.abs(out - x)) < 1e-5 * np.max(np.abs(x))


def test_batchnorm_gamma_zero_gives_beta():
    x = np.random.default_rng(2).normal(size=(2, 3, 8))
    out = F.batchnorm1d(x, np.zeros(3), np.array([1.0, -2.0, 0.5]), np.zeros(3), np.ones(3), True).data
    np.testing.assert_array_equal(out, np.broadcast_to(np.array([1.0, -2.0, 0.5])[None, :, None], x.shape))


def test_batchnorm_running_stats_and_eval():
    x = np.random.default_rng(3).normal(loc=2.0, scale=3.0, size=(4, 2, 16))
    rm, rv = np.zeros(2), np.ones(2)
    F.batchnorm1d(x, np.ones(2), np.zeros(2), rm, rv, True)
    np.testing.assert_allclose(rm, 0.1 * x.mean(axis=(0, 2)))
    np.testing.assert_allclose(rv, 0.9 + 0.1 * x.var(axis=(0, 2)))
    out = F.batchnorm1d(x, np.ones(2), np.zeros(2), rm, rv, False).data
    np.testing.assert_allclose(out, (x - rm[None, :, None]) / np.sqrt(rv[None, :, None] + 1e-5))
    with pytest.raises(DegenerateBatch):
        F.batchnorm1d(np.ones((1, 1, 1)), np.ones(1), np.zeros(1), np.zeros(1), np.ones(1), True)


# ---------------------------------------------------------------- activations, pooling


def test_activation_values():
    assert relu(Tensor(-1.0)).item() == 0.0 and relu(Tensor(2.0)).item() == 2.0
    assert sigmoid(Tensor(0.0)).item() == 0.5
    assert leaky_relu(Tensor(-2.0), 0.2).item() == pytest.approx(-0.4)
    s = sigmoid(Tensor([-800.0, 800.0])).data
    assert np.all(np.isfinite(s)) and s[0] >= 0 and s[1] <= 1


def test_maxpool_examples():
    x = Tensor([1.0, 3.0, 2.0, 2.0], requires_grad=True)
    out = F.maxpool2(x)
    np.testing.assert_array_equal(out.data, [3.0, 2.0])
    out[0].backward()
    np.testing.assert_array_equal(x.grad, [0, 1, 0, 0])
    x.zero_grad()
    out = F.maxpool2(x)
    out[1].backward()
    np.testing.assert_array_equal(x.grad, [0, 0, 1, 0])
    with pytest.raises(OddLength):
        F.maxpool2(np.ones(3))


def test_upsample_examples():
    np.testing.assert_array_equal(F.upsample2(np.array([1.0, 2.0])).data, [1, 1, 2, 2])
    x = np.random.default_rng(4).normal(size=(2, 3, 7))
    np.testing.assert_array_equal(F.maxpool2(F.upsample2(x)).data, x)


def test_dense_examples():
    x = np.array([1.0, -2.0, 3.0])
    np.testing.assert_array_equal(F.dense(x, np.eye(3), np.zeros(3)).data, x)
    np.testing.assert_array_equal(F.dense(x, np.zeros((2, 3)), np.array([4.0, 5.0])).data, [4.0, 5.0])
    with pytest.raises(ShapeMismatch):
        F.dense(x, np.eye(2), np.zeros(2))
    assert count_params(Dense(np.random.default_rng(0), 10, 1)) == 11


# ---------------------------------------------------------------- lstm


def _cell(x, h, c, w_ih, w_hh, b):
    a = w_ih @ x + w_hh @ h + b
    H = len(h)
    sig = lambda z: 1 / (1 + np.exp(-z))
    i, f, g, o = sig(a[:H]), sig(a[H:2 * H]), np.tanh(a[2 * H:3 * H]), sig(a[3 * H:])
    c = f * c + i * g
    return o * np.tanh(c), c


def test_lstm_zero_weights_give_zero_hidden():
    H, D = 3, 2
    b = np.zeros(4 * H)
    b[H:2 * H] = 1.0
    out = F.lstm(np.zeros((5, D)), np.zeros((4 * H, D)), np.zeros((4 * H, H)), b)
    assert out.shape == (5, H)
    assert np.all(out.data == 0.0)


def test_lstm_matches_hand_cell():
    rng = np.random.default_rng(5)
    D, H, T = 2, 3, 4
    w_ih, w_hh, b = rng.normal(size=(4 * H, D)), rng.normal(size=(4 * H, H)), rng.normal(size=4 * H)
    x = rng.normal(size=(T, D))
    out = F.lstm(x, w_ih, w_hh, b).data
    h, c = np.zeros(H), np.zeros(H)
    for t in range(T):
        h, c = _cell(x[t], h, c, w_ih, w_hh, b)
        np.testing.assert_allclose(out[t], h, rtol=1e-12, atol=1e-14)
    one = F.lstm(x[:1], w_ih, w_hh, b).data
    np.testing.assert_allclose(one[0], _cell(x[0], np.zeros(H), np.zeros(H), w_ih, w_hh, b)[0], atol=1e-15)


def test_lstm_module_forget_bias():
    layer = LSTM(np.random.default_rng(0), 4, 5)
    assert np.all(layer.bias.data[5:10] == 1.0)
    assert np.all(layer.bias.data[:5] == 0.0) and np.all(layer.bias.data[10:] == 0.0)
    with pytest.raises(ShapeMismatch):
        F.lstm(np.ones((3, 2)), layer.w_ih, layer.w_hh, layer.bias)


# ---------------------------------------------------------------- dropout


def test_dropout_modes_and_rate():
    x = np.random.default_rng(6).normal(size=(4, 8))
    assert F.dropout(x, 0.0, True, np.random.default_rng(0)).data is not None
    np.testing.assert_array_equal(F.dropout(x, 0.0, True, np.random.default_rng(0)).data, x)
    np.testing.assert_array_equal(F.dropout(x, 0.7, False).data, x)
    out = F.dropout(np.ones(100_000), 0.3, True, np.random.default_rng(1)).data
    assert abs(np.mean(out == 0.0) - 0.3) < 0.01
    np.testing.assert_allclose(out[out != 0], 1 / 0.7)
    again = F.dropout(np.ones(100_000), 0.3, True, np.random.default_rng(1)).data
    assert np.array_equal(out, again)
    for bad in (-0.1, 1.0):
        with pytest.raises(InvalidProbability):
            F.dropout(x, bad, True, np.random.default_rng(0))
        with pytest.raises(InvalidProbability):
            Dropout(bad, np.random.default_rng(0))


# ---------------------------------------------------------------- losses


def test_bce_values():
    assert F.bce(np.array(0.5), 1.0).item() == pytest.approx(math.log(2), abs=1e-12)
    assert F.bce(np.array(1 - 1e-7), 1.0).item() == pytest.approx(1e-7, rel=1e-6)
    assert F.bce(np.array(1.0), 1.0).item() == pytest.approx(1e-7, rel=1e-6)
    assert np.isfinite(F.bce(np.array(0.0), 1.0).item())


def test_cross_entropy_and_softmax():
    z = np.array([[1.0, 2.0, 3.0]])
    p = F.softmax(z).data
    np.testing.assert_allclose(p.sum(), 1.0)
    assert F.cross_entropy(z, [2]).item() == pytest.approx(-math.log(p[0, 2]))
    big = F.cross_entropy(np.array([[1000.0, 0.0]]), [1]).item()
    assert big == pytest.approx(1000.0)
    with pytest.raises(ShapeMismatch):
        F.cross_entropy(np.zeros((2, 3)), [0])


# ---------------------------------------------------------------- adam


def test_adam_first_step_closed_form():
    p = np.array([0.0])
    adam_step([p], [np.array([1.0])], AdamState(lr=1e-3))
    assert p[0] == pytest.approx(-1e-3 / (1 + 1e-8), rel=1e-12)
    assert p[0] == pytest.approx(-9.99999990e-4, abs=1e-12)


def test_adam_zero_gradient_no_change():
    p = np.array([1.5, -2.0])
    state = AdamState()
    adam_step([p], [np.zeros(2)], state)
    np.testing.assert_array_equal(p, [1.5, -2.0])
    assert state.t == 1


def test_adam_two_steps_hand_recurrence():
    g, lr, b1, b2, eps = 0.3, 1e-2, 0.9, 0.999, 1e-8
    p = np.array([1.0])
    state = AdamState(lr=lr)
    theta, m, v = 1.0, 0.0, 0.0
    for t in (1, 2):
        adam_step([p], [np.array([g])], state)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        theta -= lr * (m / (1 - b1 ** t)) / (math.sqrt(v / (1 - b2 ** t)) + eps)
        assert p[0] == pytest.approx(theta, abs=1e-15)
    assert state.t == 2
    with pytest.raises(ShapeMismatch):
        adam_step([p], [np.ones(2)], state)


def test_adam_optimizer_wrapper():
    w = Tensor(np.array([2.0]), requires_grad=True)
    opt = Adam([w], lr=0.1)
    for _ in range(200):
        opt.zero_grad()
        ((w - 0.5) * (w - 0.5)).sum().backward()
        opt.step()
    assert abs(w.data[0] - 0.5) < 1e-2


# ---------------------------------------------------------------- tape


def test_fan_out_accumulates_exactly():
    x = Tensor(np.random.default_rng(7).normal(size=5), requires_grad=True)
    (tanh(x) * x).sum().backward()
    single = x.grad.copy()
    x.zero_grad()
    y = tanh(x) * x
    (y + y).sum().backward()
    assert np.array_equal(x.grad, 2 * single)


def test_deep_chain_and_no_grad():
    x = Tensor(np.array([0.5]), requires_grad=True)
    y = x
    for _ in range(5000):
        y = y * 1.0
    y.sum().backward()
    assert x.grad[0] == 1.0
    with no_grad():
        z = x * 2
    assert not z.requires_grad


class _Tiny(Module):
    def __init__(self, seed):
        rng = np.random.default_rng(seed)
        self.conv = Conv1d(rng, 1, 2, 3)
        self.bn = BatchNorm1d(2)
        self.fc = Dense(rng, 16, 1)

    def forward(self, x):
        return self.fc(F.flatten(relu(self.bn(self.conv(x)))))


def test_module_determinism_and_state_dict():
    x = np.random.default_rng(8).normal(size=(3, 1, 8))
    a, b = _Tiny(1), _Tiny(1)
    outs = []
    for m in (a, b):
        m.train()
        out = m(x)
        out.sum().backward()
        outs.append((out.data.copy(), [p.grad.copy() for p in m.parameters()]))
    assert np.array_equal(outs[0][0], outs[1][0])
    assert all(np.array_equal(g, h) for g, h in zip(outs[0][1], outs[1][1]))
    assert count_params(a) == 2 * 3 + 2 + 2 + 2 + 16 + 1
    c = _Tiny(2)
    c.load_state_dict(a.state_dict())
    for m in (a, c):
        m.eval()
    assert np.array_equal(a(x).data, c(x).data)
    assert "bn.running_mean" in a.state_dict()
