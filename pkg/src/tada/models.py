"""Network definitions: denoising autoencoder, discriminator, SNR meta-targeter."""
from __future__ import annotations

import numpy as np

from tada.gradnet import functional as F
from tada.gradnet.nn import LSTM, BatchNorm1d, Conv1d, Dense, Dropout, Module, count_params
from tada.gradnet.tensor import Tensor, as_tensor, concat, leaky_relu, log, no_grad, relu, reshape, sigmoid, transpose

__all__ = [
    "ARCH_VERSION", "KERNEL", "AutoencoderModel", "DiscriminatorModel", "LcEnsembleModel",
    "build_autoencoder", "build_discriminator", "build_lc_ensemble", "count_params",
    "inference_param_count",
]

ARCH_VERSION = "tada-arch-1"
KERNEL = 5
FRAME = 16  # samples per LSTM time step


def _as_batch(x) -> Tensor:
    """[L] or [N, L] or [N, 1, L] -> [N, 1, L] tensor."""
    x = as_tensor(x)
    if x.ndim == 1:
        return reshape(x, (1, 1, x.shape[0]))
    if x.ndim == 2:
        return reshape(x, (x.shape[0], 1, x.shape[1]))
    return x


class _ConvBlock(Module):
    def __init__(self, rng, c_in, c_out):
        self.conv = Conv1d(rng, c_in, c_out, KERNEL)
        self.bn = BatchNorm1d(c_out)

    def forward(self, x):
        return relu(self.bn(self.conv(x)))


class AutoencoderModel(Module):
    """Conv encoder 32/64, latent 128, decoder 64/32, sigmoid output."""

    def __init__(self, seed: int = 0):
        rng = np.random.default_rng([int(seed), 0xAE])
        self.seed = int(seed)
        self.enc1 = _ConvBlock(rng, 1, 32)
        self.enc2 = _ConvBlock(rng, 32, 64)
        self.latent = _ConvBlock(rng, 64, 128)
        self.dec1 = _ConvBlock(rng, 128, 64)
        self.dec2 = _ConvBlock(rng, 64, 32)
        self.out = Conv1d(rng, 32, 1, KERNEL, init="xavier")

    def forward(self, x):
        h = _as_batch(x)
        h = F.maxpool2(self.enc1(h))
        h = F.maxpool2(self.enc2(h))
        h = self.latent(h)
        h = F.upsample2(self.dec1(h))
        h = F.upsample2(self.dec2(h))
        return sigmoid(self.out(h))

    def denoise(self, normalized) -> np.ndarray:
        """Eval-mode forward of [N, L] normalized inputs; returns [N, L] raw outputs."""
        was_training = self.training
        self.eval()
        try:
            with no_grad():
                y = self.forward(np.atleast_2d(normalized)).data[:, 0, :]
        finally:
            self.train(was_training)
        return y


class DiscriminatorModel(Module):
    """Conv 16/32/64 with LeakyReLU(0.2), dropout 0.3 and pooling, dense -> sigmoid."""

    def __init__(self, seed: int = 0, length: int = 512, dropout: float = 0.3):
        rng = np.random.default_rng([int(seed), 0xD15C])
        self.seed = int(seed)
        drop_rng = np.random.default_rng([int(seed), 0xD20F])
        self.conv1 = Conv1d(rng, 1, 16, KERNEL)
        self.conv2 = Conv1d(rng, 16, 32, KERNEL)
        self.conv3 = Conv1d(rng, 32, 64, KERNEL)
        self.drop1 = Dropout(dropout, drop_rng)
        self.drop2 = Dropout(dropout, drop_rng)
        self.drop3 = Dropout(dropout, drop_rng)
        self.head = Dense(rng, 64 * (length // 8), 1, init="xavier")

    def forward(self, x):
        h = _as_batch(x)
        h = F.maxpool2(self.drop1(leaky_relu(self.conv1(h), 0.2)))
        h = F.maxpool2(self.drop2(leaky_relu(self.conv2(h), 0.2)))
        h = F.maxpool2(self.drop3(leaky_relu(self.conv3(h), 0.2)))
        return sigmoid(self.head(F.flatten(h)))[:, 0]


def _centered(x) -> Tensor:
    # inputs arrive min-max normalized to [0, 1]
    x = as_tensor(x)
    if x.ndim == 1:
        x = reshape(x, (1, x.shape[0]))
    if x.ndim == 3:
        x = reshape(x, (x.shape[0], x.shape[2]))
    return x - 0.5


def _log_energy(h) -> Tensor:
    """log mean square over time, per channel: [N, C, L] -> [N, C]."""
    return log((h * h).mean(axis=2) + 1e-6)


def _frame_log_energy(h) -> Tensor:
    """[N, C, L] -> [N, L // FRAME, C] log mean square of each channel per frame."""
    n, c, length = h.shape
    e = reshape(h * h, (n, c, length // FRAME, FRAME)).mean(axis=3)
    return transpose(log(e + 1e-6), (0, 2, 1))


class LstmBase(Module):
    """LSTM(32) over per-frame energies of a small learned filter bank."""

    def __init__(self, rng, hidden=32, filters=8):
        self.bank = Conv1d(rng, 1, filters, KERNEL)
        self.lstm = LSTM(rng, filters, hidden)
        self.head = Dense(rng, hidden, 3, init="xavier")

    def forward(self, x):
        seq = _frame_log_energy(self.bank(_as_batch(_centered(x))))
        return self.head(self.lstm(seq)[:, -1, :])


class CnnBase(Module):
    """Conv 16 -> ReLU -> pool -> conv 32, read out by log energies into a dense head.

    Energies are taken from the linear conv outputs, which makes each filter
    a learned band-power detector. Each channel contributes its overall log
    energy and the mean of its per-frame log energies; their gap grows with
    how bursty the channel is.
    """

    def __init__(self, rng, length=512):
        self.conv1 = Conv1d(rng, 1, 16, KERNEL)
        self.conv2 = Conv1d(rng, 16, 32, KERNEL)
        self.head = Dense(rng, 2 * (16 + 32), 3, init="xavier")

    def forward(self, x):
        h1 = self.conv1(_as_batch(_centered(x)))
        h2 = self.conv2(F.maxpool2(relu(h1)))
        feats = [_log_energy(h1), _frame_log_energy(h1).mean(axis=1),
                 _log_energy(h2), _frame_log_energy(h2).mean(axis=1)]
        return self.head(concat(feats, axis=1))


class HybridBase(Module):
    """Conv(16) band energies, global and as an LSTM(16) sequence, feeding a small MLP."""

    def __init__(self, rng, hidden=16, filters=16):
        self.conv = Conv1d(rng, 1, filters, KERNEL)
        self.lstm = LSTM(rng, filters, hidden)
        self.fc1 = Dense(rng, hidden + filters, 16)
        self.fc2 = Dense(rng, 16, 3, init="xavier")

    def forward(self, x):
        h = self.conv(_as_batch(_centered(x)))
        h_seq = self.lstm(_frame_log_energy(h))[:, -1, :]
        return self.fc2(relu(self.fc1(concat([h_seq, _log_energy(h)], axis=1))))


BASE_NAMES = ("lstm", "cnn", "hybrid")


class LcEnsembleModel(Module):
    """Three base SNR classifiers and an MLP meta-classifier over their scores."""

    def __init__(self, seed: int = 0, bases=BASE_NAMES, length: int = 512):
        rng = np.random.default_rng([int(seed), 0x1C])
        self.seed = int(seed)
        self.active = tuple(b for b in BASE_NAMES if b in bases)
        if not self.active:
            raise ValueError("ensemble needs at least one base model")
        # all three are always built so a given seed gives the same base weights
        self.lstm = LstmBase(rng)
        self.cnn = CnnBase(rng, length)
        self.hybrid = HybridBase(rng)
        self.meta_fc1 = Dense(rng, 3 * len(self.active), 16)
        self.meta_fc2 = Dense(rng, 16, 3, init="xavier")

    def named_parameters(self, prefix=""):
        for name, p in super().named_parameters(prefix):
            base = name[len(prefix):].split(".", 1)[0]
            if base in BASE_NAMES and base not in self.active:
                continue
            yield name, p

    def base(self, name) -> Module:
        return getattr(self, name)

    def base_scores(self, x) -> Tensor:
        """Concatenated class probabilities of the active base models."""
        return concat([F.softmax(self.base(name)(x), axis=1) for name in self.active], axis=1)

    def meta(self, scores) -> Tensor:
        return self.meta_fc2(relu(self.meta_fc1(scores)))

    def forward(self, x):
        return self.meta(self.base_scores(x))

    def predict(self, normalized) -> tuple[np.ndarray, np.ndarray]:
        """Scores [N, 3] and argmax class indices for [N, L] normalized inputs."""
        with no_grad():
            scores = self.forward(np.atleast_2d(normalized)).data
        return scores, scores.argmax(axis=1)


def build_autoencoder(seed: int = 0) -> AutoencoderModel:
    return AutoencoderModel(seed)


def build_discriminator(seed: int = 0) -> DiscriminatorModel:
    return DiscriminatorModel(seed)


def build_lc_ensemble(seed: int = 0, bases=BASE_NAMES) -> LcEnsembleModel:
    return LcEnsembleModel(seed, bases)


def inference_param_count(lc: LcEnsembleModel, ae: AutoencoderModel) -> int:
    return count_params(lc) + count_params(ae)
