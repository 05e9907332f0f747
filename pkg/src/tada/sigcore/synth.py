"""Seeded synthetic proxy corpus: EEG-like clean segments and EMG-like artifacts.

These stand in for the EEGdenoiseNet segments when the real files are not
available. Clean segments are 1/f-weighted sums of 1-40 Hz sinusoids;
artifacts are band-limited 20-120 Hz noise, either continuous or as short
bursts.
"""
from __future__ import annotations

import enum

import numpy as np

from tada.errors import InvalidCount
from tada.sigcore.signal import RATE_HZ, SEGMENT_LENGTH, ContaminatedPair, SnrLevel, mix_at_snr


class ArtifactKind(enum.Enum):
    CONTINUOUS = "continuous"
    SPIKE = "spike"


def _check_count(n):
    if int(n) != n or n < 1:
        raise InvalidCount(f"count must be a positive integer, got {n!r}")


def _bandlimited_noise(rng, length, lo_hz, hi_hz, rate=RATE_HZ):
    white = rng.standard_normal(length)
    spec = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(length, d=1.0 / rate)
    spec[(freqs < lo_hz) | (freqs > hi_hz)] = 0.0
    out = np.fft.irfft(spec, n=length)
    return out / np.sqrt(np.mean(out * out))


def synth_clean(seed: int, n: int, length: int = SEGMENT_LENGTH, rate: float = RATE_HZ) -> np.ndarray:
    """``n`` zero-mean EEG-like segments as an [n, length] array."""
    _check_count(n)
    rng = np.random.default_rng([int(seed), 0xC1EA])
    t = np.arange(length) / rate
    out = np.empty((n, length))
    for row in range(n):
        k = rng.integers(5, 13)
        freqs = rng.uniform(1.0, 40.0, size=k)
        phases = rng.uniform(0.0, 2 * np.pi, size=k)
        amps = rng.uniform(0.5, 1.5, size=k) / freqs
        x = (amps[:, None] * np.sin(2 * np.pi * freqs[:, None] * t + phases[:, None])).sum(axis=0)
        x /= np.sqrt(np.mean(x * x))
        x += 0.05 * _bandlimited_noise(rng, length, 0.0, rate / 2, rate)
        x -= x.mean()
        out[row] = x * rng.uniform(10.0, 30.0)
    return out


def synth_artifact(seed: int, n: int, kind=ArtifactKind.CONTINUOUS, length: int = SEGMENT_LENGTH,
                   rate: float = RATE_HZ, return_masks: bool = False):
    """``n`` EMG-like artifacts as an [n, length] array.

    Spike artifacts are 1-3 Hann-windowed bursts of at most 0.2 s on a 1%
    baseline. With ``return_masks`` a boolean [n, length] array marking the
    burst windows is returned as well (all True for continuous artifacts).
    """
    _check_count(n)
    kind = ArtifactKind(kind)
    rng = np.random.default_rng([int(seed), 0xA271, 0 if kind is ArtifactKind.CONTINUOUS else 1])
    out = np.empty((n, length))
    masks = np.ones((n, length), dtype=bool)
    max_burst = int(0.2 * rate)
    for row in range(n):
        base = _bandlimited_noise(rng, length, 20.0, 120.0, rate)
        if kind is ArtifactKind.CONTINUOUS:
            # slow amplitude drift so the interference is not stationary
            drift = 1.0 + 0.3 * np.sin(2 * np.pi * rng.uniform(0.2, 1.0) * np.arange(length) / rate
                                       + rng.uniform(0, 2 * np.pi))
            x = base * drift
        else:
            x = 0.01 * base
            mask = np.zeros(length, dtype=bool)
            for _ in range(rng.integers(1, 4)):
                width = int(rng.integers(max_burst // 4, max_burst + 1))
                start = int(rng.integers(0, length - width + 1))
                burst = _bandlimited_noise(rng, width, 20.0, 120.0, rate) * np.hanning(width)
                x[start:start + width] += rng.uniform(3.0, 8.0) * burst
                mask[start:start + width] = True
            masks[row] = mask
        out[row] = x * rng.uniform(5.0, 40.0)
    return (out, masks) if return_masks else out


def synth_pairs(seed: int, n_per_level: int, levels=tuple(SnrLevel), spike_fraction: float = 0.5,
                length: int = SEGMENT_LENGTH) -> list[ContaminatedPair]:
    """Contaminated pairs, ``n_per_level`` at each requested level, in level-major order."""
    _check_count(n_per_level)
    levels = [SnrLevel(lv) for lv in levels]
    total = n_per_level * len(levels)
    rng = np.random.default_rng([int(seed), 0x5A1])
    clean = synth_clean(seed, total, length)
    n_spike = int(round(spike_fraction * total))
    cont = synth_artifact(seed, max(total - n_spike, 1), ArtifactKind.CONTINUOUS, length)
    spike = synth_artifact(seed, max(n_spike, 1), ArtifactKind.SPIKE, length)
    kinds = np.array([ArtifactKind.SPIKE] * n_spike + [ArtifactKind.CONTINUOUS] * (total - n_spike))
    kinds = kinds[rng.permutation(total)]
    pairs = []
    ic = isp = 0
    for idx in range(total):
        level = levels[idx // n_per_level]
        if kinds[idx] is ArtifactKind.SPIKE:
            art = spike[isp]
            isp += 1
        else:
            art = cont[ic]
            ic += 1
        pair = mix_at_snr(clean[idx], art, level.db)
        pair.meta["kind"] = kinds[idx].value
        pairs.append(pair)
    return pairs
