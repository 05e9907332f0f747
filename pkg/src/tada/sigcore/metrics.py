"""Pearson CC, temporal/spectral RRMSE and the power spectrum."""
from __future__ import annotations

import numpy as np

from tada.errors import DegenerateTruth, LengthMismatch, NonPowerOfTwoLength
from tada.sigcore.signal import as_samples

# a variance this small relative to the mean square counts as zero (std/rms < 1e-12)
FLAT_RTOL = 1e-24


def _pair(a, b):
    a = as_samples(a)
    b = as_samples(b)
    if a.shape != b.shape:
        raise LengthMismatch(f"{a.shape} vs {b.shape}")
    return a, b


def pearson_cc(a, b) -> float:
    """Population Pearson correlation; 0 when either side has zero variance."""
    a, b = _pair(a, b)
    if a.shape[-1] < 2:
        raise LengthMismatch("need at least two samples")
    da = a - a.mean()
    db = b - b.mean()
    va = float(np.mean(da * da))
    vb = float(np.mean(db * db))
    if va <= FLAT_RTOL * float(np.mean(a * a)) or vb <= FLAT_RTOL * float(np.mean(b * b)):
        return 0.0
    r = float(np.mean(da * db)) / np.sqrt(va * vb)
    return float(min(1.0, max(-1.0, r)))


def trrmse(estimate, truth) -> float:
    estimate, truth = _pair(estimate, truth)
    denom = np.sqrt(np.mean(truth * truth))
    if denom == 0.0:
        raise DegenerateTruth("truth RMS is zero")
    resid = estimate - truth
    return float(np.sqrt(np.mean(resid * resid)) / denom)


def _check_pow2(n: int):
    if n < 1 or n & (n - 1):
        raise NonPowerOfTwoLength(f"length {n} is not a power of two")


def power_spectrum(seg) -> np.ndarray:
    """Raw squared rFFT magnitudes, DC..Nyquist, along the last axis."""
    x = as_samples(seg)
    _check_pow2(x.shape[-1])
    spec = np.fft.rfft(x, axis=-1)
    return spec.real ** 2 + spec.imag ** 2


def srrmse(estimate, truth) -> float:
    estimate, truth = _pair(estimate, truth)
    return trrmse(power_spectrum(estimate), power_spectrum(truth))


def metrics_triple(estimate, truth) -> tuple[float, float, float]:
    return pearson_cc(estimate, truth), trrmse(estimate, truth), srrmse(estimate, truth)
