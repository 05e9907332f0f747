"""Segments, SNR levels and SNR-controlled mixing."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from tada.errors import (
    DegenerateArtifact,
    DegenerateClean,
    DegenerateSpan,
    LengthMismatch,
    NonFiniteSamples,
)

RATE_HZ = 256.0
SEGMENT_LENGTH = 512


class SnrLevel(enum.IntEnum):
    """Contamination level; the integer value doubles as the class index."""

    LOW = 0
    MID = 1
    HIGH = 2

    @property
    def db(self) -> float:
        return _LEVEL_DB[self]

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def from_db(cls, snr_db: float, atol: float = 1e-6) -> "SnrLevel":
        for level, value in _LEVEL_DB.items():
            if abs(value - snr_db) <= atol:
                return level
        raise ValueError(f"{snr_db} dB is not one of the three SNR levels")


_LEVEL_DB = {SnrLevel.LOW: -7.0, SnrLevel.MID: -2.5, SnrLevel.HIGH: 2.0}


@dataclass(frozen=True)
class Segment:
    samples: np.ndarray
    rate_hz: float = RATE_HZ

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("a segment is one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteSamples("segment contains NaN or Inf")
        if self.rate_hz <= 0:
            raise ValueError("rate_hz must be positive")
        object.__setattr__(self, "samples", arr)

    def __len__(self):
        return self.samples.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.samples if dtype is None else self.samples.astype(dtype)


@dataclass(frozen=True)
class ContaminatedPair:
    clean: np.ndarray
    artifact: np.ndarray
    lam: float
    mixture: np.ndarray
    snr_db: float
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def level(self) -> SnrLevel:
        return SnrLevel.from_db(self.snr_db)

    def realized_snr_db(self) -> float:
        return snr_db(self.clean, self.lam * self.artifact)


def as_samples(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteSamples("input contains NaN or Inf")
    return arr


def rms(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sqrt(np.mean(x * x)))


def snr_db(clean, noise) -> float:
    """SNR as 10*log10 of the RMS ratio (EEGdenoiseNet convention)."""
    return 10.0 * np.log10(rms(clean) / rms(noise))


def mix_at_snr(clean, artifact, snr_db: float) -> ContaminatedPair:
    """Scale ``artifact`` so that clean + lam*artifact has the requested SNR."""
    clean = as_samples(clean)
    artifact = as_samples(artifact)
    if clean.shape != artifact.shape:
        raise LengthMismatch(f"clean {clean.shape} vs artifact {artifact.shape}")
    rms_art = rms(artifact)
    rms_clean = rms(clean)
    if rms_art == 0.0:
        raise DegenerateArtifact("artifact RMS is zero")
    if rms_clean == 0.0:
        raise DegenerateClean("clean RMS is zero")
    lam = rms_clean / (rms_art * 10.0 ** (snr_db / 10.0))
    mixture = clean + lam * artifact
    return ContaminatedPair(clean=clean, artifact=artifact, lam=float(lam),
                            mixture=mixture, snr_db=float(snr_db))


def normalize_minmax(seg):
    """Map to [0, 1]; returns (normalized, offset, span) with x = y*span + offset."""
    x = as_samples(seg)
    lo = float(np.min(x))
    span = float(np.max(x)) - lo
    if not span > 0.0:
        raise DegenerateSpan("max equals min")
    return (x - lo) / span, lo, span


def denormalize_minmax(y, offset: float, span: float) -> np.ndarray:
    return np.asarray(y, dtype=np.float64) * span + offset


def normalize_rows(batch) -> np.ndarray:
    """Row-wise min-max normalization of a [n, L] array."""
    x = as_samples(batch)
    lo = x.min(axis=-1, keepdims=True)
    span = x.max(axis=-1, keepdims=True) - lo
    if np.any(span <= 0.0):
        raise DegenerateSpan("a row has max equal to min")
    return (x - lo) / span
