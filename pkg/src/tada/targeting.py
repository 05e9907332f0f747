"""Covariance-driven logistic scale targeting.

Maps the unscaled autoencoder output ``A`` onto the amplitude range of the
contaminated input ``B``. Windows where ``B`` tracks ``A`` closely are taken
as low-noise sites; their logistic-weighted means and pooled variances fix
an affine map for ``A``. Two fallbacks cover the cases where that estimate
is unavailable (no qualifying window) or implausible (an output far outside
the input's amplitude envelope), both reverting to dataset-average
calibration statistics.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from tada.errors import InvalidTaps, MissingCalibration, WindowTooLarge
from tada.sigcore.metrics import FLAT_RTOL
from tada.sigcore.signal import SnrLevel, as_samples

STEEPNESS = 20.0


@dataclass(frozen=True)
class TargetingParams:
    tau: float = 0.8
    window: int = 32
    fir_taps: int = 5
    anomaly_factor: float = 1.5
    steepness: float = STEEPNESS

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau={self.tau} must lie in (0, 1)")
        if int(self.window) != self.window or self.window < 2:
            raise ValueError(f"window={self.window} must be an integer >= 2")
        if int(self.fir_taps) != self.fir_taps or self.fir_taps < 1 or self.fir_taps % 2 == 0:
            raise InvalidTaps(f"fir_taps={self.fir_taps} must be odd and >= 1")
        if not self.anomaly_factor > 1.0:
            raise ValueError(f"anomaly_factor={self.anomaly_factor} must exceed 1")


@dataclass
class CalibrationStats:
    """Per-level offset and amplitude ratio between truth and raw AE output."""

    offset: dict = field(default_factory=dict)
    ratio: dict = field(default_factory=dict)
    p99_amplitude: float = 1.0

    def for_level(self, level) -> tuple[float, float]:
        level = SnrLevel(level)
        if level not in self.offset or level not in self.ratio:
            raise MissingCalibration(f"no calibration for level {level.label}")
        return self.offset[level], self.ratio[level]

    def to_entries(self) -> dict[str, np.ndarray]:
        entries = {}
        for level in sorted(self.offset):
            entries[f"calibration.{level.name.lower()}.offset"] = np.array(self.offset[level])
            entries[f"calibration.{level.name.lower()}.ratio"] = np.array(self.ratio[level])
        entries["calibration.p99_amplitude"] = np.array(self.p99_amplitude)
        return entries

    @classmethod
    def from_entries(cls, entries) -> "CalibrationStats":
        stats = cls(p99_amplitude=float(entries["calibration.p99_amplitude"]))
        for level in SnrLevel:
            key = f"calibration.{level.name.lower()}"
            if f"{key}.offset" in entries:
                stats.offset[level] = float(entries[f"{key}.offset"])
                stats.ratio[level] = float(entries[f"{key}.ratio"])
        return stats


class RescaleMethod(enum.Enum):
    TARGETED = "targeted"
    STANDARD_FALLBACK = "standard_fallback"
    ANOMALY_FALLBACK = "anomaly_fallback"


@dataclass
class RescaleOutcome:
    """What ``scale_targeting`` did. The applied map is ``scale * A + offset``."""

    method: RescaleMethod
    scale: float
    offset: float
    omega_c: float = 0.0
    omega_p: float = 0.0
    omega: float = 0.0
    mu_c: float = float("nan")
    mu_p: float = float("nan")
    var_c: float = float("nan")
    var_p: float = float("nan")
    n_windows: int = 0
    length: int = 0
    degenerate_scale: bool = False  # qualifying windows existed but A was flat over them
    raw_r: np.ndarray | None = field(default=None, repr=False)
    smoothed_r: np.ndarray | None = field(default=None, repr=False)

    CSV_HEADER = ("method", "scale", "offset", "omega", "qualifying_windows")

    def csv_row(self) -> tuple:
        return (self.method.value, repr(self.scale), repr(self.offset), repr(self.omega), str(self.n_windows))


def _truncate(a, b):
    a, b = as_samples(a), as_samples(b)
    n = min(a.shape[-1], b.shape[-1])
    return a[:n], b[:n]


def running_correlation(a, b, window: int) -> np.ndarray:
    """Population Pearson r of every length-``window`` slice; flat windows give 0."""
    a, b = _truncate(a, b)
    if window < 2 or window > a.shape[0]:
        raise WindowTooLarge(f"window {window} does not fit length {a.shape[0]}")
    wa = sliding_window_view(a, window)
    wb = sliding_window_view(b, window)
    da = wa - wa.mean(axis=1, keepdims=True)
    db = wb - wb.mean(axis=1, keepdims=True)
    va = (da * da).mean(axis=1)
    vb = (db * db).mean(axis=1)
    cov = (da * db).mean(axis=1)
    flat = (va <= FLAT_RTOL * (wa * wa).mean(axis=1)) | (vb <= FLAT_RTOL * (wb * wb).mean(axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(flat, 0.0, cov / np.sqrt(va * vb))
    return np.clip(r, -1.0, 1.0)


def fir_smooth(series, taps: int) -> np.ndarray:
    """Centered moving average with edge replication; ``taps=1`` is the identity."""
    if int(taps) != taps or taps < 1 or taps % 2 == 0:
        raise InvalidTaps(f"taps={taps} must be odd and >= 1")
    series = np.asarray(series, dtype=np.float64)
    if taps == 1:
        return series.copy()
    half = taps // 2
    padded = np.pad(series, half, mode="edge")
    return np.convolve(padded, np.full(taps, 1.0 / taps), mode="valid")


def logistic_weight(r, tau: float, steepness: float = STEEPNESS):
    z = -steepness * (np.asarray(r, dtype=np.float64) - tau)
    out = 1.0 / (1.0 + np.exp(z))
    return float(out) if np.ndim(out) == 0 else out


def standard_map(a, calibration: CalibrationStats, level) -> tuple[float, float]:
    """(scale, offset) of the calibration fallback for signal ``a``."""
    if calibration is None:
        raise MissingCalibration("no calibration statistics supplied")
    mu_bar, rho_bar = calibration.for_level(level)
    mean_a = float(np.mean(a))
    return rho_bar, (1.0 - rho_bar) * mean_a + mu_bar


def standard_rescale(a, calibration: CalibrationStats, level) -> np.ndarray:
    """``(A - mean(A)) * ratio + mean(A) + offset`` with level-specific statistics."""
    a = as_samples(a)
    if calibration is None:
        raise MissingCalibration("no calibration statistics supplied")
    mu_bar, rho_bar = calibration.for_level(level)
    mean_a = a.mean()
    return (a - mean_a) * rho_bar + mean_a + mu_bar


def anomaly_filtration(rescaled, contaminated, kappa: float, fallback):
    """Return (segment, triggered).

    Triggers when ``max|rescaled| > kappa * max|contaminated|`` (strict), in
    which case ``fallback`` (an array, or a callable producing one) replaces
    the rescaled signal.
    """
    rescaled = np.asarray(rescaled, dtype=np.float64)
    bound = kappa * float(np.max(np.abs(contaminated)))
    if float(np.max(np.abs(rescaled))) > bound:
        out = fallback() if callable(fallback) else fallback
        return np.asarray(out, dtype=np.float64), True
    return rescaled, False


def _coverage(qualifying: np.ndarray, window: int, length: int) -> np.ndarray:
    """How many qualifying windows cover each sample."""
    starts = np.zeros(length + 1)
    idx = np.flatnonzero(qualifying)
    np.add.at(starts, idx, 1.0)
    np.add.at(starts, idx + window, -1.0)
    return np.cumsum(starts)[:length]


def _pooled_var(x, counts) -> float:
    total = counts.sum()
    m = (counts * x).sum() / total
    d = x - m
    return float((counts * d * d).sum() / total)


def scale_targeting(a, b, params: TargetingParams, calibration: CalibrationStats, level):
    """Rescale raw AE output ``a`` against the contaminated segment ``b``.

    Returns (output, RescaleOutcome). Both inputs are truncated to their
    common length first; the output has that length.
    """
    a, b = _truncate(a, b)
    length = a.shape[0]
    raw_r = running_correlation(a, b, params.window)
    r = fir_smooth(raw_r, params.fir_taps)
    qualifying = r > params.tau
    weights = np.where(qualifying, logistic_weight(np.where(qualifying, r, params.tau), params.tau,
                                                   params.steepness), 0.0)
    win_mean_b = sliding_window_view(b, params.window).mean(axis=1)
    win_mean_a = sliding_window_view(a, params.window).mean(axis=1)
    omega_c = float(np.sum(weights * win_mean_b))
    omega_p = float(np.sum(weights * win_mean_a))
    omega = float(np.sum(weights))
    diag = dict(omega_c=omega_c, omega_p=omega_p, omega=omega, n_windows=int(qualifying.sum()),
                length=length, raw_r=raw_r, smoothed_r=r)

    def fallback(method, **extra):
        scale, offset = standard_map(a, calibration, level)
        return standard_rescale(a, calibration, level), RescaleOutcome(method, scale, offset, **diag, **extra)

    if omega == 0.0:
        return fallback(RescaleMethod.STANDARD_FALLBACK)

    mu_c = omega_c / omega
    mu_p = omega_p / omega
    counts = _coverage(qualifying, params.window, length)
    var_c = _pooled_var(b, counts)
    var_p = _pooled_var(a, counts)
    diag.update(mu_c=mu_c, mu_p=mu_p, var_c=var_c, var_p=var_p)
    if not var_p > 0.0 or not np.isfinite(var_c / var_p):
        # no usable amplitude reference in A
        return fallback(RescaleMethod.STANDARD_FALLBACK, degenerate_scale=True)
    scale = float(np.sqrt(var_c) / np.sqrt(var_p))
    rescaled = (a - mu_p) * scale + mu_c
    out, triggered = anomaly_filtration(rescaled, b, params.anomaly_factor,
                                        lambda: standard_rescale(a, calibration, level))
    if triggered:
        scale, offset = standard_map(a, calibration, level)
        return out, RescaleOutcome(RescaleMethod.ANOMALY_FALLBACK, scale, offset, **diag)
    return rescaled, RescaleOutcome(RescaleMethod.TARGETED, scale, mu_c - mu_p * scale, **diag)
