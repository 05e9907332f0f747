"""Segment corpus files: plain CSV (one segment per row) and TADASEG1 binary.

``.npy`` arrays (the layout the EEGdenoiseNet epoch files ship in) are
accepted for reading.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from tada.errors import CorruptFile, NonFiniteSamples, TadaIOError

MAGIC = b"TADASEG1"
_HEADER = struct.Struct("<8sII")


def _check_finite(arr, path):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteSamples(f"{path}: non-finite sample values")


def write_csv(path, segments) -> None:
    arr = np.atleast_2d(np.asarray(segments, dtype=np.float64))
    _check_finite(arr, path)
    lines = [",".join(repr(float(v)) for v in row) for row in arr]
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise TadaIOError(f"{path}: {exc}") from exc


def read_csv(path) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise TadaIOError(f"{path}: {exc}") from exc
    rows = [ln for ln in text.splitlines() if ln.strip()]
    if not rows:
        return np.zeros((0, 0))
    try:
        data = [[float(v) for v in ln.split(",")] for ln in rows]
    except ValueError as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    if len({len(r) for r in data}) != 1:
        raise CorruptFile(f"{path}: rows have different lengths")
    arr = np.array(data, dtype=np.float64)
    _check_finite(arr, path)
    return arr


def write_bin(path, segments) -> None:
    arr = np.atleast_2d(np.asarray(segments, dtype=np.float64))
    _check_finite(arr, path)
    count, length = arr.shape
    payload = _HEADER.pack(MAGIC, count, length) + arr.astype("<f4").tobytes()
    try:
        Path(path).write_bytes(payload)
    except OSError as exc:
        raise TadaIOError(f"{path}: {exc}") from exc


def read_bin(path) -> np.ndarray:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise TadaIOError(f"{path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise CorruptFile(f"{path}: truncated header")
    magic, count, length = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CorruptFile(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * count * length
    if len(raw) != expected:
        raise CorruptFile(f"{path}: expected {expected} bytes, found {len(raw)}")
    arr = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).astype(np.float64)
    arr = arr.reshape(count, length)
    _check_finite(arr, path)
    return arr


def read_npy(path) -> np.ndarray:
    try:
        arr = np.load(path, allow_pickle=False)
    except OSError as exc:
        raise TadaIOError(f"{path}: {exc}") from exc
    except ValueError as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    arr = np.atleast_2d(np.asarray(arr, dtype=np.float64))
    if arr.ndim != 2:
        raise CorruptFile(f"{path}: expected a 2-D array, got shape {arr.shape}")
    _check_finite(arr, path)
    return arr


def _format_of(path, fmt):
    if fmt:
        return fmt
    suffix = Path(path).suffix.lower()
    return {".bin": "bin", ".npy": "npy"}.get(suffix, "csv")


def read_segments(path, fmt: str | None = None) -> np.ndarray:
    """[count, length] array from a CSV, TADASEG1 or .npy file."""
    readers = {"bin": read_bin, "npy": read_npy, "csv": read_csv}
    fmt = _format_of(path, fmt)
    if fmt not in readers:
        raise ValueError(f"unknown segment format {fmt!r}")
    return readers[fmt](path)


def write_segments(path, segments, fmt: str | None = None) -> None:
    fmt = _format_of(path, fmt)
    if fmt not in ("bin", "csv"):
        raise ValueError(f"cannot write segment format {fmt!r}")
    (write_bin if fmt == "bin" else write_csv)(path, segments)
