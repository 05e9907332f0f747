"""Text weight files.

Layout::

    gradnet-weights 1
    <name> <d0>,<d1>,...
    <value> <value> ...

one header line and one value line per entry, in insertion order. Values
are written with ``repr`` so they round-trip bit for bit. Scalars use an
empty shape field ``-``.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from tada.errors import CorruptFile, TadaIOError

HEADER = "gradnet-weights 1"


def dumps(entries: dict[str, np.ndarray]) -> str:
    lines = [HEADER]
    for name, arr in entries.items():
        if any(ch.isspace() for ch in name):
            raise ValueError(f"entry name {name!r} contains whitespace")
        arr = np.asarray(arr, dtype=np.float64)
        shape = ",".join(str(d) for d in arr.shape) or "-"
        lines.append(f"{name} {shape}")
        lines.append(" ".join(repr(float(v)) for v in arr.ravel()))
    return "\n".join(lines) + "\n"


def loads(text: str) -> dict[str, np.ndarray]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise CorruptFile("missing gradnet-weights header")
    body = lines[1:]
    if len(body) % 2:
        raise CorruptFile("entry without a value line")
    out = {}
    for head, values in zip(body[::2], body[1::2]):
        try:
            name, shape_txt = head.split()
            shape = () if shape_txt == "-" else tuple(int(d) for d in shape_txt.split(","))
            flat = np.array([float(v) for v in values.split()], dtype=np.float64)
            out[name] = flat.reshape(shape)
        except ValueError as exc:
            raise CorruptFile(f"bad entry {head!r}: {exc}") from exc
    return out


def save(path, entries: dict[str, np.ndarray]) -> None:
    try:
        Path(path).write_text(dumps(entries))
    except OSError as exc:
        raise TadaIOError(f"{path}: {exc}") from exc


def load(path) -> dict[str, np.ndarray]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise TadaIOError(f"{path}: {exc}") from exc
    return loads(text)
