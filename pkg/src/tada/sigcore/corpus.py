"""Contaminated corpora: mixing clean and artifact collections, and the
on-disk corpus directory.

A corpus directory holds ``mixture``, ``clean`` and ``artifact`` segment
files (CSV or TADASEG1, same row order) plus ``manifest.csv`` with columns
``index,level,snr_db,lambda,kind``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tada.errors import CorruptFile, EmptyCorpus, LengthMismatch, TadaIOError
from tada.sigcore.io import read_segments, write_segments
from tada.sigcore.signal import ContaminatedPair, SnrLevel, mix_at_snr
from tada.sigcore.synth import _check_count

MANIFEST = "manifest.csv"
MANIFEST_HEADER = ("index", "level", "snr_db", "lambda", "kind")
_EXT = {"csv": ".csv", "bin": ".bin"}


@dataclass
class Corpus:
    mixture: np.ndarray
    clean: np.ndarray
    artifact: np.ndarray
    lam: np.ndarray
    snr_db: np.ndarray
    kind: list = field(default_factory=list)

    def __post_init__(self):
        n = len(self.mixture)
        if not (len(self.clean) == len(self.artifact) == len(self.lam) == len(self.snr_db) == n):
            raise LengthMismatch("corpus arrays have different segment counts")
        if not self.kind:
            self.kind = [""] * n

    def __len__(self):
        return len(self.mixture)

    @property
    def levels(self) -> np.ndarray:
        return np.array([int(SnrLevel.from_db(v)) for v in self.snr_db], dtype=np.int64)

    @classmethod
    def from_pairs(cls, pairs) -> "Corpus":
        if not pairs:
            raise EmptyCorpus("no pairs")
        return cls(mixture=np.stack([p.mixture for p in pairs]),
                   clean=np.stack([p.clean for p in pairs]),
                   artifact=np.stack([p.artifact for p in pairs]),
                   lam=np.array([p.lam for p in pairs]),
                   snr_db=np.array([p.snr_db for p in pairs]),
                   kind=[str(p.meta.get("kind", "")) for p in pairs])

    def pairs(self) -> list[ContaminatedPair]:
        out = []
        for i in range(len(self)):
            pair = ContaminatedPair(self.clean[i], self.artifact[i], float(self.lam[i]),
                                    self.mixture[i], float(self.snr_db[i]))
            if self.kind[i]:
                pair.meta["kind"] = self.kind[i]
            out.append(pair)
        return out

    def save(self, directory, fmt: str = "csv") -> None:
        directory = Path(directory)
        try:
            directory.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise TadaIOError(f"{directory}: {exc}") from exc
        ext = _EXT[fmt]
        write_segments(directory / f"mixture{ext}", self.mixture, fmt)
        write_segments(directory / f"clean{ext}", self.clean, fmt)
        write_segments(directory / f"artifact{ext}", self.artifact, fmt)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for i in range(len(self)):
            level = SnrLevel.from_db(self.snr_db[i])
            writer.writerow((i, level.name.lower(), repr(float(self.snr_db[i])),
                             repr(float(self.lam[i])), self.kind[i]))
        try:
            (directory / MANIFEST).write_text(buf.getvalue())
        except OSError as exc:
            raise TadaIOError(f"{directory / MANIFEST}: {exc}") from exc

    @classmethod
    def load(cls, directory) -> "Corpus":
        directory = Path(directory)
        manifest = directory / MANIFEST
        if not manifest.is_file():
            raise TadaIOError(f"{directory}: no {MANIFEST}")
        ext = next((e for e in _EXT.values() if (directory / f"mixture{e}").is_file()), None)
        if ext is None:
            raise TadaIOError(f"{directory}: no mixture file")
        arrays = {name: read_segments(directory / f"{name}{ext}") for name in ("mixture", "clean", "artifact")}
        try:
            rows = list(csv.DictReader(io.StringIO(manifest.read_text())))
            lam = np.array([float(r["lambda"]) for r in rows])
            snr = np.array([float(r["snr_db"]) for r in rows])
            kind = [r["kind"] for r in rows]
        except (KeyError, ValueError, TypeError) as exc:
            raise CorruptFile(f"{manifest}: {exc}") from exc
        if len(rows) == 0:
            raise EmptyCorpus(f"{directory}: corpus has no segments")
        if any(len(a) != len(rows) for a in arrays.values()):
            raise CorruptFile(f"{directory}: segment files and manifest disagree on the count")
        return cls(lam=lam, snr_db=snr, kind=kind, **arrays)


def mix_corpus(clean, artifact, n_per_level: int, levels=tuple(SnrLevel), seed: int = 0) -> Corpus:
    """Draw ``n_per_level`` (clean, artifact) pairs per level and mix them.

    Clean segments are drawn without replacement within a level when there
    are enough of them; artifacts are drawn with replacement. Level-major order.
    """
    _check_count(n_per_level)
    clean = np.atleast_2d(np.asarray(clean, dtype=np.float64))
    artifact = np.atleast_2d(np.asarray(artifact, dtype=np.float64))
    if len(clean) == 0 or len(artifact) == 0 or clean.size == 0 or artifact.size == 0:
        raise EmptyCorpus("need at least one clean and one artifact segment")
    if clean.shape[1] != artifact.shape[1]:
        raise LengthMismatch(f"clean length {clean.shape[1]} vs artifact length {artifact.shape[1]}")
    rng = np.random.default_rng([int(seed), 0x313C])
    pairs = []
    for level in (SnrLevel(lv) for lv in levels):
        if n_per_level <= len(clean):
            ci = rng.permutation(len(clean))[:n_per_level]
        else:
            ci = rng.integers(0, len(clean), n_per_level)
        ai = rng.integers(0, len(artifact), n_per_level)
        pairs += [mix_at_snr(clean[c], artifact[a], level.db) for c, a in zip(ci, ai)]
    return Corpus.from_pairs(pairs)
