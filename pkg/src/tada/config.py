"""Flat ``section.key = value`` configuration files.

Blank lines and lines starting with ``#`` are ignored. Recognised keys::

    run.seed
    models.bundle, models.calibration          paths, relative to the config file
    data.source (synthetic | files), data.corpus, data.per_level, data.spike_fraction
    targeting.<field>, targeting.<level>.<field>
        field in tau, window, fir_taps, anomaly_factor; level in low, mid, high
    train.<TrainConfig field>, loss.<LossWeights field>
    meta.epochs, meta.test_size, meta.lr, meta.batch

Unknown keys and unparsable values raise ConfigError.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from tada.errors import ConfigError, TadaIOError
from tada.pipeline import DEFAULT_TAU, DataSource, PipelineConfig
from tada.sigcore.signal import SnrLevel
from tada.targeting import TargetingParams
from tada.training import LossWeights, TrainConfig

TARGETING_FIELDS = {"tau": float, "window": int, "fir_taps": int, "anomaly_factor": float}
TRAIN_FIELDS = {"cycles": int, "epochs_per_cycle_gen": int, "epochs_per_cycle_disc": int, "batch": int,
                "w_adv": float, "train_size": int, "pretrain_epochs": int, "lr": float, "disc_lr": float,
                "objective": str}
LOSS_FIELDS = {"w_cc": float, "w_spec": float, "w_ent": float, "eps_var": float}
META_FIELDS = {"epochs": int, "test_size": int, "lr": float, "batch": int}


@dataclass(frozen=True)
class MetaConfig:
    epochs: int = 100
    test_size: int = 100
    lr: float = 3e-3
    batch: int = 32


@dataclass
class Settings:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    meta: MetaConfig = field(default_factory=MetaConfig)

    def with_seed(self, seed: int) -> "Settings":
        self.pipeline.seed = int(seed)
        self.train = dataclasses.replace(self.train, seed=int(seed))
        return self


def parse_pairs(text: str, origin: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or "." not in key:
            raise ConfigError(f"{origin}:{lineno}: expected 'section.key = value'")
        if key in out:
            raise ConfigError(f"{origin}:{lineno}: duplicate key {key}")
        out[key] = value
    return out


def _convert(key, value, kind):
    try:
        if kind is int:
            return int(value, 0)
        return kind(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {value!r} as {kind.__name__}") from exc


def parse_config(text: str, base_dir=".", origin: str = "<config>") -> Settings:
    base_dir = Path(base_dir)
    pairs = parse_pairs(text, origin)
    pipe, train, loss, meta = {}, {}, {}, {}
    targeting = {None: {}, **{lv: {} for lv in SnrLevel}}
    seed = 0
    for key, value in pairs.items():
        parts = key.split(".")
        section = parts[0]
        if key == "run.seed":
            seed = _convert(key, value, int)
        elif key in ("models.bundle", "models.calibration"):
            pipe["models" if parts[1] == "bundle" else "calibration"] = base_dir / value
        elif key == "data.source":
            try:
                pipe["source"] = DataSource(value)
            except ValueError as exc:
                raise ConfigError(f"{key}: expected synthetic or files, got {value!r}") from exc
        elif key == "data.corpus":
            pipe["corpus"] = base_dir / value
        elif key == "data.per_level":
            pipe["per_level"] = _convert(key, value, int)
        elif key == "data.spike_fraction":
            pipe["spike_fraction"] = _convert(key, value, float)
        elif section == "targeting" and len(parts) == 2 and parts[1] in TARGETING_FIELDS:
            targeting[None][parts[1]] = _convert(key, value, TARGETING_FIELDS[parts[1]])
        elif (section == "targeting" and len(parts) == 3 and parts[1].upper() in SnrLevel.__members__
              and parts[2] in TARGETING_FIELDS):
            targeting[SnrLevel[parts[1].upper()]][parts[2]] = _convert(key, value, TARGETING_FIELDS[parts[2]])
        elif section == "train" and len(parts) == 2 and parts[1] in TRAIN_FIELDS:
            train[parts[1]] = _convert(key, value, TRAIN_FIELDS[parts[1]])
        elif section == "loss" and len(parts) == 2 and parts[1] in LOSS_FIELDS:
            loss[parts[1]] = _convert(key, value, LOSS_FIELDS[parts[1]])
        elif section == "meta" and len(parts) == 2 and parts[1] in META_FIELDS:
            meta[parts[1]] = _convert(key, value, META_FIELDS[parts[1]])
        else:
            raise ConfigError(f"{origin}: unknown key {key}")
    try:
        params = {}
        for level in SnrLevel:
            fields = {"tau": DEFAULT_TAU[level], **targeting[None], **targeting[level]}
            params[level] = TargetingParams(**fields)
        settings = Settings(
            pipeline=PipelineConfig(params=params, seed=seed, **pipe),
            train=TrainConfig(seed=seed, loss=LossWeights(**loss), **train),
            meta=MetaConfig(**meta),
        )
    except ValueError as exc:
        raise ConfigError(f"{origin}: {exc}") from exc
    return settings


def load_config(path) -> Settings:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise TadaIOError(f"{path}: {exc}") from exc
    return parse_config(text, path.parent, str(path))


def render_config(settings: Settings) -> str:
    """Config text that parses back to ``settings`` (paths written as given)."""
    p, t = settings.pipeline, settings.train
    lines = [f"run.seed = {p.seed}"]
    if p.models is not None:
        lines.append(f"models.bundle = {p.models}")
    if p.calibration is not None:
        lines.append(f"models.calibration = {p.calibration}")
    lines += [f"data.source = {p.source.value}", f"data.per_level = {p.per_level}",
              f"data.spike_fraction = {p.spike_fraction!r}"]
    if p.corpus is not None:
        lines.append(f"data.corpus = {p.corpus}")
    for level in SnrLevel:
        tp = p.params[level]
        lines += [f"targeting.{level.name.lower()}.{name} = {getattr(tp, name)!r}" for name in TARGETING_FIELDS]
    lines += [f"train.{name} = {getattr(t, name)!r}".replace("'", "") for name in TRAIN_FIELDS]
    lines += [f"loss.{name} = {getattr(t.loss, name)!r}" for name in LOSS_FIELDS]
    lines += [f"meta.{name} = {getattr(settings.meta, name)!r}" for name in META_FIELDS]
    return "\n".join(lines) + "\n"
