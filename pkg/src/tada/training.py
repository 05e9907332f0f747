"""Autoencoder loss, pretraining, adversarial cycles, meta-targeter training
and calibration statistics."""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field

import numpy as np

from tada.errors import InsufficientData
from tada.gradnet import functional as F
from tada.gradnet.optim import Adam
from tada.gradnet.tensor import Tensor, as_tensor, log, no_grad, reshape, sqrt
from tada.models import BASE_NAMES, AutoencoderModel, DiscriminatorModel, LcEnsembleModel
from tada.sigcore.metrics import FLAT_RTOL, metrics_triple
from tada.sigcore.signal import SnrLevel, normalize_rows
from tada.targeting import CalibrationStats, TargetingParams, scale_targeting

log_ = logging.getLogger(__name__)

__all__ = [
    "LossWeights", "TrainConfig", "CalibrationStats", "CycleEntry", "CycleReport", "MetaResult",
    "ae_loss", "mse_loss", "pretrain_autoencoder", "adversarial_train", "compute_calibration",
    "evaluate_autoencoder", "train_meta_targeter", "ablate_meta_targeter", "pairs_arrays",
]

MIN_PER_LEVEL = 30


@dataclass(frozen=True)
class LossWeights:
    w_cc: float = 1.0
    w_spec: float = 0.5
    w_ent: float = 0.01
    eps_var: float = 1e-6

    def __post_init__(self):
        if min(self.w_cc, self.w_spec, self.w_ent, self.eps_var) < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass(frozen=True)
class TrainConfig:
    cycles: int = 5
    epochs_per_cycle_gen: int = 4
    epochs_per_cycle_disc: int = 2
    batch: int = 16
    w_adv: float = 0.05
    seed: int = 0
    train_size: int = 300
    pretrain_epochs: int = 20
    lr: float = 1e-3
    disc_lr: float = 1e-3
    loss: LossWeights = field(default_factory=LossWeights)
    objective: str = "custom"  # or "mse", the plain baseline logged for comparison

    def __post_init__(self):
        if self.cycles < 1 or self.batch < 1:
            raise ValueError("cycles and batch must be at least 1")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"unknown objective {self.objective!r}")


def pairs_arrays(pairs):
    """(mixtures, cleans, levels) arrays from a list of ContaminatedPair."""
    mix = np.stack([p.mixture for p in pairs])
    clean = np.stack([p.clean for p in pairs])
    levels = np.array([int(p.level) for p in pairs])
    return mix, clean, levels


# ---------------------------------------------------------------------------
# loss


def ae_loss(output, truth, w: LossWeights = LossWeights()) -> Tensor:
    """Correlation + spectral-shape + variance-entropy loss, averaged over the batch.

    Per segment::

        w_cc * (1 - CC) + w_spec * mean((P_out - P_truth)^2) - w_ent * log(Var(out) + eps_var)

    where P are power spectra of the mean-removed signals normalized to unit
    sum. CC is taken as 0 for a flat output.
    """
    out = as_tensor(output)
    if out.ndim == 1:
        out = reshape(out, (1, out.shape[0]))
    elif out.ndim == 3:
        out = reshape(out, (out.shape[0], out.shape[2]))
    t = np.asarray(truth, dtype=np.float64).reshape(out.shape)

    oc = out - out.mean(axis=1, keepdims=True)
    tc = t - t.mean(axis=1, keepdims=True)
    var_o = (oc * oc).mean(axis=1)
    var_t = (tc * tc).mean(axis=1)
    cov = (oc * tc).mean(axis=1)
    live = ((var_o.data > FLAT_RTOL * (out.data ** 2).mean(axis=1))
            & (var_t > FLAT_RTOL * (t ** 2).mean(axis=1))).astype(np.float64)
    cc = cov / sqrt(var_o * var_t + 1e-300) * live

    p_out = F.power_spectrum(oc)
    p_truth = F.power_spectrum(tc)
    p_out = p_out / (p_out.sum(axis=1, keepdims=True) + 1e-300)
    p_truth = p_truth / (p_truth.sum(axis=1, keepdims=True) + 1e-300)
    diff = p_out - p_truth
    spec_div = (diff * diff).mean(axis=1)

    ent = -log(var_o + w.eps_var)
    per_seg = w.w_cc * (1.0 - cc) + w.w_spec * spec_div + w.w_ent * ent
    return per_seg.mean()


def mse_loss(output, truth, w: LossWeights | None = None) -> Tensor:
    """Plain mean squared error; the baseline the custom loss is compared with."""
    out = as_tensor(output)
    t = np.asarray(truth, dtype=np.float64).reshape(out.shape)
    d = out - t
    return (d * d).mean()


OBJECTIVES = {"custom": ae_loss, "mse": mse_loss}


# ---------------------------------------------------------------------------
# autoencoder


def _prep(pairs):
    mix, clean, levels = pairs_arrays(pairs)
    return normalize_rows(mix), normalize_rows(clean), mix, clean, levels


def _ae_epoch(ae, opt, x, y, batch, rng, weights, objective=ae_loss) -> float:
    ae.train()
    order = rng.permutation(len(x))
    total = 0.0
    for start in range(0, len(x), batch):
        idx = order[start:start + batch]
        opt.zero_grad()
        loss = objective(ae(x[idx]), y[idx], weights)
        loss.backward()
        opt.step()
        total += loss.item() * len(idx)
    return total / len(x)


def _gen_rng(seed):
    return np.random.default_rng([int(seed), 0x6E7])


def pretrain_autoencoder(pairs, config: TrainConfig = TrainConfig(), ae: AutoencoderModel | None = None,
                         epochs: int | None = None):
    """Train the AE on normalized (mixture -> clean) pairs. Returns (ae, per-epoch mean losses)."""
    ae = ae if ae is not None else AutoencoderModel(config.seed)
    epochs = config.pretrain_epochs if epochs is None else epochs
    x, y, *_ = _prep(pairs)
    opt = Adam(ae.parameters(), lr=config.lr)
    rng = _gen_rng(config.seed)
    trajectory = []
    for epoch in range(epochs):
        trajectory.append(_ae_epoch(ae, opt, x, y, config.batch, rng, config.loss,
                                     OBJECTIVES[config.objective]))
        log_.info("pretrain epoch %d loss %.5f", epoch, trajectory[-1])
    return ae, trajectory


def raw_outputs(ae, mixtures) -> np.ndarray:
    """Raw AE outputs for raw mixtures (normalization applied here)."""
    if isinstance(ae, AutoencoderModel):
        return ae.denoise(normalize_rows(mixtures))
    return np.asarray(ae(np.asarray(mixtures, dtype=np.float64)), dtype=np.float64)


def compute_calibration(pairs, ae) -> CalibrationStats:
    """Dataset-average offset and amplitude ratio per SNR level.

    ``ae`` is an AutoencoderModel or any callable taking raw mixtures [N, L]
    and returning raw outputs [N, L].
    """
    mix, clean, levels = pairs_arrays(pairs)
    for level in SnrLevel:
        if np.sum(levels == level) < MIN_PER_LEVEL:
            raise InsufficientData(f"need {MIN_PER_LEVEL} pairs at {level.label} SNR, "
                                   f"got {int(np.sum(levels == level))}")
    raw = raw_outputs(ae, mix)
    stats = CalibrationStats(p99_amplitude=float(np.percentile(np.abs(clean), 99)))
    for level in SnrLevel:
        sel = levels == level
        stats.offset[level] = float(np.mean(clean[sel].mean(axis=1) - raw[sel].mean(axis=1)))
        stats.ratio[level] = float(np.mean(clean[sel].std(axis=1) / raw[sel].std(axis=1)))
    return stats


def _targeted_maps(raw, mix, levels, calibration, params):
    """Per-segment (scale, offset) of the scale-targeting map."""
    scales = np.empty(len(raw))
    offsets = np.empty(len(raw))
    for i in range(len(raw)):
        _, outcome = scale_targeting(raw[i], mix[i], params[SnrLevel(levels[i])], calibration, levels[i])
        scales[i], offsets[i] = outcome.scale, outcome.offset
    return scales, offsets


def _level_params(params):
    if params is None:
        params = TargetingParams()
    if isinstance(params, TargetingParams):
        return {level: params for level in SnrLevel}
    return params


def evaluate_autoencoder(ae, pairs, calibration, params=None) -> tuple[float, float, float]:
    """Mean CC/TRRMSE/SRRMSE of AE + scale targeting at the true SNR level."""
    params = _level_params(params)
    mix, clean, levels = pairs_arrays(pairs)
    raw = raw_outputs(ae, mix)
    scores = []
    for i in range(len(raw)):
        out, _ = scale_targeting(raw[i], mix[i], params[SnrLevel(levels[i])], calibration, levels[i])
        scores.append(metrics_triple(out, clean[i]))
    return tuple(float(v) for v in np.mean(scores, axis=0))


@dataclass
class CycleEntry:
    cycle: int
    gen_loss: float
    disc_loss: float
    disc_accuracy: float
    cc: float
    trrmse: float
    srrmse: float


@dataclass
class CycleReport:
    entries: list = field(default_factory=list)
    log_rows: list = field(default_factory=list)
    baseline: tuple | None = None

    LOG_HEADER = ("cycle", "epoch", "gen_loss", "disc_loss", "heldout_cc")

    def log_csv(self) -> str:
        lines = [",".join(self.LOG_HEADER)]
        lines += [",".join(str(v) if isinstance(v, int) else repr(float(v)) for v in row)
                  for row in self.log_rows]
        return "\n".join(lines) + "\n"


def _disc_accuracy(disc, real, fake) -> float:
    disc.eval()
    with no_grad():
        p_real = disc(real).data
        p_fake = disc(fake).data
    return float((np.sum(p_real > 0.5) + np.sum(p_fake <= 0.5)) / (len(real) + len(fake)))


def adversarial_train(ae: AutoencoderModel, disc: DiscriminatorModel, pairs, calibration: CalibrationStats,
                      config: TrainConfig = TrainConfig(), heldout=None, params=None):
    """Run ``config.cycles`` cycles of discriminator epochs followed by generator epochs.

    Generated samples are mapped through scale targeting (the map is computed
    on detached outputs and applied as a constant affine transform) and both
    real and generated samples are divided by the calibration p99 amplitude
    before reaching the discriminator. With ``w_adv == 0`` the generator
    updates are exactly those of ``pretrain_autoencoder`` run for
    ``cycles * epochs_per_cycle_gen`` epochs on a copy.
    Returns (ae, disc, CycleReport); both models are updated in place.
    """
    params = _level_params(params)
    x, y, mix, clean, levels = _prep(pairs)
    amp = calibration.p99_amplitude
    gen_opt = Adam(ae.parameters(), lr=config.lr)
    disc_opt = Adam(disc.parameters(), lr=config.disc_lr)
    gen_rng = _gen_rng(config.seed)
    disc_rng = np.random.default_rng([int(config.seed), 0xD15])
    report = CycleReport()
    if heldout is not None:
        report.baseline = evaluate_autoencoder(ae, heldout, calibration, params)
        h_mix, h_clean, h_levels = pairs_arrays(heldout)

    def fakes(mix_b, lev_b, raw_b):
        scales, offsets = _targeted_maps(raw_b, mix_b, lev_b, calibration, params)
        return scales, offsets

    for cycle in range(config.cycles):
        disc_losses = []
        raw_all = ae.denoise(x)
        scales, offsets = fakes(mix, levels, raw_all)
        fake_all = (raw_all * scales[:, None] + offsets[:, None]) / amp
        real_all = clean / amp
        for epoch in range(config.epochs_per_cycle_disc):
            disc.train()
            order = disc_rng.permutation(len(x))
            total = 0.0
            for start in range(0, len(x), config.batch):
                idx = order[start:start + config.batch]
                disc_opt.zero_grad()
                batch = np.concatenate([real_all[idx], fake_all[idx]])
                labels = np.concatenate([np.ones(len(idx)), np.zeros(len(idx))])
                loss = F.bce(disc(batch), labels)
                loss.backward()
                disc_opt.step()
                total += loss.item() * len(idx)
            disc_losses.append(total / len(x))

        gen_losses = []
        for epoch in range(config.epochs_per_cycle_gen):
            ae.train()
            order = gen_rng.permutation(len(x))
            total = 0.0
            for start in range(0, len(x), config.batch):
                idx = order[start:start + config.batch]
                gen_opt.zero_grad()
                out = ae(x[idx])
                loss = OBJECTIVES[config.objective](out, y[idx], config.loss)
                if config.w_adv != 0.0:
                    raw = out.data[:, 0, :]
                    scales, offsets = fakes(mix[idx], levels[idx], raw)
                    flat = reshape(out, (len(idx), out.shape[2]))
                    fake = (flat * scales[:, None] + offsets[:, None]) * (1.0 / amp)
                    disc.eval()
                    loss = loss + config.w_adv * F.bce(disc(fake), 1.0)
                loss.backward()
                gen_opt.step()
                disc.zero_grad()
                total += loss.item() * len(idx)
            gen_losses.append(total / len(x))
            report.log_rows.append((cycle, epoch, gen_losses[-1], float("nan"), float("nan")))
        ae.zero_grad()

        if heldout is not None:
            cc, tr, sr = evaluate_autoencoder(ae, heldout, calibration, params)
            h_raw = raw_outputs(ae, h_mix)
            hs, ho = fakes(h_mix, h_levels, h_raw)
            acc = _disc_accuracy(disc, h_clean / amp, (h_raw * hs[:, None] + ho[:, None]) / amp)
        else:
            cc = tr = sr = float("nan")
            acc = _disc_accuracy(disc, real_all, fake_all)
        entry = CycleEntry(cycle, float(np.mean(gen_losses)), float(np.mean(disc_losses)), acc, cc, tr, sr)
        report.entries.append(entry)
        report.log_rows.append((cycle, config.epochs_per_cycle_gen, entry.gen_loss, entry.disc_loss, cc))
        log_.info("cycle %d gen %.5f disc %.5f acc %.3f cc %.4f", cycle, entry.gen_loss,
                  entry.disc_loss, acc, cc)
    return ae, disc, report


# ---------------------------------------------------------------------------
# meta-targeter


@dataclass
class MetaResult:
    model: LcEnsembleModel
    accuracy: float
    mean_loss: float
    train_idx: np.ndarray
    test_idx: np.ndarray
    meta_idx: np.ndarray
    base_accuracy: dict = field(default_factory=dict)


def _cosine_lr(lr, epoch, epochs):
    return 0.5 * lr * (1.0 + np.cos(np.pi * epoch / max(epochs, 1)))


def _fit_classifier(module, forward, params, x, labels, epochs, batch, lr, rng):
    """Mini-batch cross-entropy with Adam; the step size follows a cosine decay."""
    opt = Adam(params, lr=lr)
    for epoch in range(epochs):
        opt.state.lr = _cosine_lr(lr, epoch, epochs)
        module.train()
        order = rng.permutation(len(x))
        for start in range(0, len(x), batch):
            idx = order[start:start + batch]
            opt.zero_grad()
            loss = F.cross_entropy(forward(x[idx]), labels[idx])
            loss.backward()
            opt.step()
    module.zero_grad()


def _split(labels, test_size, seed):
    """(train, test) index arrays; train stays in seeded random order."""
    order = np.random.default_rng([int(seed), 0x5B1]).permutation(len(labels))
    return order[test_size:], np.sort(order[:test_size])


def _fit_meta(model, xn, labels, meta_idx, test_idx, epochs, batch, lr, seed):
    with no_grad():
        scores = model.base_scores(xn).data
    rng = np.random.default_rng([int(seed), 0x3E7A])
    _fit_classifier(model, model.meta, [p for n, p in model.named_parameters() if n.startswith("meta_")],
                    scores[meta_idx], labels[meta_idx], epochs, batch, lr, rng)
    with no_grad():
        logits = model.meta(scores[test_idx])
        loss = F.cross_entropy(logits, labels[test_idx]).item()
    acc = float(np.mean(logits.data.argmax(axis=1) == labels[test_idx]))
    return acc, loss


def train_meta_targeter(mixtures, labels, epochs: int = 100, seed: int = 0, test_size: int = 100,
                        bases=BASE_NAMES, batch: int = 32, lr: float = 3e-3,
                        meta_fraction: float = 0.2) -> MetaResult:
    """Fit each base classifier, then the meta-classifier on their scores.

    ``mixtures`` are raw [N, L] segments; ``labels`` are SnrLevel indices.
    ``test_size`` samples of a seeded permutation are held out for scoring.
    Of the rest, ``meta_fraction`` is kept away from the base models and
    used to fit the meta-classifier, so it learns from scores the bases
    produce on unseen data.
    """
    labels = np.asarray(labels, dtype=np.int64)
    present = set(np.unique(labels).tolist())
    if present != {int(level) for level in SnrLevel}:
        raise InsufficientData(f"labels cover only classes {sorted(present)}")
    if len(labels) <= test_size:
        raise InsufficientData("not enough samples for the held-out partition")
    xn = normalize_rows(mixtures)
    train_idx, test_idx = _split(labels, test_size, seed)
    if set(np.unique(labels[train_idx]).tolist()) != present:
        raise InsufficientData("a class is missing from the training partition")
    n_meta = int(round(meta_fraction * len(train_idx)))
    meta_idx, base_idx = np.sort(train_idx[:n_meta]), np.sort(train_idx[n_meta:])
    train_idx = np.sort(train_idx)
    model = LcEnsembleModel(seed, bases)
    base_acc = {}
    for k, name in enumerate(BASE_NAMES):
        if name not in model.active:
            continue
        base = model.base(name)
        rng = np.random.default_rng([int(seed), 0xBA5E, k])
        _fit_classifier(base, base, base.parameters(), xn[base_idx], labels[base_idx], epochs, batch, lr, rng)
        base.eval()
        with no_grad():
            base_acc[name] = float(np.mean(base(xn[test_idx]).data.argmax(axis=1) == labels[test_idx]))
    model.eval()
    acc, loss = _fit_meta(model, xn, labels, meta_idx, test_idx, epochs, batch, lr, seed)
    return MetaResult(model, acc, loss, train_idx, test_idx, meta_idx, base_acc)


def ablate_meta_targeter(result: MetaResult, mixtures, labels, drop: str, epochs: int = 100,
                         batch: int = 32, lr: float = 3e-3) -> MetaResult:
    """Drop one trained base, refit only the meta-classifier, score on the same split."""
    labels = np.asarray(labels, dtype=np.int64)
    full = result.model
    keep = tuple(b for b in full.active if b != drop)
    model = LcEnsembleModel(full.seed, keep)
    for name in keep:
        model.base(name).load_state_dict(full.base(name).state_dict())
    model.eval()
    xn = normalize_rows(mixtures)
    acc, loss = _fit_meta(model, xn, labels, result.meta_idx, result.test_idx, epochs, batch, lr, full.seed)
    return MetaResult(model, acc, loss, result.train_idx, result.test_idx, result.meta_idx,
                      {k: v for k, v in result.base_accuracy.items() if k in keep})


def clone(model):
    return copy.deepcopy(model)
