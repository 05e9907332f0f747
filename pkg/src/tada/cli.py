"""``tada`` command line.

Exit status: 0 on success, 1 for invalid input or configuration, 2 for
file-system and file-format problems. Failures print one ``tada: error:``
line on stderr.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from tada.config import Settings, load_config
from tada.errors import TadaIOError, TadaValueError
from tada.models import DiscriminatorModel, build_autoencoder, build_lc_ensemble, count_params
from tada.pipeline import (
    BenchReport,
    bench_run,
    denoise_segment,
    load_component,
    load_models,
    update_bundle,
)
from tada.report import report_emit, summary_csv
from tada.sigcore.corpus import Corpus, mix_corpus
from tada.sigcore.io import read_segments, write_segments
from tada.sigcore.signal import SnrLevel
from tada.sigcore.synth import ArtifactKind, synth_artifact, synth_clean
from tada.targeting import RescaleOutcome
from tada.training import (
    adversarial_train,
    compute_calibration,
    pretrain_autoencoder,
    train_meta_targeter,
)

_EXT = {"csv": ".csv", "bin": ".bin"}


class UsageError(TadaValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _levels(text: str) -> list[SnrLevel]:
    try:
        return [SnrLevel[name.strip().upper()] for name in text.split(",") if name.strip()]
    except KeyError as exc:
        raise UsageError(f"unknown SNR level {exc.args[0].lower()!r}; use low, mid, high") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tada", description="Artifact removal for single-channel segments.")
    parser.add_argument("--config", type=Path, help="flat 'section.key = value' config file")
    parser.add_argument("--seed", type=int, help="overrides run.seed")
    parser.add_argument("--format", choices=("csv", "bin"), default="csv", help="segment file format to write")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a synthetic clean/artifact corpus")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--count", type=int, default=300, help="segments per file")
    p.add_argument("--kind", choices=("mixed", "continuous", "spike"), default="mixed")

    p = sub.add_parser("mix", help="mix clean and artifact files at the SNR levels")
    p.add_argument("--clean", type=Path, required=True)
    p.add_argument("--artifact", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="corpus directory")
    p.add_argument("--per-level", type=int, default=100)
    p.add_argument("--levels", default="low,mid,high")

    for name, text in (("train-meta", "train the SNR meta-targeter"), ("train-ae", "pretrain the autoencoder"),
                       ("train-adv", "adversarial generator/discriminator cycles"),
                       ("calibrate", "compute fallback calibration statistics")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--corpus", type=Path, help="training corpus directory (default: synthetic)")
        p.add_argument("--bundle", type=Path, help="model bundle directory (default: models.bundle)")
        if name == "train-meta":
            p.add_argument("--epochs", type=int)
        if name == "train-ae":
            p.add_argument("--epochs", type=int)
        if name == "train-adv":
            p.add_argument("--heldout", type=Path, help="held-out corpus directory for per-cycle metrics")
            p.add_argument("--log", type=Path, help="write the cycle log CSV here")

    p = sub.add_parser("denoise", help="denoise every segment of a file")
    p.add_argument("--in", dest="inp", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--bundle", type=Path)
    p.add_argument("--outcomes", type=Path, help="write per-segment rescale outcomes as CSV")

    p = sub.add_parser("bench", help="benchmark the pipeline and write the report")
    p.add_argument("--out", type=Path, required=True, help="report directory")
    p.add_argument("--corpus", type=Path, help="corpus directory (default: synthetic)")
    p.add_argument("--bundle", type=Path)
    p.add_argument("--identity", action="store_true", help="bypass AE and rescale (pass-through baseline)")

    p = sub.add_parser("report", help="re-emit report files from a segments CSV")
    p.add_argument("--segments", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("params", help="print the trainable-parameter audit")
    p.add_argument("--bundle", type=Path, help="count a trained bundle instead of freshly built models")
    return parser


# ---------------------------------------------------------------------------
# helpers


def _settings(args) -> Settings:
    settings = load_config(args.config) if args.config else Settings()
    if args.seed is not None:
        settings.with_seed(args.seed)
    return settings


def _bundle(args, settings) -> Path:
    bundle = getattr(args, "bundle", None) or settings.pipeline.models
    if bundle is None:
        raise UsageError("no model bundle: pass --bundle or set models.bundle")
    return Path(bundle)


def _corpus(args, settings) -> Corpus:
    if getattr(args, "corpus", None):
        return Corpus.load(args.corpus)
    return settings.pipeline.load_corpus()


def _write_text(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise TadaIOError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args, settings):
    seed = settings.pipeline.seed
    clean = synth_clean(seed, args.count)
    if args.kind == "mixed":
        n_spike = args.count // 2
        parts = [synth_artifact(seed, args.count - n_spike, ArtifactKind.CONTINUOUS)]
        if n_spike:
            parts.append(synth_artifact(seed, n_spike, ArtifactKind.SPIKE))
        artifact = np.concatenate(parts)[np.random.default_rng([seed, 0x5E7]).permutation(args.count)]
    else:
        artifact = synth_artifact(seed, args.count, ArtifactKind(args.kind))
    try:
        args.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise TadaIOError(f"{args.out}: {exc}") from exc
    ext = _EXT[args.format]
    write_segments(args.out / f"clean{ext}", clean, args.format)
    write_segments(args.out / f"artifact{ext}", artifact, args.format)
    print(f"wrote {args.count} clean and {args.count} artifact segments to {args.out}")


def cmd_mix(args, settings):
    levels = _levels(args.levels)
    corpus = mix_corpus(read_segments(args.clean), read_segments(args.artifact), args.per_level, levels,
                        settings.pipeline.seed)
    corpus.save(args.out, args.format)
    print(f"wrote {len(corpus)} mixtures to {args.out}")


def cmd_train_meta(args, settings):
    bundle = _bundle(args, settings)
    corpus = _corpus(args, settings)
    meta = settings.meta
    result = train_meta_targeter(corpus.mixture, corpus.levels, epochs=args.epochs or meta.epochs,
                                 seed=settings.pipeline.seed, test_size=meta.test_size, batch=meta.batch,
                                 lr=meta.lr)
    update_bundle(bundle, lc=result.model)
    print(f"held-out accuracy {result.accuracy:.4f} mean loss {result.mean_loss:.6g}")


def _training_pairs(args, settings):
    pairs = _corpus(args, settings).pairs()
    size = settings.train.train_size
    if len(pairs) > size:
        idx = np.sort(np.random.default_rng([settings.train.seed, 0x7A1]).permutation(len(pairs))[:size])
        pairs = [pairs[i] for i in idx]
    return pairs


def cmd_train_ae(args, settings):
    bundle = _bundle(args, settings)
    pairs = _training_pairs(args, settings)
    ae, trajectory = pretrain_autoencoder(pairs, settings.train, epochs=args.epochs)
    update_bundle(bundle, ae=ae)
    if trajectory:
        print(f"trained {len(trajectory)} epochs, final loss {trajectory[-1]:.6g}")


def cmd_calibrate(args, settings):
    bundle = _bundle(args, settings)
    ae = load_component(bundle, "ae")
    calibration = compute_calibration(_corpus(args, settings).pairs(), ae)
    update_bundle(bundle, calibration=calibration)
    for level in SnrLevel:
        offset, ratio = calibration.for_level(level)
        print(f"{level.name.lower()}: offset {offset:.6g} ratio {ratio:.6g}")


def cmd_train_adv(args, settings):
    bundle = _bundle(args, settings)
    ae = load_component(bundle, "ae")
    calibration = load_component(bundle, "calibration")
    heldout = Corpus.load(args.heldout).pairs() if args.heldout else None
    disc = DiscriminatorModel(settings.train.seed)
    ae, disc, report = adversarial_train(ae, disc, _training_pairs(args, settings), calibration,
                                         settings.train, heldout=heldout, params=settings.pipeline.params)
    update_bundle(bundle, ae=ae, disc=disc)
    if args.log:
        _write_text(args.log, report.log_csv())
    for e in report.entries:
        heldout_cc = f" heldout cc {e.cc:.4f}" if np.isfinite(e.cc) else ""
        print(f"cycle {e.cycle}: gen {e.gen_loss:.5f} disc {e.disc_loss:.5f} acc {e.disc_accuracy:.3f}{heldout_cc}")


def cmd_denoise(args, settings):
    models = load_models(_bundle(args, settings), settings.pipeline.calibration)
    if models.calibration is None:
        raise UsageError("bundle has no calibration; run 'tada calibrate' first")
    mixtures = read_segments(args.inp)
    outputs, rows = [], []
    for k, mixture in enumerate(mixtures):
        result = denoise_segment(mixture, models, models.calibration, settings.pipeline)
        outputs.append(result.output)
        rows.append((str(k), result.level.name.lower()) + result.outcome.csv_row())
    fmt = args.out.suffix[1:] if args.out.suffix in (".csv", ".bin") else args.format
    write_segments(args.out, np.array(outputs).reshape(len(outputs), -1), fmt)
    if args.outcomes:
        header = ("index", "level") + RescaleOutcome.CSV_HEADER
        _write_text(args.outcomes, "\n".join(",".join(r) for r in [header] + rows) + "\n")
    print(f"denoised {len(outputs)} segments into {args.out}")


def cmd_bench(args, settings):
    corpus = _corpus(args, settings)
    if args.identity:
        report = bench_run(settings.pipeline, corpus=corpus, denoiser=lambda x: x)
    else:
        models = load_models(_bundle(args, settings), settings.pipeline.calibration)
        if models.calibration is None:
            raise UsageError("bundle has no calibration; run 'tada calibrate' first")
        report = bench_run(settings.pipeline, models=models, corpus=corpus)
    report_emit(report, args.out)
    sys.stdout.write(summary_csv(report))
    if report.param_count:
        print(f"parameters {report.param_count}")


def cmd_report(args, settings):
    try:
        text = args.segments.read_text()
    except OSError as exc:
        raise TadaIOError(f"{args.segments}: {exc}") from exc
    written = report_emit(BenchReport.from_segments_csv(text), args.out)
    print(f"wrote {len(written)} files to {args.out}")


def cmd_params(args, settings):
    if args.bundle:
        models = load_models(args.bundle)
        lc, ae = models.lc, models.ae
    else:
        lc, ae = build_lc_ensemble(settings.pipeline.seed), build_autoencoder(settings.pipeline.seed)
    for name in lc.active:
        print(f"lc.{name} {count_params(lc.base(name))}")
    meta = sum(p.data.size for n, p in lc.named_parameters() if n.startswith("meta_"))
    print(f"lc.meta {meta}")
    print(f"lc {count_params(lc)}")
    print(f"ae {count_params(ae)}")
    total = count_params(lc) + count_params(ae)
    print(f"total {total}")
    print(f"discriminator (training only) {count_params(DiscriminatorModel(settings.pipeline.seed))}")


COMMANDS = {
    "synth": cmd_synth, "mix": cmd_mix, "train-meta": cmd_train_meta, "train-ae": cmd_train_ae,
    "train-adv": cmd_train_adv, "calibrate": cmd_calibrate, "denoise": cmd_denoise, "bench": cmd_bench,
    "report": cmd_report, "params": cmd_params,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[args.command](args, _settings(args))
    except (TadaIOError, OSError) as exc:
        print(f"tada: error: {_one_line(exc)}", file=sys.stderr)
        return 2
    except (TadaValueError, ValueError) as exc:
        print(f"tada: error: {_one_line(exc)}", file=sys.stderr)
        return 1
    return 0


def _one_line(exc) -> str:
    return " ".join(str(exc).split()) or type(exc).__name__


if __name__ == "__main__":
    sys.exit(main())
