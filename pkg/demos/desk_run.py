"""Train every model on a synthetic corpus, then benchmark the pipeline.

Runs the same desk-scale recipe as the acceptance tests through the public
API and writes a model bundle plus the report files:

    python3 demos/desk_run.py --out runs/desk

``--quick`` shrinks every budget so the script finishes in about a minute
(the numbers are then meaningless, but every stage runs).
"""
import argparse
import copy
import logging
import time
from pathlib import Path

import numpy as np

from tada.models import build_discriminator
from tada.pipeline import ModelSet, PipelineConfig, bench_run, save_models
from tada.report import report_emit, summary_csv
from tada.sigcore import SnrLevel, synth_pairs
from tada.training import (
    TrainConfig,
    adversarial_train,
    compute_calibration,
    pairs_arrays,
    pretrain_autoencoder,
    train_meta_targeter,
)

log = logging.getLogger("desk_run")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=Path("runs/desk"))
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    meta_epochs, ae_epochs, per_level = (3, 2, 20) if args.quick else (100, 20, 100)
    config = TrainConfig(seed=0, pretrain_epochs=ae_epochs, cycles=1 if args.quick else 5)

    # meta-targeter: 900 train / 100 test mixtures, three SNR classes
    mix, _, levels = pairs_arrays(synth_pairs(7, 334 if not args.quick else 40))
    keep = np.random.default_rng(1).permutation(len(mix))[:1000]
    t0 = time.perf_counter()
    meta = train_meta_targeter(mix[keep], levels[keep], epochs=meta_epochs, seed=0,
                               test_size=100 if not args.quick else 20)
    log.info("meta-targeter: held-out accuracy %.3f (%.0f s)", meta.accuracy, time.perf_counter() - t0)

    # autoencoder: pretrain, calibrate the fallback, then adversarial cycles
    pairs = synth_pairs(1, 100 if not args.quick else 30)
    t0 = time.perf_counter()
    ae, trajectory = pretrain_autoencoder(pairs, config)
    log.info("pretrain: loss %.4f -> %.4f (%.0f s)", trajectory[0], trajectory[-1], time.perf_counter() - t0)
    calibration = compute_calibration(pairs, ae)
    ae, disc, cycles = adversarial_train(copy.deepcopy(ae), build_discriminator(0), pairs, calibration, config,
                                         heldout=synth_pairs(4, 30))
    log.info("adversarial: held-out CC %.4f -> %.4f", cycles.baseline[0], cycles.entries[-1].cc)

    models = ModelSet(meta.model, ae, calibration, disc)
    save_models(args.out / "bundle", models)
    (args.out / "cycles.csv").parent.mkdir(parents=True, exist_ok=True)
    (args.out / "cycles.csv").write_text(cycles.log_csv())

    report = bench_run(PipelineConfig(seed=11, per_level=per_level), models=models)
    report_emit(report, args.out / "report")
    print(summary_csv(report), end="")
    for level in SnrLevel:
        print(f"{level.label:>4}: input CC {report.input_cc(level):.4f}  fallback rate {report.fallback_rate(level):.2f}")
    print("latency shares", {k: round(v, 3) for k, v in report.latency_shares().items()})
    print("inference parameters", models.param_count())


if __name__ == "__main__":
    main()
