"""Scale targeting on one hand-made segment.

A smooth "truth" is contaminated by a burst of broadband noise in its second
half. The stand-in for an AE output is the truth at the wrong scale and
offset (plus a little noise). Targeting finds the clean first half through
the running correlation and recovers scale and offset from it.
"""
import numpy as np

from tada.sigcore import SnrLevel, pearson_cc, trrmse
from tada.targeting import CalibrationStats, TargetingParams, scale_targeting

rng = np.random.default_rng(0)
n = 512
t = np.arange(n) / 256.0
truth = 20 * np.sin(2 * np.pi * 6 * t) + 8 * np.sin(2 * np.pi * 11 * t + 1.0)
mixture = truth.copy()
mixture[256:] += 60 * rng.normal(size=256)

suggestion = 0.02 * (truth + 2 * rng.normal(size=n)) + 0.5    # what a [0,1] AE might emit
calibration = CalibrationStats(offset={lv: 0.0 for lv in SnrLevel}, ratio={lv: 40.0 for lv in SnrLevel})

out, outcome = scale_targeting(suggestion, mixture, TargetingParams(tau=0.8), calibration, SnrLevel.MID)
print(f"method        {outcome.method.value}")
print(f"windows used  {outcome.n_windows} of {len(outcome.raw_r)}   (omega {outcome.omega:.1f})")
print(f"scale/offset  {outcome.scale:.2f} / {outcome.offset:.2f}   (ideal 50.00 / -25.00)")
print(f"TRRMSE        mixture {trrmse(mixture, truth):.3f}   rescaled {trrmse(out, truth):.3f}")
print(f"CC            suggestion {pearson_cc(suggestion, truth):.4f}   rescaled {pearson_cc(out, truth):.4f}")
gated = outcome.smoothed_r > 0.8
print(f"first gated window starts at {int(np.argmax(gated))}, last at {int(len(gated) - 1 - np.argmax(gated[::-1]))}")
