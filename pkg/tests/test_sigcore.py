import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import naive_dft_power
from tada.errors import (
    DegenerateArtifact,
    DegenerateClean,
    DegenerateSpan,
    DegenerateTruth,
    InvalidCount,
    LengthMismatch,
    NonFiniteSamples,
    NonPowerOfTwoLength,
)
from tada.sigcore import (
    ArtifactKind,
    Segment,
    SnrLevel,
    denormalize_minmax,
    metrics_triple,
    mix_at_snr,
    normalize_minmax,
    pearson_cc,
    power_spectrum,
    rms,
    srrmse,
    synth_artifact,
    synth_clean,
    synth_pairs,
    trrmse,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def _signal(n=64):
    """Segments with a clearly non-zero spread."""
    return arrays(np.float64, n, elements=finite).filter(lambda x: np.std(x) > 1e-3 * (1 + np.abs(x).max()))


# ---------------------------------------------------------------- levels, segments


def test_three_levels_with_their_db_values():
    assert [lv.db for lv in SnrLevel] == [-7.0, -2.5, 2.0]
    assert [int(lv) for lv in SnrLevel] == [0, 1, 2]
    assert SnrLevel.from_db(-2.5) is SnrLevel.MID
    with pytest.raises(ValueError):
        SnrLevel.from_db(0.0)


def test_segment_rejects_non_finite_and_bad_shape():
    assert len(Segment(np.zeros(512))) == 512
    with pytest.raises(NonFiniteSamples):
        Segment(np.array([0.0, np.nan]))
    with pytest.raises(ValueError):
        Segment(np.zeros((2, 2)))


# ---------------------------------------------------------------- mixing


def test_mix_closed_form_example():
    pair = mix_at_snr([1, -1, 1, -1], [2, 2, -2, -2], 0.0)
    assert pair.lam == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(pair.mixture, [2, 0, 0, -2], atol=1e-15)


def test_mix_equal_rms_at_low_level():
    rng = np.random.default_rng(3)
    x = rng.normal(size=512)
    n = rng.normal(size=512)
    n *= rms(x) / rms(n)
    assert mix_at_snr(x, n, -7.0).lam == pytest.approx(10 ** 0.7, rel=1e-12)
    assert 10 ** 0.7 == pytest.approx(5.0119, abs=1e-4)


def test_mix_errors():
    with pytest.raises(DegenerateArtifact):
        mix_at_snr([1, 2, 3, 4], [0, 0, 0, 0], 0.0)
    with pytest.raises(DegenerateClean):
        mix_at_snr([0, 0, 0, 0], [1, 2, 3, 4], 0.0)
    with pytest.raises(LengthMismatch):
        mix_at_snr([1, 2, 3], [1, 2, 3, 4], 0.0)


@settings(max_examples=200, deadline=None)
@given(_signal(), _signal(), st.floats(-20, 20))
def test_mix_realized_snr_and_exact_mixture(clean, art, snr):
    pair = mix_at_snr(clean, art, snr)
    assert abs(pair.realized_snr_db() - snr) < 1e-6
    assert np.array_equal(pair.mixture, clean + pair.lam * art)
    assert pair.lam > 0


# ---------------------------------------------------------------- metrics


def test_cc_examples():
    x = np.random.default_rng(0).normal(size=100)
    assert pearson_cc(x, x) == pytest.approx(1.0, abs=1e-12)
    assert pearson_cc(x, -x) == pytest.approx(-1.0, abs=1e-12)
    # population moments: cov 1, var 2/3 and 14/9
    assert pearson_cc([1, 2, 3], [1, 2, 4]) == pytest.approx(1 / np.sqrt(2 / 3 * 14 / 9), abs=1e-12)
    assert pearson_cc([1, 2, 3], [1, 2, 4]) == pytest.approx(0.98198, abs=1e-5)


def test_cc_flat_input_is_zero_and_length_checks():
    assert pearson_cc([3, 3, 3], [1, 2, 3]) == 0.0
    assert pearson_cc([1, 2, 3], [5, 5, 5]) == 0.0
    with pytest.raises(LengthMismatch):
        pearson_cc([1, 2], [1, 2, 3])
    with pytest.raises(LengthMismatch):
        pearson_cc([1], [1])


@settings(max_examples=200, deadline=None)
@given(_signal(), _signal(), st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))
def test_cc_positive_affine_invariance(x, y, a, b):
    base = pearson_cc(x, y)
    assert -1.0 <= base <= 1.0
    assert abs(pearson_cc(a * x + b, y) - base) < 1e-12
    assert abs(pearson_cc(x, a * y + b) - base) < 1e-12


def test_trrmse_examples():
    t = np.random.default_rng(1).normal(size=64)
    assert trrmse(t, t) == 0.0
    assert trrmse(np.zeros(64), t) == pytest.approx(1.0, abs=1e-15)
    assert trrmse(2 * t, t) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(DegenerateTruth):
        trrmse(t, np.zeros(64))


@settings(max_examples=100, deadline=None)
@given(_signal(), _signal(), st.floats(-5, 5))
def test_trrmse_direct_formula(truth, other, lam):
    est = lam * truth + other
    direct = np.sqrt(np.sum((est - truth) ** 2) / np.sum(truth ** 2))
    assert abs(trrmse(est, truth) - direct) <= 1e-12 * max(1.0, direct)


def test_power_spectrum_examples():
    p = power_spectrum(np.full(512, 2.5))
    assert p.shape == (257,)
    assert p[0] == pytest.approx((2.5 * 512) ** 2)
    assert np.max(np.abs(p[1:])) < 1e-9
    k = 17
    sine = np.sin(2 * np.pi * k * np.arange(512) / 512)
    p = power_spectrum(sine)
    others = np.delete(p, k)
    assert p[k] == pytest.approx((512 / 2) ** 2)
    assert np.max(others) < 1e-9
    with pytest.raises(NonPowerOfTwoLength):
        power_spectrum(np.ones(500))


def test_power_spectrum_matches_naive_dft():
    rng = np.random.default_rng(5)
    for _ in range(10):
        n = int(2 ** rng.integers(1, 10))
        x = rng.normal(size=n)
        p = power_spectrum(x)
        assert p.shape == (n // 2 + 1,)
        assert np.all(p >= 0)
        np.testing.assert_allclose(p, naive_dft_power(x), rtol=1e-9, atol=1e-9 * np.max(p))
        # Parseval over the full spectrum
        full = np.abs(np.fft.fft(x)) ** 2
        assert np.sum(full) / n == pytest.approx(np.sum(x * x), rel=1e-12)


def test_srrmse_examples():
    rng = np.random.default_rng(2)
    t = rng.normal(size=512)
    assert srrmse(t, t) == 0.0
    assert srrmse(np.roll(t, 37), t) < 1e-9
    e = rng.normal(size=512)
    pe, pt = naive_dft_power(e), naive_dft_power(t)
    oracle = np.sqrt(np.mean((pe - pt) ** 2)) / np.sqrt(np.mean(pt ** 2))
    assert srrmse(e, t) == pytest.approx(oracle, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(_signal(), st.integers(0, 63))
def test_srrmse_circular_shift_invariance(x, shift):
    assert srrmse(np.roll(x, shift), x) < 1e-9


def test_metrics_triple_order():
    rng = np.random.default_rng(4)
    t, e = rng.normal(size=64), rng.normal(size=64)
    assert metrics_triple(e, t) == (pearson_cc(e, t), trrmse(e, t), srrmse(e, t))


# ---------------------------------------------------------------- normalization


def test_normalize_examples():
    y, off, span = normalize_minmax([0, 5, 10])
    np.testing.assert_array_equal(y, [0, 0.5, 1])
    assert (off, span) == (0.0, 10.0)
    with pytest.raises(DegenerateSpan):
        normalize_minmax([4, 4, 4])


@settings(max_examples=200, deadline=None)
@given(_signal())
def test_normalize_round_trip(x):
    y, off, span = normalize_minmax(x)
    assert y.min() == 0.0 and y.max() == 1.0
    np.testing.assert_allclose(denormalize_minmax(y, off, span), x, atol=1e-12 * max(1.0, np.abs(x).max()))


# ---------------------------------------------------------------- synthetic corpus


def _band_fraction(x, hz):
    p = power_spectrum(x)
    freqs = np.fft.rfftfreq(len(x), 1 / 256)
    return p[freqs < hz].sum() / p.sum()


def test_synth_clean_deterministic_band_limited_zero_mean():
    a = synth_clean(1, 3)
    assert np.array_equal(a, synth_clean(1, 3))
    assert a.shape == (3, 512)
    assert not np.array_equal(a, synth_clean(2, 3))
    for x in synth_clean(7, 20):
        assert abs(x.mean()) < 1e-12
        assert _band_fraction(x, 45.0) >= 0.9
    with pytest.raises(InvalidCount):
        synth_clean(1, 0)


def test_synth_artifacts():
    cont = synth_artifact(3, 10, ArtifactKind.CONTINUOUS)
    assert np.array_equal(cont, synth_artifact(3, 10, ArtifactKind.CONTINUOUS))
    freqs = np.fft.rfftfreq(512, 1 / 256)
    for x in cont:
        p = power_spectrum(x)
        assert (p * freqs).sum() / p.sum() > 20.0
    spikes, masks = synth_artifact(3, 20, ArtifactKind.SPIKE, return_masks=True)
    assert np.array_equal(spikes, synth_artifact(3, 20, "spike"))
    for x, m in zip(spikes, masks):
        assert (x[m] ** 2).sum() / (x ** 2).sum() >= 0.8
        # every burst is at most 0.2 s; runs of True are bounded (bursts may abut)
        assert m.sum() <= 3 * int(0.2 * 256)
    with pytest.raises(InvalidCount):
        synth_artifact(1, -1)


def test_synth_pairs_levels_and_kinds():
    pairs = synth_pairs(2, 10)
    assert len(pairs) == 30
    assert [p.level for p in pairs] == [SnrLevel.LOW] * 10 + [SnrLevel.MID] * 10 + [SnrLevel.HIGH] * 10
    kinds = [p.meta["kind"] for p in pairs]
    assert kinds.count("spike") == 15
    for p in pairs:
        assert abs(p.realized_snr_db() - p.snr_db) < 1e-6
    again = synth_pairs(2, 10)
    assert all(np.array_equal(a.mixture, b.mixture) for a, b in zip(pairs, again))
