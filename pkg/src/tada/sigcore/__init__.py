from tada.sigcore.signal import (
    RATE_HZ,
    SEGMENT_LENGTH,
    ContaminatedPair,
    Segment,
    SnrLevel,
    denormalize_minmax,
    mix_at_snr,
    normalize_minmax,
    normalize_rows,
    rms,
    snr_db,
)
from tada.sigcore.metrics import metrics_triple, pearson_cc, power_spectrum, srrmse, trrmse
from tada.sigcore.synth import ArtifactKind, synth_artifact, synth_clean, synth_pairs
from tada.sigcore.io import read_segments, write_segments
from tada.sigcore.corpus import Corpus, mix_corpus

__all__ = [
    "RATE_HZ", "SEGMENT_LENGTH", "ContaminatedPair", "Segment", "SnrLevel",
    "denormalize_minmax", "mix_at_snr", "normalize_minmax", "normalize_rows", "rms", "snr_db",
    "metrics_triple", "pearson_cc", "power_spectrum", "srrmse", "trrmse",
    "ArtifactKind", "synth_artifact", "synth_clean", "synth_pairs",
    "read_segments", "write_segments", "Corpus", "mix_corpus",
]
