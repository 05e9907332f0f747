import csv
import io
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from tada.errors import EmptyCorpus
from tada.pipeline import METHOD_NAMES, METRICS, BenchReport, PipelineConfig, bench_run
from tada.report import histogram_svg, level_heading, report_emit, summary_csv
from tada.sigcore import Corpus, SnrLevel, synth_pairs

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def report():
    corpus = Corpus.from_pairs(synth_pairs(41, 6))
    return bench_run(PipelineConfig(), corpus=corpus, denoiser=lambda m: 0.5 * m + 1.0)


def _rows(path):
    return list(csv.reader(io.StringIO(path.read_text())))


def test_level_headings():
    assert [level_heading(lv) for lv in SnrLevel] == [
        "Low SNR (-7 dB)", "Mid SNR (-2.5 dB)", "High SNR (2 dB)"]


def test_report_emit_writes_every_file(tmp_path, report):
    written = report_emit(report, tmp_path / "out", bins=5)
    names = {p.name for p in written}
    assert {"summary.csv", "stats.csv", "fallback.csv", "histograms.csv", "segments.csv", "latency.csv"} <= names
    assert len([n for n in names if n.endswith(".svg")]) == 9
    out = tmp_path / "out"

    summary = _rows(out / "summary.csv")
    assert summary[0] == ["metric", "Low SNR (-7 dB)", "Mid SNR (-2.5 dB)", "High SNR (2 dB)"]
    assert [r[0] for r in summary[1:]] == ["CC", "TRRMSE", "SRRMSE"]
    for k, lv in enumerate(SnrLevel):
        assert float(summary[1][k + 1]) == pytest.approx(report.mean(lv, "cc"), abs=5e-5)

    fallback = _rows(out / "fallback.csv")
    assert fallback[0] == ["level", *METHOD_NAMES, "total"]
    for row in fallback[1:]:
        assert int(row[-1]) == sum(int(v) for v in row[1:-1]) == 6

    hist = _rows(out / "histograms.csv")[1:]
    assert len(hist) == 3 * len(METRICS) * 5
    for lv in SnrLevel:
        for metric in METRICS:
            counts = [int(r[5]) for r in hist if r[0] == lv.name.lower() and r[1] == metric]
            assert sum(counts) == 6

    stats = _rows(out / "stats.csv")
    assert stats[0] == ["level", "metric", "n", "mean", "median", "std"] and len(stats) == 10
    assert BenchReport.from_segments_csv((out / "segments.csv").read_text()).segments_csv() == report.segments_csv()
    assert [r[0] for r in _rows(out / "latency.csv")[1:]] == ["meta", "ae", "rescale"]


def test_svg_is_well_formed_and_matches_counts(tmp_path, report):
    report_emit(report, tmp_path, bins=4)
    root = ET.parse(tmp_path / "hist_mid_cc.svg").getroot()
    assert root.tag == SVG + "svg"
    bars = [el for el in root.iter(SVG + "rect") if el.find(SVG + "title") is not None]
    counts, _ = report.histogram(SnrLevel.MID, "cc", 4)
    assert [int(b.find(SVG + "title").text) for b in bars] == counts.tolist()
    heights = np.array([float(b.get("height")) for b in bars])
    assert heights.max() == pytest.approx(300 - 30 - 45)


def test_histogram_svg_escapes_and_handles_zero_counts():
    text = histogram_svg([0, 0], [0.0, 0.5, 1.0], "a < b & c", "x")
    root = ET.fromstring(text)
    assert any(el.text == "a < b & c" for el in root.iter(SVG + "text"))


def test_empty_report_writes_nothing(tmp_path):
    with pytest.raises(EmptyCorpus):
        report_emit(BenchReport(), tmp_path / "empty")
    assert not (tmp_path / "empty").exists()


def test_summary_leaves_missing_levels_blank(report):
    partial = BenchReport([r for r in report.records if r.level is SnrLevel.HIGH])
    rows = list(csv.reader(io.StringIO(summary_csv(partial))))
    assert rows[1][1] == "" and rows[1][2] == "" and rows[1][3] != ""
