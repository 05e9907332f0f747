"""Benchmark report files: summary tables as CSV, distributions as SVG.

Files written by ``report_emit``:

``summary.csv``     mean CC/TRRMSE/SRRMSE, one row per metric, one column per SNR level
``stats.csv``       level, metric, n, mean, median, std
``fallback.csv``    rescale-method counts per level; ``total`` equals the level's segment count
``histograms.csv``  level, metric, bin, lo, hi, count
``segments.csv``    one row per segment (see ``SegmentRecord.CSV_HEADER``); latency columns last
``latency.csv``     stage, mean_us, share
``hist_<level>_<metric>.svg``  one histogram per level and metric
"""
from __future__ import annotations

import csv
import io
from pathlib import Path
from xml.sax.saxutils import escape

from tada.errors import EmptyCorpus, TadaIOError
from tada.pipeline import METHOD_NAMES, METRICS, STAGES, BenchReport
from tada.sigcore.signal import SnrLevel

HIST_BINS = 20
METRIC_LABELS = {"cc": "CC", "trrmse": "TRRMSE", "srrmse": "SRRMSE"}


def level_heading(level: SnrLevel) -> str:
    return f"{level.label} SNR ({level.db:g} dB)"


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def summary_csv(report: BenchReport) -> str:
    present = set(report.levels)
    rows = [("metric",) + tuple(level_heading(lv) for lv in SnrLevel)]
    for metric in METRICS:
        rows.append((METRIC_LABELS[metric],) + tuple(
            f"{report.mean(lv, metric):.4f}" if lv in present else "" for lv in SnrLevel))
    return _csv(rows)


def stats_csv(report: BenchReport) -> str:
    rows = [("level", "metric", "n", "mean", "median", "std")]
    for level in report.levels:
        n = report.counts()[level]
        for metric, s in report.summary(level).items():
            rows.append((level.name.lower(), metric, n, repr(s["mean"]), repr(s["median"]), repr(s["std"])))
    return _csv(rows)


def fallback_csv(report: BenchReport) -> str:
    rows = [("level",) + METHOD_NAMES + ("total",)]
    for level in report.levels:
        counts = report.method_counts(level)
        rows.append((level.name.lower(),) + tuple(counts[m] for m in METHOD_NAMES) + (sum(counts.values()),))
    return _csv(rows)


def histograms_csv(report: BenchReport, bins: int = HIST_BINS) -> str:
    rows = [("level", "metric", "bin", "lo", "hi", "count")]
    for level in report.levels:
        for metric in METRICS:
            counts, edges = report.histogram(level, metric, bins)
            for k, c in enumerate(counts):
                rows.append((level.name.lower(), metric, k, repr(float(edges[k])), repr(float(edges[k + 1])), int(c)))
    return _csv(rows)


def latency_csv(report: BenchReport) -> str:
    means = report.latency_means()
    shares = report.latency_shares() if sum(means.values()) > 0 else dict.fromkeys(STAGES, 0.0)
    rows = [("stage", "mean_us", "share")]
    rows += [(stage, f"{means[stage]:.3f}", f"{shares[stage]:.4f}") for stage in STAGES]
    return _csv(rows)


def histogram_svg(counts, edges, title: str, xlabel: str, width: int = 480, height: int = 300) -> str:
    """Self-contained SVG bar chart of one histogram."""
    left, right, top, bottom = 50, 15, 30, 45
    pw, ph = width - left - right, height - top - bottom
    peak = max(int(max(counts)), 1)
    bar_w = pw / len(counts)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-family="sans-serif" '
        f'font-size="13">{escape(title)}</text>',
    ]
    for k, c in enumerate(counts):
        h = ph * int(c) / peak
        parts.append(f'<rect x="{left + k * bar_w:.2f}" y="{top + ph - h:.2f}" width="{bar_w * 0.9:.2f}" '
                     f'height="{h:.2f}" fill="#4a72b0"><title>{int(c)}</title></rect>')
    axis_y = top + ph
    parts += [
        f'<line x1="{left}" y1="{axis_y}" x2="{left + pw}" y2="{axis_y}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{axis_y}" stroke="black"/>',
        f'<text x="{left}" y="{axis_y + 15}" font-family="sans-serif" font-size="10" '
        f'text-anchor="middle">{float(edges[0]):.3g}</text>',
        f'<text x="{left + pw}" y="{axis_y + 15}" font-family="sans-serif" font-size="10" '
        f'text-anchor="middle">{float(edges[-1]):.3g}</text>',
        f'<text x="{left - 5}" y="{top + 4}" font-family="sans-serif" font-size="10" '
        f'text-anchor="end">{peak}</text>',
        f'<text x="{left - 5}" y="{axis_y}" font-family="sans-serif" font-size="10" text-anchor="end">0</text>',
        f'<text x="{left + pw / 2:.1f}" y="{height - 10}" font-family="sans-serif" font-size="11" '
        f'text-anchor="middle">{escape(xlabel)}</text>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


def report_emit(report: BenchReport, out_dir, bins: int = HIST_BINS) -> list[Path]:
    """Write all report files into ``out_dir``; returns the paths written."""
    if len(report) == 0:
        raise EmptyCorpus("report is empty; nothing written")
    files = {
        "summary.csv": summary_csv(report),
        "stats.csv": stats_csv(report),
        "fallback.csv": fallback_csv(report),
        "histograms.csv": histograms_csv(report, bins),
        "segments.csv": report.segments_csv(),
        "latency.csv": latency_csv(report),
    }
    for level in report.levels:
        for metric in METRICS:
            counts, edges = report.histogram(level, metric, bins)
            title = f"{METRIC_LABELS[metric]} at {level_heading(level)}, n={int(counts.sum())}"
            files[f"hist_{level.name.lower()}_{metric}.svg"] = histogram_svg(counts, edges, title,
                                                                             METRIC_LABELS[metric])
    out_dir = Path(out_dir)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (out_dir / name).write_text(text)
            written.append(out_dir / name)
    except OSError as exc:
        raise TadaIOError(f"{out_dir}: {exc}") from exc
    return written
