"""SVG charts for benchmark results.

Output is a pure function of the rows: the SVG backend's date stamp is
dropped, element ids are salted with a constant, and text stays as
``<text>`` elements so printed values can be read back from the file.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .bench import fmt  # noqa: E402

METRICS = {"psnr_db": ("PSNR (dB)", 2), "ssim": ("SSIM", 3)}

STYLE = {
    "svg.hashsalt": "svdwdr",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
}


def label_value(value: float, digits: int) -> str:
    if math.isinf(value):
        return "inf"
    return f"{value:.{digits}f}"


def _save(fig, path: Path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": "svdwdr"})
    plt.close(fig)


def grouped_bars(rows, metric: str, ratio: float, path) -> Path:
    """One bar per (image, method) at a single target ratio, value printed on each bar."""
    ylabel, digits = METRICS[metric]
    rows = [r for r in rows if r.target_ratio == ratio and not r.error]
    images = sorted({r.image for r in rows})
    methods = sorted({r.method for r in rows})
    lookup = {(r.image, r.method): getattr(r, metric) for r in rows}
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 1.6 * len(images) + 1.5), 3.4))
        width = 0.8 / max(len(methods), 1)
        x = np.arange(len(images))
        finite = [v for v in lookup.values() if math.isfinite(v)]
        top = max(finite) if finite else 1.0
        for j, method in enumerate(methods):
            values = [lookup.get((img, method), math.nan) for img in images]
            heights = [v if math.isfinite(v) else top for v in values]
            bars = ax.bar(x + (j - (len(methods) - 1) / 2) * width, heights, width, label=method)
            for bar, v in zip(bars, values):
                if math.isnan(v):
                    continue
                ax.annotate(label_value(v, digits), (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                            ha="center", va="bottom", fontsize=7, gid="value")
        ax.set_xticks(x, images)
        ax.set_xlabel("image")
        ax.set_ylabel(ylabel)
        ax.set_title(f"{ylabel} at {fmt(ratio)}:1")
        ax.margins(y=0.15)
        ax.legend(frameon=False, fontsize=7)
        fig.tight_layout()
        _save(fig, path)
    return path


def rank_curve(sweep_rows, path, title: str = "SVD rank sweep") -> Path:
    """PSNR and SVD compression ratio against the number of singular values kept."""
    path = Path(path)
    ks = [r.k for r in sweep_rows]
    psnr = [r.psnr_db if math.isfinite(r.psnr_db) else math.nan for r in sweep_rows]
    cr = [r.cr_svd for r in sweep_rows]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        ax.plot(ks, psnr, marker="o", color="tab:blue", label="PSNR")
        ax.set_xlabel("singular values kept (k)")
        ax.set_ylabel("PSNR (dB)", color="tab:blue")
        ax2 = ax.twinx()
        ax2.spines["right"].set_visible(True)
        ax2.plot(ks, cr, marker="s", color="tab:orange", label="compression ratio")
        ax2.set_ylabel("SVD compression ratio", color="tab:orange")
        ax2.set_yscale("log")
        ax.set_title(title)
        fig.tight_layout()
        _save(fig, path)
    return path


def emit_charts(rows, out_dir, sweep_rows=None) -> list[Path]:
    """Write ``<metric>_<ratio>.svg`` per metric and ratio, plus ``psnr_vs_k.svg`` for a sweep."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    ratios = sorted({r.target_ratio for r in rows if not r.error})
    for metric in METRICS:
        for ratio in ratios:
            name = f"{metric.split('_')[0]}_{fmt(ratio)}.svg"
            written.append(grouped_bars(rows, metric, ratio, out / name))
    if sweep_rows:
        written.append(rank_curve(sweep_rows, out / "psnr_vs_k.svg"))
    return written
