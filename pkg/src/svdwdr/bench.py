"""Benchmark harness: corpus x method x ratio grid, rank sweeps and external baselines."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import shlex
import subprocess
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import CodecError, EmptyCorpus, ExternalToolFailure
from .image_io import GrayImage, load_image, parse_pgm, write_image
from .metrics import quality
from .pipeline import CompressionConfig, compress, decompress
from .svd_lowrank import svd_compression_ratio, svd_decompose
from .wdr_codec import WdrParams

log = logging.getLogger(__name__)

CSV_COLUMNS = ["image", "method", "target_ratio", "cr_paper", "cr_measured", "mse", "psnr_db", "ssim", "ms"]
SWEEP_COLUMNS = ["k", "cr_svd", "psnr_db"]
CODEC_METHODS = ("svd_wdr", "wdr_only", "svd_only")
IMAGE_SUFFIXES = (".pgm", ".png")
ERROR_MARK = "error"


def fmt(x) -> str:
    """Stable decimal rendering shared by CSV, JSON and the ``eval`` command."""
    if isinstance(x, str):
        return x
    if isinstance(x, int):
        return str(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    text = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if text == "-0" else text


def _parse_num(text: str) -> float:
    return float(text)


@dataclass
class ResultRow:
    image: str
    method: str
    target_ratio: float
    cr_paper: float = math.nan
    cr_measured: float = math.nan
    mse: float = math.nan
    psnr_db: float = math.nan
    ssim: float = math.nan
    ms: float = 0.0
    error: str | None = None

    @property
    def key(self):
        return (self.image, self.method, self.target_ratio)

    def as_record(self) -> dict:
        """CSV/JSON view: every column as its printed string."""
        rec = {"image": self.image, "method": self.method, "target_ratio": fmt(self.target_ratio)}
        for col in CSV_COLUMNS[3:]:
            rec[col] = ERROR_MARK if self.error else fmt(getattr(self, col))
        if self.error:
            rec["error"] = self.error
        return rec


@dataclass
class SweepRow:
    k: int
    cr_svd: float
    psnr_db: float


@dataclass
class ExperimentSpec:
    corpus_dir: str
    ratios: list = field(default_factory=lambda: [20.0, 40.0, 80.0])
    methods: list = field(default_factory=lambda: ["svd_wdr", "wdr_only"])
    base: CompressionConfig = field(default_factory=lambda: CompressionConfig(target_ratio=20.0))
    sweep: dict = field(default_factory=dict)
    baseline_cmd: str | None = None
    baseline_csv: str | None = None
    reconstruction: str = "floor"
    timing: bool = False
    jobs: int = 1

    def __post_init__(self):
        if any(not r > 1 for r in self.ratios):
            raise ValueError("every ratio must exceed 1")
        unknown = set(self.methods) - set(CODEC_METHODS) - {"external"}
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        if "external" in self.methods and not self.baseline_cmd:
            raise ValueError("method 'external' needs a baseline command template")
        bad = set(self.sweep) - {"svd_share", "passes", "k"}
        if bad:
            raise ValueError(f"cannot sweep {sorted(bad)}")


def corpus_images(corpus_dir) -> list[Path]:
    root = Path(corpus_dir)
    if not root.is_dir():
        raise EmptyCorpus(f"corpus directory {root} does not exist")
    paths = sorted(p for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file())
    if not paths:
        raise EmptyCorpus(f"no .pgm or .png images in {root}")
    return paths


def _variants(spec: ExperimentSpec, method: str):
    """(label, config-overrides) pairs for a method under the parameter sweep."""
    if method == "external":
        return [("external", {})]
    grid = [("", {})]
    for name in ("svd_share", "passes", "k"):
        values = spec.sweep.get(name)
        if not values:
            continue
        if method == "wdr_only" and name in ("svd_share", "k"):
            continue
        if method == "svd_only" and name in ("svd_share", "passes"):
            continue
        grid = [
            (f"{label},{name}={fmt(v)}" if label else f"{name}={fmt(v)}", {**over, name: v})
            for label, over in grid
            for v in values
        ]
    return [(f"{method}[{label}]" if label else method, over) for label, over in grid]


def _config(spec: ExperimentSpec, method: str, ratio: float, over: dict) -> CompressionConfig:
    cfg = replace(spec.base, mode=method, target_ratio=ratio)
    if "svd_share" in over:
        cfg = replace(cfg, svd_share=float(over["svd_share"]))
    if "k" in over:
        cfg = replace(cfg, svd_rank=int(over["k"]))
    if "passes" in over:
        cfg = replace(cfg, wdr=replace(cfg.wdr, passes=int(over["passes"])))
    return cfg


def evaluate(img: GrayImage, image_id: str, label: str, cfg: CompressionConfig, factors=None,
             reconstruction: str = "floor", timing: bool = False) -> ResultRow:
    """Compress, decompress and score one configuration; codec errors land in the row."""
    row = ResultRow(image_id, label, float(cfg.target_ratio))
    start = time.perf_counter()
    try:
        container = compress(img, cfg, factors=factors)
        restored = decompress(container, reconstruction)
    except CodecError as exc:
        row.error = f"{type(exc).__name__}: {exc}"
        return row
    elapsed = (time.perf_counter() - start) * 1000.0
    q = quality(img, restored)
    row.cr_paper = container.cr_total
    row.cr_measured = container.cr_measured
    row.mse, row.psnr_db, row.ssim = q.mse, q.psnr, q.ssim
    row.ms = round(elapsed, 3) if timing else 0.0
    return row


def _run_image(spec: ExperimentSpec, path: Path) -> list[ResultRow]:
    image_id = path.stem
    try:
        img = load_image(path)
    except CodecError as exc:
        return [
            ResultRow(image_id, label, float(r), error=f"{type(exc).__name__}: {exc}")
            for method in spec.methods
            for label, _ in _variants(spec, method)
            for r in spec.ratios
        ]
    factors = None
    if any(m in ("svd_wdr", "svd_only") for m in spec.methods):
        factors = svd_decompose(img.samples.astype(float), method=spec.base.svd_method)
    rows = []
    for method in spec.methods:
        for label, over in _variants(spec, method):
            for ratio in spec.ratios:
                if method == "external":
                    rows.append(external_baseline(path, ratio, spec.baseline_cmd, img=img, timing=spec.timing))
                    continue
                cfg = _config(spec, method, ratio, over)
                rows.append(evaluate(img, image_id, label, cfg, factors, spec.reconstruction, spec.timing))
    return rows


def run_experiments(spec: ExperimentSpec, out_csv=None) -> list[ResultRow]:
    """Run the full grid; rows are sorted by (image, method, ratio)."""
    paths = corpus_images(spec.corpus_dir)
    rows = []
    if spec.jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            for chunk in pool.map(_run_image, [spec] * len(paths), paths):
                rows.extend(chunk)
    else:
        for path in paths:
            log.info("benchmarking %s", path.name)
            rows.extend(_run_image(spec, path))
    if spec.baseline_csv:
        rows.extend(read_csv(spec.baseline_csv))
    rows.sort(key=lambda r: r.key)
    if out_csv is not None:
        write_csv(rows, out_csv)
    return rows


# -- external baseline ---------------------------------------------------------------

def external_baseline(image_path, ratio: float, template: str, img: GrayImage | None = None,
                      timing: bool = False, timeout: float = 600.0) -> ResultRow:
    """Round-trip an image through a user command and score the result.

    ``template`` is split shell-style, then ``{in}``, ``{out}``, ``{bytes}``
    and ``{code}`` are substituted per argument. The command reads the PGM at
    ``{in}`` and writes the decoded PGM to ``{out}``; if it also leaves a
    compressed file at ``{code}`` that file's size is the compressed size,
    otherwise the decoded payload size is used.
    """
    image_path = Path(image_path)
    row = ResultRow(image_path.stem, "external", float(ratio))
    try:
        img = img if img is not None else load_image(image_path)
        m, n = img.shape
        with tempfile.TemporaryDirectory(prefix="svdwdr-") as tmp:
            src = os.path.join(tmp, "in.pgm")
            dst = os.path.join(tmp, "out.pgm")
            code = os.path.join(tmp, "code.bin")
            write_image(img, src)
            fields = {"in": src, "out": dst, "code": code, "bytes": str(int((m * n) // ratio))}
            try:
                argv = [tok.format(**fields) for tok in shlex.split(template)]
            except (KeyError, IndexError, ValueError) as exc:
                raise ExternalToolFailure(f"bad command template: {exc}") from None
            start = time.perf_counter()
            try:
                proc = subprocess.run(argv, capture_output=True, timeout=timeout, check=False)
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise ExternalToolFailure(f"{argv[0] if argv else template!r}: {exc}") from None
            elapsed = (time.perf_counter() - start) * 1000.0
            if proc.returncode != 0:
                err = proc.stderr.decode(errors="replace").strip().splitlines()
                raise ExternalToolFailure(f"exit status {proc.returncode}: {err[-1] if err else ''}")
            if not os.path.exists(dst):
                raise ExternalToolFailure("command did not write the decoded image")
            with open(dst, "rb") as fh:
                decoded = parse_pgm(fh.read())
            if decoded.shape != img.shape:
                raise ExternalToolFailure(f"decoded image is {decoded.shape}, expected {img.shape}")
            size = os.path.getsize(code) if os.path.exists(code) else decoded.samples.size
    except CodecError as exc:
        row.error = f"{type(exc).__name__}: {exc}"
        return row
    q = quality(img, decoded)
    row.cr_measured = row.cr_paper = (m * n) / max(size, 1)
    row.mse, row.psnr_db, row.ssim = q.mse, q.psnr, q.ssim
    row.ms = round(elapsed, 3) if timing else 0.0
    return row


# -- rank sweep ------------------------------------------------------------------------

def sweep_rank_curve(img: GrayImage, ks, factors=None) -> list[SweepRow]:
    """PSNR of the ``svd_only`` pipeline against the retained rank."""
    m, n = img.shape
    if factors is None:
        factors = svd_decompose(img.samples.astype(float))
    rows = []
    for k in ks:
        cfg = CompressionConfig(mode="svd_only", svd_rank=int(k), wdr=WdrParams())
        restored = decompress(compress(img, cfg, factors=factors))
        rows.append(SweepRow(int(k), svd_compression_ratio(m, n, int(k)), quality(img, restored).psnr))
    return rows


# -- CSV ---------------------------------------------------------------------------------

def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        rec = row.as_record()
        writer.writerow([rec[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(rows, path) -> None:
    Path(path).write_text(rows_to_csv(rows), encoding="utf-8")


def read_csv(path) -> list[ResultRow]:
    """Load result rows (e.g. precomputed baseline values) in the bench CSV layout."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for rec in reader:
            row = ResultRow(rec["image"], rec["method"], _parse_num(rec["target_ratio"]))
            if any(rec[c] == ERROR_MARK for c in CSV_COLUMNS[3:]):
                row.error = "recorded as failed"
            else:
                for col in CSV_COLUMNS[3:]:
                    setattr(row, col, _parse_num(rec[col]))
            rows.append(row)
    return rows


def sweep_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        writer.writerow([r.k, fmt(r.cr_svd), fmt(r.psnr_db)])
    return buf.getvalue()


def row_json(row) -> dict:
    if isinstance(row, ResultRow):
        return row.as_record()
    return {k: fmt(v) for k, v in asdict(row).items()}
