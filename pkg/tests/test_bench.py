import csv
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from svdwdr.bench import (
    CSV_COLUMNS,
    ExperimentSpec,
    ResultRow,
    SweepRow,
    corpus_images,
    external_baseline,
    fmt,
    read_csv,
    row_json,
    rows_to_csv,
    run_experiments,
    sweep_rank_curve,
)
from svdwdr.errors import EmptyCorpus
from svdwdr.image_io import write_image
from svdwdr.pipeline import CompressionConfig
from svdwdr.plotting import emit_charts

from conftest import small_image


@pytest.fixture
def tiny_corpus(tmp_path):
    root = tmp_path / "corpus"
    root.mkdir()
    for i, name in enumerate(["b", "a"]):
        write_image(small_image(i, (64, 64)), root / f"{name}.pgm")
    (root / "notes.txt").write_text("ignored")
    return root


def test_fmt_is_stable():
    assert fmt(1.0) == "1"
    assert fmt(0.1234567) == "0.123457"
    assert fmt(-0.0000001) == "0"
    assert fmt(math.inf) == "inf"
    assert fmt(math.nan) == "nan"
    assert fmt(12) == "12"


def test_empty_corpus(tmp_path):
    with pytest.raises(EmptyCorpus):
        corpus_images(tmp_path)
    with pytest.raises(EmptyCorpus):
        corpus_images(tmp_path / "missing")


def test_grid_rows_sorted_and_complete(tiny_corpus, tmp_path):
    spec = ExperimentSpec(str(tiny_corpus), ratios=[8.0, 4.0], methods=["wdr_only", "svd_wdr"])
    rows = run_experiments(spec, tmp_path / "r.csv")
    assert [r.key for r in rows] == sorted(r.key for r in rows)
    assert len(rows) == 2 * 2 * 2
    assert all(r.error is None and r.ms == 0.0 for r in rows)
    with open(tmp_path / "r.csv", newline="") as fh:
        assert next(csv.reader(fh)) == CSV_COLUMNS
    back = read_csv(tmp_path / "r.csv")
    assert rows_to_csv(back) == rows_to_csv(rows)


def test_sweep_labels(tiny_corpus):
    spec = ExperimentSpec(str(tiny_corpus), ratios=[8.0], methods=["svd_wdr", "wdr_only"],
                          sweep={"svd_share": [0.25, 0.5], "passes": [4]})
    methods = sorted({r.method for r in run_experiments(spec)})
    assert methods == [
        "svd_wdr[svd_share=0.25,passes=4]",
        "svd_wdr[svd_share=0.5,passes=4]",
        "wdr_only[passes=4]",
    ]


def test_parallel_matches_serial(tiny_corpus):
    serial = run_experiments(ExperimentSpec(str(tiny_corpus), ratios=[6.0]))
    parallel = run_experiments(ExperimentSpec(str(tiny_corpus), ratios=[6.0], jobs=2))
    assert rows_to_csv(serial) == rows_to_csv(parallel)


def test_codec_failure_becomes_error_row(tiny_corpus):
    base = CompressionConfig(target_ratio=80.0, basis="measured")
    rows = run_experiments(ExperimentSpec(str(tiny_corpus), ratios=[80.0], methods=["wdr_only"], base=base))
    assert all(r.error and r.error.startswith("RatioUnreachable") for r in rows)
    line = rows_to_csv(rows).splitlines()[1].split(",")
    assert line[3:] == ["error"] * 6
    assert "error" in row_json(rows[0])


def test_identity_external_command(tmp_path):
    img = small_image(3, (32, 32))
    write_image(img, tmp_path / "x.pgm")
    row = external_baseline(tmp_path / "x.pgm", 10.0, "cp {in} {out}")
    assert row.error is None
    assert row.cr_measured == 1.0 and row.psnr_db == math.inf and row.ssim == 1.0


def test_external_code_file_sets_size(tmp_path):
    img = small_image(3, (32, 32))
    write_image(img, tmp_path / "x.pgm")
    cmd = "sh -c 'cp \"$0\" \"$1\" && head -c 64 \"$0\" > \"$2\"' {in} {out} {code}"
    row = external_baseline(tmp_path / "x.pgm", 10.0, cmd)
    assert row.cr_measured == 32 * 32 / 64


def test_missing_external_tool_is_error_row(tmp_path):
    write_image(small_image(0, (16, 16)), tmp_path / "x.pgm")
    row = external_baseline(tmp_path / "x.pgm", 10.0, "no-such-codec-binary {in} {out}")
    assert row.error.startswith("ExternalToolFailure")
    assert np.isnan(row.psnr_db)


def test_baseline_csv_rows_are_merged(tiny_corpus, tmp_path):
    extra = [ResultRow("a", "jpeg2000", 8.0, 8.1, 8.0, 12.5, 37.2, 0.91)]
    (tmp_path / "base.csv").write_text(rows_to_csv(extra))
    spec = ExperimentSpec(str(tiny_corpus), ratios=[8.0], methods=["wdr_only"], baseline_csv=str(tmp_path / "base.csv"))
    rows = run_experiments(spec)
    assert [r.method for r in rows if r.image == "a"] == ["jpeg2000", "wdr_only"]


def test_rank_sweep(camera):
    rows = sweep_rank_curve(camera, [5, 20, 512])
    assert [r.k for r in rows] == [5, 20, 512]
    assert rows[0].psnr_db < rows[1].psnr_db < rows[2].psnr_db
    assert rows[2].psnr_db == math.inf


def _svg_texts(path):
    root = ET.parse(path).getroot()
    return ["".join(t.itertext()) for t in root.iter("{http://www.w3.org/2000/svg}text")]


def test_chart_values_read_back(tiny_corpus, tmp_path):
    rows = run_experiments(ExperimentSpec(str(tiny_corpus), ratios=[6.0]))
    sweep = [SweepRow(5, 10.0, 20.5), SweepRow(10, 5.0, 24.0)]
    written = emit_charts(rows, tmp_path / "charts", sweep_rows=sweep)
    names = sorted(p.name for p in written)
    assert names == ["psnr_6.svg", "psnr_vs_k.svg", "ssim_6.svg"]
    texts = _svg_texts(tmp_path / "charts" / "psnr_6.svg")
    for r in rows:
        assert f"{r.psnr_db:.2f}" in texts
    texts = _svg_texts(tmp_path / "charts" / "ssim_6.svg")
    for r in rows:
        assert f"{r.ssim:.3f}" in texts
    assert "Date" not in (tmp_path / "charts" / "psnr_6.svg").read_text()
