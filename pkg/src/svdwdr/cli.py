"""Command-line front end: compress, decompress, eval, sweep, bench.

Exit codes: 0 success, 1 usage error, 2 I/O failure (including an empty
corpus), 3 codec error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .bench import ExperimentSpec, fmt, row_json, rows_to_csv, run_experiments, sweep_rank_curve, sweep_to_csv
from .errors import CodecError, EmptyCorpus, IoFailure
from .image_io import load_image, write_image
from .metrics import quality
from .pipeline import BASES, MODES, CompressionConfig, compress, decompress, load_container, save_container
from .wavelet import WAVELETS
from .wdr_codec import RECONSTRUCTIONS, T0_RULES, WdrParams

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_CODEC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_codec_flags(p, with_ratio=True):
    g = p.add_argument_group("codec parameters")
    if with_ratio:
        g.add_argument("--ratio", type=float, help="target compression ratio, e.g. 40 for 40:1")
        g.add_argument("--k", type=int, help="explicit number of singular values kept (overrides --svd-share)")
    g.add_argument("--mode", choices=MODES, default="svd_wdr", help="pipeline variant (default: svd_wdr)")
    g.add_argument("--passes", type=int, default=9, help="maximum WDR bit-plane passes (default: 9)")
    g.add_argument("--wavelet", choices=WAVELETS, default="haar", help="wavelet family (default: haar)")
    g.add_argument("--levels", type=int, default=3, help="DWT decomposition depth (default: 3)")
    g.add_argument("--include-approx", action="store_true",
                   help="WDR-code the approximation band instead of storing it as float32")
    g.add_argument("--svd-share", type=float, default=0.5,
                   help="exponent of the target ratio assigned to the SVD stage (default: 0.5)")
    g.add_argument("--basis", choices=BASES, default="product",
                   help="ratio the target constrains: product = cr_svd*cr_wdr, measured = pixels/file bytes")
    g.add_argument("--t0-rule", choices=T0_RULES, default="max", help="initial threshold rule (default: max)")
    g.add_argument("--t0", type=float, help="explicit initial threshold (overrides --t0-rule)")
    g.add_argument("--budget", type=int, help="hard cap on WDR payload bytes")
    g.add_argument("--requantize-svd", action="store_true",
                   help="round the rank-k image to 8 bits before the DWT")


def _config_from(args, ratio=None, mode=None) -> CompressionConfig:
    try:
        wdr = WdrParams(passes=args.passes, t0_rule=args.t0_rule, t0=args.t0, budget_bytes=args.budget)
        return CompressionConfig(
            target_ratio=ratio if ratio is not None else getattr(args, "ratio", None),
            svd_rank=getattr(args, "k", None),
            svd_share=args.svd_share,
            wavelet=args.wavelet,
            levels=args.levels,
            include_approx=args.include_approx,
            wdr=wdr,
            mode=mode or args.mode,
            basis=args.basis,
            requantize_svd=args.requantize_svd,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="svdwdr", description="Hybrid SVD + wavelet difference reduction image codec.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compress", help="encode a PGM/PNG image into an .swdr container")
    p.add_argument("input", help="8-bit grayscale PGM or PNG")
    p.add_argument("output", help="container file to write")
    _add_codec_flags(p)
    p.add_argument("--json", action="store_true", help="print the ratios as a JSON object")

    p = sub.add_parser("decompress", help="decode an .swdr container into a PGM")
    p.add_argument("input", help=".swdr container")
    p.add_argument("output", help="PGM file to write")
    p.add_argument("--reconstruction", choices=RECONSTRUCTIONS, default="floor",
                   help="where significant coefficients are placed in their interval (default: floor)")

    p = sub.add_parser("eval", help="print MSE, PSNR and SSIM between two images")
    p.add_argument("a", help="reference image")
    p.add_argument("b", help="test image")
    p.add_argument("--json", action="store_true", help="print a JSON object instead of key=value text")

    p = sub.add_parser("sweep", help="PSNR of the SVD-only pipeline against the rank k")
    p.add_argument("--image", required=True, help="8-bit grayscale PGM or PNG")
    p.add_argument("--ks", type=_int_list, required=True, help="comma-separated ranks, e.g. 5,10,20,50,100")
    p.add_argument("--out", help="CSV file to write (default: standard output)")
    p.add_argument("--charts", help="directory for psnr_vs_k.svg")
    p.add_argument("--json", action="store_true", help="print one JSON object per row")

    p = sub.add_parser("bench", help="run the method x ratio grid over an image corpus")
    p.add_argument("--corpus", required=True, help="directory of .pgm/.png images")
    p.add_argument("--ratios", type=_float_list, default=[20.0, 40.0, 80.0],
                   help="comma-separated target ratios (default: 20,40,80)")
    p.add_argument("--methods", default="svd_wdr,wdr_only",
                   help="comma-separated subset of svd_wdr,wdr_only,svd_only,external (default: svd_wdr,wdr_only)")
    p.add_argument("--baseline-cmd", help="external codec command template with {in} {out} {bytes} [{code}]")
    p.add_argument("--baseline-csv", help="precomputed baseline rows in the bench CSV layout")
    p.add_argument("--out", required=True, help="results CSV")
    p.add_argument("--charts", help="directory for SVG charts")
    p.add_argument("--sweep-share", type=_float_list, help="also sweep svd_share over these values")
    p.add_argument("--sweep-passes", type=_int_list, help="also sweep the WDR pass count over these values")
    p.add_argument("--sweep-k", type=_int_list, help="also sweep an explicit SVD rank over these values")
    p.add_argument("--reconstruction", choices=RECONSTRUCTIONS, default="floor",
                   help="decoder reconstruction rule (default: floor)")
    p.add_argument("--timing", action="store_true",
                   help="record wall time in the ms column (otherwise 0, keeping output reproducible)")
    p.add_argument("--jobs", type=int, default=1, help="images processed in parallel (default: 1)")
    p.add_argument("--json", action="store_true", help="print one JSON object per result row")
    _add_codec_flags(p, with_ratio=False)
    return parser


def _print_json_lines(records):
    for rec in records:
        print(json.dumps(rec, sort_keys=False))


def _cmd_compress(args):
    img = load_image(args.input)
    cfg = _config_from(args)
    container = compress(img, cfg)
    save_container(container, args.output)
    ratios = {k: fmt(v) for k, v in container.ratios.items()}
    if args.json:
        print(json.dumps({"k": container.k, "passes": container.pass_count, **ratios}))
    else:
        print(" ".join([f"k={container.k}", f"passes={container.pass_count}"] + [f"{k}={v}" for k, v in ratios.items()]))
    if container.unreachable:
        print("warning: requested SVD ratio unreachable; kept k=1", file=sys.stderr)


def _cmd_decompress(args):
    container = load_container(args.input)
    write_image(decompress(container, args.reconstruction), args.output)


def _cmd_eval(args):
    q = quality(load_image(args.a), load_image(args.b))
    rec = {"mse": fmt(q.mse), "psnr": fmt(q.psnr), "ssim": fmt(q.ssim)}
    if args.json:
        print(json.dumps(rec))
    else:
        print(" ".join(f"{k}={v}" for k, v in rec.items()))


def _cmd_sweep(args):
    rows = sweep_rank_curve(load_image(args.image), args.ks)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(sweep_to_csv(rows))
    if args.json:
        _print_json_lines(row_json(r) for r in rows)
    elif not args.out:
        sys.stdout.write(sweep_to_csv(rows))
    if args.charts:
        from .plotting import emit_charts

        emit_charts([], args.charts, sweep_rows=rows)


def _cmd_bench(args):
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    sweep = {}
    if args.sweep_share:
        sweep["svd_share"] = args.sweep_share
    if args.sweep_passes:
        sweep["passes"] = args.sweep_passes
    if args.sweep_k:
        sweep["k"] = args.sweep_k
    base = _config_from(args, ratio=max(args.ratios) if args.ratios else 20.0, mode="svd_wdr")
    try:
        spec = ExperimentSpec(
            corpus_dir=args.corpus,
            ratios=args.ratios,
            methods=methods,
            base=base,
            sweep=sweep,
            baseline_cmd=args.baseline_cmd,
            baseline_csv=args.baseline_csv,
            reconstruction=args.reconstruction,
            timing=args.timing,
            jobs=args.jobs,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = run_experiments(spec, out_csv=args.out)
    if args.json:
        _print_json_lines(row_json(r) for r in rows)
    if args.charts:
        from .plotting import emit_charts

        emit_charts(rows, args.charts)
    failed = sum(1 for r in rows if r.error)
    print(f"{len(rows)} rows written to {args.out} ({failed} failed)", file=sys.stderr)


COMMANDS = {
    "compress": _cmd_compress,
    "decompress": _cmd_decompress,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"svdwdr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IoFailure, EmptyCorpus) as exc:
        print(f"svdwdr: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"svdwdr: {exc}", file=sys.stderr)
        return EXIT_IO
    except CodecError as exc:
        print(f"svdwdr: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CODEC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
