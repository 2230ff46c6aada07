"""``wsmquant`` command line: quantize, bench, scaling."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from wsmquant import bench
from wsmquant.cluster_core import KRangeError
from wsmquant.imageio import PPMError, error_image, load_ppm, map_pixels, save_ppm, write_palette
from wsmquant.methods import METHODS, MethodParams, UnknownMethodError, run_method
from wsmquant.metrics import mse, psnr

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_METHOD = 4
EXIT_K_RANGE = 5
EXIT_CONFIG = 6
EXIT_CELL = 7


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _kv_pairs(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise CliError(EXIT_CONFIG, f"expected key=value, got {item!r}")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _params(items) -> MethodParams:
    try:
        return MethodParams().updated(**_kv_pairs(items))
    except (KeyError, ValueError) as exc:
        raise CliError(EXIT_CONFIG, f"bad method parameter: {exc}") from exc


def _load(path):
    try:
        return load_ppm(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc.strerror or exc}") from exc
    except PPMError as exc:
        raise CliError(EXIT_IO, f"cannot decode {path}: {exc}") from exc


def _write(path, fn):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        fn(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc.strerror or exc}") from exc


def _run(method, image, K, seed, params):
    try:
        return run_method(method, image, K, seed, params)
    except UnknownMethodError as exc:
        raise CliError(EXIT_METHOD, exc.args[0]) from exc
    except KRangeError as exc:
        raise CliError(EXIT_K_RANGE, str(exc)) from exc


def cmd_quantize(args) -> int:
    image = _load(args.input)
    params = _params(args.param)
    palette, report = _run(args.method, image, args.k, args.seed, params)
    quantized = map_pixels(image, palette)
    _write(args.output, lambda p: save_ppm(quantized, p))
    if args.palette:
        _write(args.palette, lambda p: write_palette(palette.centers, p))
    if args.error_image:
        _write(args.error_image, lambda p: save_ppm(error_image(image, quantized), p))
    err = mse(image, quantized)
    print(f"method={args.method} K={args.k} seed={args.seed}")
    print(f"mse={err:.6f}")
    print(f"psnr={psnr(err):.4f}")
    print(f"time_ms={report.elapsed_ms:.3f}")
    print(f"iterations={report.iterations}")
    return EXIT_OK


def _bench_overrides(args) -> dict:
    out = _kv_pairs(args.set)
    for name in ("images", "methods", "k_values", "runs", "base_seed", "output", "threads", "plots"):
        value = getattr(args, name, None)
        if value is not None:
            out[name] = ",".join(value) if isinstance(value, list) else str(value)
    if args.serial_timing:
        out["serial_timing"] = "true"
    return out


def cmd_bench(args) -> int:
    overrides = _bench_overrides(args)
    try:
        if args.config:
            cfg = bench.load_config(args.config, overrides)
        else:
            cfg = bench.config_from_mapping(overrides)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read config {args.config}: {exc.strerror or exc}") from exc
    except (bench.ConfigError, ValueError, TypeError) as exc:
        raise CliError(EXIT_CONFIG, f"invalid config: {exc}") from exc
    try:
        results = bench.run_bench(cfg)
    except bench.CellError as exc:
        code = EXIT_IO if isinstance(exc.cause, (OSError, PPMError)) else EXIT_CELL
        raise CliError(code, str(exc)) from exc
    try:
        paths = bench.write_reports(cfg, results)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write reports: {exc}") from exc
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return EXIT_OK


def cmd_scaling(args) -> int:
    image = _load(args.input)
    params = _params(args.param)
    try:
        ks = bench.parse_k_range(args.k_range)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc
    if not ks:
        raise CliError(EXIT_K_RANGE, "empty K range")
    try:
        rows = bench.run_scaling(image, args.method, ks, args.seed, params, args.repeats)
    except UnknownMethodError as exc:
        raise CliError(EXIT_METHOD, exc.args[0]) from exc
    except KRangeError as exc:
        raise CliError(EXIT_K_RANGE, str(exc)) from exc
    text = bench.scaling_csv(rows)
    if args.output:
        _write(args.output, lambda p: Path(p).write_text(text))
    else:
        sys.stdout.write(text)
    if args.plot:
        from wsmquant import plots

        _write(args.plot, lambda p: plots.scaling_figure(rows, p, f"{args.method} on {Path(args.input).stem}"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wsmquant", description="Color quantization by weighted sort-means and baselines.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quantize", help="quantize one PPM image")
    q.add_argument("input")
    q.add_argument("--method", default="wsm", help=f"one of: {', '.join(METHODS)}")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("-o", "--output", required=True)
    q.add_argument("--palette", help="write palette text file")
    q.add_argument("--error-image", help="write error image PPM")
    q.add_argument("--param", action="append", metavar="KEY=VALUE", help="method parameter override")
    q.set_defaults(func=cmd_quantize)

    b = sub.add_parser("bench", help="run the experiment grid")
    b.add_argument("--config", help="flat key=value config file")
    b.add_argument("--images", nargs="+")
    b.add_argument("--methods", nargs="+")
    b.add_argument("--k-values", dest="k_values", nargs="+")
    b.add_argument("--runs", type=int)
    b.add_argument("--base-seed", dest="base_seed", type=int)
    b.add_argument("--output")
    b.add_argument("--threads", type=int)
    b.add_argument("--plots", help="directory for MSE/time figures")
    b.add_argument("--serial-timing", action="store_true", help="run cells one at a time")
    b.add_argument("--set", action="append", metavar="KEY=VALUE", help="any config key")
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("scaling", help="time one method across a K sweep")
    s.add_argument("input")
    s.add_argument("--method", default="wsm")
    s.add_argument("--k-range", default="2:256")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--repeats", type=int, default=1)
    s.add_argument("-o", "--output")
    s.add_argument("--plot", help="write scaling figure")
    s.add_argument("--param", action="append", metavar="KEY=VALUE")
    s.set_defaults(func=cmd_scaling)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"wsmquant: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
