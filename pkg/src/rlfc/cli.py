"""Command-line front end: encode, decode, render, stats, sweep, synth, serve.

Exit codes: 0 ok, 2 usage, 3 I/O, 4 format, 5 verification mismatch.
"""

import argparse
import dataclasses
import sys
import time

import numpy as np

from . import decoder, encoder, metrics, renderer
from .errors import FormatError, ManifestError, VerificationError
from .hierarchy import (
    EncodingParams,
    FilterSpec,
    ROOT_CODECS,
    VALID_BLOCK_SIZES,
)
from .lightfield import (
    SyntheticSpec,
    load_manifest,
    save_grid,
    synthesize_lightfield,
)

SWEEP_PARAMS = ("block_threshold", "block_size", "tree_height", "quant_shift")

PROG = "rlfc"


class UsageError(Exception):
    pass


def _pair(text, what):
    """Parse 'AxB' into a pair of positive ints."""
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise UsageError(f"{what} must look like 8x8, got {text!r}")
    try:
        a, b = int(parts[0]), int(parts[1])
    except ValueError:
        raise UsageError(f"{what} must look like 8x8, got {text!r}")
    if a < 1 or b < 1:
        raise UsageError(f"{what} components must be positive, got {text!r}")
    return a, b


def _params_from_args(args):
    try:
        return EncodingParams(
            tree_height=args.tree_height,
            block_size=args.block_size,
            pixel_threshold=args.pixel_threshold,
            block_threshold=args.block_threshold,
            quant_shift=args.quant_shift,
            filter=FilterSpec(kind=args.filter, sigma=args.sigma),
            root_codec=args.root_codec,
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def _add_param_flags(sub):
    sub.add_argument("--tree-height", type=int, default=3, metavar="H",
                     help="pyramid levels above the views (default 3)")
    sub.add_argument("--block-size", type=int, default=4, metavar="B",
                     choices=VALID_BLOCK_SIZES,
                     help="coded block edge in pixels (default 4)")
    sub.add_argument("--pixel-threshold", type=int, default=4, metavar="TP",
                     help="zero residuals with magnitude below this (default 4)")
    sub.add_argument("--block-threshold", type=int, default=80, metavar="TB",
                     help="drop blocks whose energy is below this (default 80)")
    sub.add_argument("--quant-shift", type=int, default=2, metavar="S",
                     help="residual quantizer shift (default 2)")
    sub.add_argument("--filter", default="gaussian",
                     choices=("uniform", "gaussian"),
                     help="view averaging filter (default gaussian)")
    sub.add_argument("--sigma", type=float, default=0.7,
                     help="gaussian filter width (default 0.7)")
    sub.add_argument("--root-codec", default="png", choices=ROOT_CODECS,
                     help="codec for the coarsest views (default png)")


def _load_stream(path):
    with open(path, "rb") as fh:
        return fh.read()


def cmd_encode(args):
    lf = load_manifest(args.manifest)
    params = _params_from_args(args)
    stream, report = encoder.compress(lf, params)
    with open(args.output, "wb") as fh:
        fh.write(stream)
    if args.verify:
        out = decoder.decode_all(decoder.init(stream))
        if not np.array_equal(out.rgb, lf.rgb):
            raise VerificationError(
                "decoded views differ from input (lossy settings?)")
    print(f"{args.output}: {report.stream_bytes} bytes, "
          f"{report.bpp_total:.4f} bpp, {report.encode_seconds:.2f} s")
    return 0


def cmd_decode(args):
    state = decoder.init(_load_stream(args.stream))
    lf = decoder.decode_all(state)
    manifest = save_grid(lf, args.output)
    print(f"{manifest}: {lf.s_count}x{lf.t_count} views of "
          f"{lf.width}x{lf.height}")
    return 0


def _parse_pose(text, size):
    """Pose syntax: 's,t' | 's,t,focal_z' | 'ex,ey,ez,lx,ly,lz[,fov]'."""
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"pose components must be numbers, got {text!r}")
    w, h = size
    if len(vals) == 2:
        return renderer.SlabPose(vals[0], vals[1], w, h)
    if len(vals) == 3:
        return renderer.SlabPose(vals[0], vals[1], w, h, focal_z=vals[2])
    if len(vals) in (6, 7):
        fov = vals[6] if len(vals) == 7 else 60.0
        try:
            return renderer.CameraPose(eye=tuple(vals[0:3]),
                                       look=tuple(vals[3:6]),
                                       fov_deg=fov, width=w, height=h)
        except ValueError as exc:
            raise UsageError(str(exc))
    raise UsageError("pose needs 2, 3, 6, or 7 comma-separated numbers")


def cmd_render(args):
    from PIL import Image

    size = _pair(args.size, "--size")
    pose = _parse_pose(args.pose, size)
    state = decoder.init(_load_stream(args.stream))
    if not 0 <= args.level <= state.header.tree_height:
        raise UsageError(
            f"--level must be in [0, {state.header.tree_height}]")
    img = renderer.render_view(state, pose, stop_level=args.level)
    Image.fromarray(img).save(args.output)
    print(f"{args.output}: {size[0]}x{size[1]} at level {args.level}")
    return 0


def cmd_stats(args):
    ref = load_manifest(args.against)
    data = _load_stream(args.stream)
    state = decoder.init(data)
    out = decoder.decode_all(state)
    report = metrics.psnr_ycocg(ref, out)
    report = dataclasses.replace(
        report, bpp=metrics.bpp(len(data), ref.s_count, ref.t_count,
                                ref.width, ref.height))
    print(metrics.report_json(report))
    return 0


def cmd_sweep(args):
    if args.param not in SWEEP_PARAMS:
        raise UsageError(
            f"--param must be one of {', '.join(SWEEP_PARAMS)}")
    try:
        values = [int(v) for v in args.values.split(",") if v != ""]
    except ValueError:
        raise UsageError(f"--values must be comma-separated ints,"
                         f" got {args.values!r}")
    if not values:
        raise UsageError("--values must not be empty")
    lf = load_manifest(args.manifest)
    base = _params_from_args(args)
    rows = []
    for value in values:
        try:
            params = dataclasses.replace(base, **{args.param: value})
        except ValueError as exc:
            raise UsageError(str(exc))
        stream, _ = encoder.compress(lf, params)
        report = metrics.psnr_ycocg(lf, decoder.decode_all(decoder.init(stream)))
        report = dataclasses.replace(
            report, bpp=metrics.bpp(len(stream), lf.s_count, lf.t_count,
                                    lf.width, lf.height))
        rows.append((value, report))
        print(f"{args.param}={value}: bpp={report.bpp:.4f} "
              f"psnr_ycocg={report.psnr_ycocg:.2f}")
    metrics.write_sweep_csv(args.output, rows)
    print(f"{args.output}: {len(rows)} rows")
    return 0


def cmd_synth(args):
    grid = _pair(args.grid, "--grid")
    size = _pair(args.size, "--size")
    spec = SyntheticSpec(s_count=grid[0], t_count=grid[1],
                         width=size[0], height=size[1], seed=args.seed)
    t0 = time.perf_counter()
    lf = synthesize_lightfield(spec)
    manifest = save_grid(lf, args.output)
    print(f"{manifest}: {grid[0]}x{grid[1]} views of {size[0]}x{size[1]}, "
          f"seed {args.seed}, {time.perf_counter() - t0:.2f} s")
    return 0


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    state = decoder.init(_load_stream(args.stream))
    app = create_app(state, max_size=args.max_size)
    print(f"serving on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog=PROG, description="Random-access light field codec.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="compress a view grid into a stream")
    p.add_argument("manifest", help="manifest.json of the input grid")
    p.add_argument("-o", "--output", required=True, metavar="OUT.rlfc")
    _add_param_flags(p)
    p.add_argument("--verify", action="store_true",
                   help="re-decode and require bit-exact views")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode every view to PNGs + manifest")
    p.add_argument("stream", help="compressed .rlfc file")
    p.add_argument("-o", "--output", required=True, metavar="DIR")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("render", help="render a novel view to a PNG")
    p.add_argument("stream")
    p.add_argument("--pose", required=True,
                   help="'s,t' | 's,t,focal_z' | 'ex,ey,ez,lx,ly,lz[,fov]'")
    p.add_argument("--size", required=True, metavar="WxH")
    p.add_argument("--level", type=int, default=0,
                   help="progressive level, 0 = full detail")
    p.add_argument("-o", "--output", required=True, metavar="IMG.png")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("stats", help="compare a stream against its source")
    p.add_argument("stream")
    p.add_argument("--against", required=True, metavar="MANIFEST")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sweep", help="encode at several parameter values")
    p.add_argument("manifest")
    p.add_argument("--param", required=True,
                   help=f"one of {', '.join(SWEEP_PARAMS)}")
    p.add_argument("--values", required=True, metavar="A,B,C")
    p.add_argument("-o", "--output", required=True, metavar="REPORT.csv")
    _add_param_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="generate a synthetic test grid")
    p.add_argument("--grid", default="8x8", metavar="SxT")
    p.add_argument("--size", default="64x64", metavar="WxH")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("-o", "--output", required=True, metavar="DIR")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="serve the stream over HTTP")
    p.add_argument("stream")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--max-size", type=int, default=1024,
                   help="largest renderable edge in pixels")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except (ManifestError, FormatError) as exc:
        print(f"{PROG}: format error: {exc}", file=sys.stderr)
        return 4
    except VerificationError as exc:
        print(f"{PROG}: verification mismatch: {exc}", file=sys.stderr)
        return 5
    except OSError as exc:
        print(f"{PROG}: i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
