"""Command-line entry point: ``cdefkit <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict

from . import _backend
from .bench import format_report, run_bench
from .degrade import degrade
from .direction import search_plane
from .formats import read_sidecar, read_skip_map, write_sidecar
from .metrics import frame_psnr
from .pipeline import config_for, decode_stream, run_pipeline
from .search import PRESET_COUNTS
from .vectors import write_vectors
from .y4m import read_y4m, write_y4m


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _skip_map(args):
    return read_skip_map(args.skip_map) if args.skip_map else None


def cmd_analyze(args) -> int:
    stream = read_y4m(args.input)
    if not 0 <= args.frame < len(stream.frames):
        raise SystemExit(f"frame {args.frame} not in stream ({len(stream.frames)} frames)")
    dirmap = search_plane(stream.frames[args.frame].luma, backend=args.backend, threads=args.threads)
    f, close = _open_out(args.out)
    try:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["fb_row", "fb_col", "unit_row", "unit_col", "d", "contrast"])
        rows, cols = dirmap.directions.shape
        for r in range(rows):
            for c in range(cols):
                w.writerow([r // 8, c // 8, r, c, int(dirmap.directions[r, c]), int(dirmap.contrasts[r, c])])
    finally:
        if close:
            f.close()
    return 0


def cmd_degrade(args) -> int:
    stream = read_y4m(args.input)
    out = stream.with_frames([degrade(fr, args.qstep) for fr in stream.frames])
    write_y4m(out, args.output)
    return 0


def _fmt_db(v: float) -> str:
    return "lossless" if math.isinf(v) else f"{v:.3f}"


def cmd_psnr(args) -> int:
    a, b = read_y4m(args.a), read_y4m(args.b)
    if len(a.frames) != len(b.frames):
        raise SystemExit(f"frame counts differ: {len(a.frames)} vs {len(b.frames)}")
    f, close = _open_out(args.out)
    try:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["frame", "y", "u", "v", "all"])
        for k, (fa, fb) in enumerate(zip(a.frames, b.frames)):
            p = frame_psnr(fa, fb)
            w.writerow([k] + [_fmt_db(p[key]) if key in p else "" for key in ("y", "u", "v", "all")])
    finally:
        if close:
            f.close()
    return 0


def cmd_search(args) -> int:
    src = read_y4m(args.input)
    if args.decoded is None and args.qstep is None:
        raise SystemExit("search needs --decoded or --qstep")
    decoded = read_y4m(args.decoded).frames if args.decoded else None
    config = config_for(
        args.qstep,
        lam=args.lam,
        damping=args.damping,
        metric=args.metric,
        max_presets=args.presets_max,
        fast=args.fast,
        threads=args.threads,
        backend=args.backend,
    )
    if args.qstep is None and args.lam is None:
        print("warning: no --qstep or --lambda, using lambda = 0", file=sys.stderr)
    res = run_pipeline(src.frames, decoded, args.qstep, config, _skip_map(args))
    if args.sidecar:
        write_sidecar(res.sidecar, args.sidecar)
    if args.out:
        write_y4m(src.with_frames(res.filtered), args.out)
    if args.decoded_out:
        write_y4m(src.with_frames(res.decoded), args.decoded_out)
    for st in res.stats:
        print(
            f"frame {st.index}: psnr {_fmt_db(st.psnr_decoded['all'])} -> {_fmt_db(st.psnr_filtered['all'])} dB"
            f" presets {st.num_presets} bits {st.bits} J {st.cost:.1f}"
        )
    if args.stats:
        with open(args.stats, "w") as f:
            json.dump([_jsonable(asdict(st)) for st in res.stats], f, indent=1)
    return 0


def _jsonable(obj):
    if isinstance(obj, float) and math.isinf(obj):
        return "lossless"
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_jsonable(v) for v in obj]
    return obj


def cmd_filter(args) -> int:
    stream = read_y4m(args.input)
    car = read_sidecar(args.sidecar)
    out = decode_stream(stream.frames, car, _skip_map(args), backend=args.backend, threads=args.threads)
    write_y4m(stream.with_frames(out), args.out)
    return 0


def cmd_bench(args) -> int:
    report = run_bench(args.size, args.bit_depth, args.repeat, args.seed, args.threads)
    print(format_report(report, args.size))
    return 0


def cmd_vectors(args) -> int:
    for path in write_vectors(args.out, args.seed):
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cdefkit", description="Directional deringing filter toolkit")
    ap.add_argument("--backend", choices=_backend.available(), default=None, help="kernel backend")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, skip=False):
        p.add_argument("--threads", type=int, default=1)
        if skip:
            p.add_argument("--skip-map", dest="skip_map", metavar="PATH")

    p = sub.add_parser("analyze", help="dump the luma direction map as CSV")
    p.add_argument("input")
    p.add_argument("--frame", type=int, default=0)
    p.add_argument("--out", help="CSV path (default stdout)")
    common(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("degrade", help="DCT-quantize a stream")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--qstep", type=float, required=True)
    p.set_defaults(fn=cmd_degrade)

    p = sub.add_parser("psnr", help="per-frame PSNR of two streams")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(fn=cmd_psnr)

    p = sub.add_parser("search", help="RD preset search, writes sidecar and filtered stream")
    p.add_argument("input", help="source stream")
    p.add_argument("--decoded", help="decoded stream (else synthesised with --qstep)")
    p.add_argument("--qstep", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--damping", type=int, choices=range(3, 7))
    p.add_argument("--metric", choices=("cdef", "sse"), default="cdef")
    p.add_argument("--presets-max", dest="presets_max", type=int, choices=PRESET_COUNTS, default=8)
    p.add_argument("--fast", action="store_true", help="reduced candidate set")
    p.add_argument("--out", help="filtered stream")
    p.add_argument("--sidecar", help="parameter sidecar to write")
    p.add_argument("--decoded-out", dest="decoded_out", help="write the (synthesised) decoded stream")
    p.add_argument("--stats", help="JSON stats report")
    common(p, skip=True)
    p.set_defaults(fn=cmd_search)

    p = sub.add_parser("filter", help="apply a sidecar to a decoded stream")
    p.add_argument("input")
    p.add_argument("sidecar")
    p.add_argument("--out", required=True)
    common(p, skip=True)
    p.set_defaults(fn=cmd_filter)

    p = sub.add_parser("bench", help="time the compiled and numpy kernels")
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--bit-depth", dest="bit_depth", type=int, choices=(8, 10, 12), default=8)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("vectors", help="write golden conformance vectors")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=2024)
    p.set_defaults(fn=cmd_vectors)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        raise SystemExit("--threads must be >= 1")
    try:
        return args.fn(args)
    except BrokenPipeError:
        return 0
    except (ValueError, OSError) as exc:
        print(f"cdefkit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
