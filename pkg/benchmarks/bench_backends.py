"""Compare the compiled and numpy backends.

Kernel timings on a synthetic plane, then a full preset search on a
512x512 4:2:0 frame with each backend.  Outputs are checked for equality.

    python benchmarks/bench_backends.py [--size 512] [--repeat 3] [--threads 1]
"""

import argparse
import time

import numpy as np

from cdefkit import _backend
from cdefkit.bench import format_report, run_bench, synthetic_plane
from cdefkit.degrade import degrade
from cdefkit.frame import Frame
from cdefkit.pipeline import config_for, encode_frame


def search_timing(size, threads, q_step=40.0):
    luma = synthetic_plane(size, seed=1)
    cb = synthetic_plane(size // 2, seed=2)
    cr = synthetic_plane(size // 2, seed=3)
    src = Frame(luma, (cb, cr), "420")
    dec = degrade(src, q_step)
    rows, ref = [], None
    for name in _backend.available():
        t = time.perf_counter()
        res = encode_frame(src, dec, config_for(q_step, threads=threads, backend=name))
        total = time.perf_counter() - t
        if ref is None:
            ref = res
        elif res.bits != ref.bits or not np.array_equal(res.filtered.luma.samples, ref.filtered.luma.samples):
            raise AssertionError(f"backend {name} search result differs")
        rows.append((name, total, res.stats.seconds))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--skip-search", action="store_true")
    args = ap.parse_args()

    print(format_report(run_bench(args.size, repeat=args.repeat, threads=args.threads), args.size))
    if args.skip_search:
        return
    print(f"\nfull search, {args.size}x{args.size} 4:2:0, q_step 40")
    for name, total, parts in search_timing(args.size, args.threads):
        split = ", ".join(f"{k} {v:.2f}" for k, v in parts.items())
        print(f"{name:<10} {total:7.2f}s  ({split})")


if __name__ == "__main__":
    main()
