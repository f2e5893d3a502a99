"""Timing of the compiled and numpy kernels on the same inputs."""

from __future__ import annotations

import time
from typing import Dict, List, Optional

import numpy as np

from . import _backend
from .direction import search_plane
from .filter import UnitParams, filter_plane
from .frame import Plane


def _best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def synthetic_plane(size: int, bit_depth: int = 8, seed: int = 0) -> Plane:
    """Smooth texture with edges and noise, so every direction shows up."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    img = 128 + 60 * np.sin(xx / 7.0 + yy / 11.0) + 30 * np.sign(np.sin((xx - yy) / 17.0))
    img += rng.normal(0, 6, img.shape)
    img *= 1 << (bit_depth - 8)
    return Plane(np.clip(np.rint(img), 0, (1 << bit_depth) - 1).astype(np.uint16), bit_depth)


def random_units(plane: Plane, dirmap, seed: int = 0) -> UnitParams:
    rng = np.random.default_rng(seed)
    shape = dirmap.directions.shape
    shift = plane.bit_depth - 8
    pri = rng.integers(0, 16, shape).astype(np.int32)
    sec = rng.choice([0, 1, 2, 4], shape).astype(np.int32)
    damp = np.full(shape, 6 + shift, np.int32)
    return UnitParams(
        dirmap.directions.astype(np.uint8),
        pri << shift,
        sec << shift,
        damp,
        np.ones(shape, np.uint8),
        shift,
    )


def run_bench(
    size: int = 512,
    bit_depth: int = 8,
    repeat: int = 3,
    seed: int = 0,
    threads: int = 1,
    backends: Optional[List[str]] = None,
) -> Dict[str, Dict[str, float]]:
    """Seconds per call (best of ``repeat``) for each backend; outputs are cross-checked."""
    plane = synthetic_plane(size, bit_depth, seed)
    names = backends or _backend.available()
    report: Dict[str, Dict[str, float]] = {}
    ref_dirs = ref_out = None
    for name in names:
        dirmap = search_plane(plane, backend=name, threads=threads)
        units = random_units(plane, dirmap, seed)
        out = filter_plane(plane, units, backend=name, threads=threads)
        if ref_dirs is None:
            ref_dirs, ref_out = dirmap.directions, out.samples
        elif not (np.array_equal(ref_dirs, dirmap.directions) and np.array_equal(ref_out, out.samples)):
            raise AssertionError(f"backend {name} disagrees with {names[0]}")
        report[name] = {
            "direction": _best_of(lambda: search_plane(plane, backend=name, threads=threads), repeat),
            "filter": _best_of(lambda: filter_plane(plane, units, backend=name, threads=threads), repeat),
        }
    return report


def format_report(report: Dict[str, Dict[str, float]], size: int) -> str:
    lines = [f"{size}x{size} plane, seconds per call (best of runs)"]
    lines.append(f"{'backend':<10} {'direction':>10} {'filter':>10}")
    for name, t in report.items():
        lines.append(f"{name:<10} {t['direction']:>10.4f} {t['filter']:>10.4f}")
    if "compiled" in report and "python" in report:
        for key in ("direction", "filter"):
            ratio = report["python"][key] / max(report["compiled"][key], 1e-9)
            lines.append(f"speedup {key}: {ratio:.1f}x")
    return "\n".join(lines)
