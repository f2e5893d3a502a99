"""PSNR in dB; identical inputs give +inf (lossless)."""

from __future__ import annotations

import math
from typing import Dict

import numpy as np

from .frame import Frame, Plane


def mse(a: Plane, b: Plane) -> float:
    if a.samples.shape != b.samples.shape:
        raise ValueError("planes differ in size")
    d = a.samples.astype(np.int64) - b.samples.astype(np.int64)
    return float(np.mean(d * d))


def psnr_from_mse(err: float, peak: int) -> float:
    if err == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def psnr(a: Plane, b: Plane) -> float:
    if a.bit_depth != b.bit_depth:
        raise ValueError("planes differ in bit depth")
    return psnr_from_mse(mse(a, b), a.peak)


def is_lossless(value: float) -> bool:
    return math.isinf(value)


def frame_psnr(a: Frame, b: Frame) -> Dict[str, float]:
    """Per-plane PSNR plus 'all', pooled over every sample of the frame."""
    names = ("y", "u", "v")
    out = {}
    sq, count = 0.0, 0
    for name, pa, pb in zip(names, a.planes, b.planes):
        e = mse(pa, pb)
        out[name] = psnr_from_mse(e, pa.peak)
        sq += e * pa.samples.size
        count += pa.samples.size
    out["all"] = psnr_from_mse(sq / count, a.luma.peak)
    return out
