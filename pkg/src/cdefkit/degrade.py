"""Desk-scale stand-in for a coded reconstruction: 8x8 DCT quantization."""

from __future__ import annotations

import numpy as np
from scipy.fft import dctn, idctn

from .frame import Frame, Plane


def degrade_plane(plane: Plane, q_step: float) -> Plane:
    """Uniformly quantize the AC coefficients of every 8x8 block.

    DC is kept exact so flat regions survive untouched and the block mean is
    not shifted; ringing comes from the AC loss.
    """
    if q_step < 1:
        raise ValueError("q_step must be >= 1")
    h, w = plane.samples.shape
    ph, pw = (-h) % 8, (-w) % 8
    x = np.pad(plane.samples.astype(np.float64), ((0, ph), (0, pw)), mode="edge")
    ur, uc = x.shape[0] // 8, x.shape[1] // 8
    blocks = x.reshape(ur, 8, uc, 8).transpose(0, 2, 1, 3)
    coef = dctn(blocks, axes=(2, 3), norm="ortho")
    dc = coef[:, :, 0, 0].copy()
    coef = np.round(coef / q_step) * q_step
    coef[:, :, 0, 0] = dc
    rec = idctn(coef, axes=(2, 3), norm="ortho")
    rec = rec.transpose(0, 2, 1, 3).reshape(ur * 8, uc * 8)[:h, :w]
    rec = np.clip(np.rint(rec), 0, plane.peak)
    return plane.with_samples(rec.astype(np.uint16))


def degrade(frame: Frame, q_step: float) -> Frame:
    return frame.replace_planes(degrade_plane(p, q_step) for p in frame.planes)
