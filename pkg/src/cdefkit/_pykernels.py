"""Numpy kernels, bit-identical to the compiled extension."""

from __future__ import annotations

import numpy as np

from .direction import LINE_TABLES
from .filter import DIRECTION_OFFSETS, PRIMARY_WEIGHTS, SECONDARY_WEIGHTS

_PAD = 2


def _line_matrices():
    mats, factors = [], []
    for d in range(8):
        m = np.zeros((64, LINE_TABLES.num_lines[d]), np.int64)
        m[np.arange(64), LINE_TABLES.index[d].ravel()] = 1
        mats.append(m)
        factors.append(np.asarray(LINE_TABLES.factors[d], np.int64))
    return mats, factors


_MATS, _FACTORS = _line_matrices()


def search_directions(padded: np.ndarray, coeff_shift: int):
    """Direction search over a plane already padded to multiples of 8."""
    h, w = padded.shape
    ur, uc = h // 8, w // 8
    x = (padded.astype(np.int64) >> coeff_shift) - 128
    blocks = x.reshape(ur, 8, uc, 8).transpose(0, 2, 1, 3).reshape(-1, 64)
    scores = np.empty((blocks.shape[0], 8), np.int64)
    for d in range(8):
        partial = blocks @ _MATS[d]
        scores[:, d] = (partial * partial * _FACTORS[d]).sum(axis=1)
    # argmax keeps the first maximum, matching the strict '>' scan
    best = scores.argmax(axis=1)
    rows = np.arange(scores.shape[0])
    contrast = scores[rows, best] - scores[rows, (best + 4) % 8]
    return (
        best.astype(np.uint8).reshape(ur, uc),
        contrast.astype(np.int32).reshape(ur, uc),
        scores.astype(np.int32).reshape(ur, uc, 8),
    )


def _tap_tables():
    # per direction: primary (offset, slot) and secondary offsets, with weights
    prim = np.zeros((8, 4, 2), np.int64)
    prim_far = np.zeros(4, bool)
    sec = np.zeros((8, 8, 2), np.int64)
    sec_w = np.zeros(8, np.int64)
    for d in range(8):
        o1, o2 = DIRECTION_OFFSETS[d]
        prim[d] = [o1, (-o1[0], -o1[1]), o2, (-o2[0], -o2[1])]
        taps = []
        for sd in ((d + 2) % 8, (d + 6) % 8):
            s1, s2 = DIRECTION_OFFSETS[sd]
            taps += [s1, (-s1[0], -s1[1]), s2, (-s2[0], -s2[1])]
        sec[d] = taps
    prim_far[2:] = True
    sec_w[:] = [SECONDARY_WEIGHTS[0]] * 2 + [SECONDARY_WEIGHTS[1]] * 2 + [SECONDARY_WEIGHTS[0]] * 2 + [SECONDARY_WEIGHTS[1]] * 2
    return prim, prim_far, sec, sec_w


_PRIM, _PRIM_FAR, _SEC, _SEC_W = _tap_tables()


def _msb(a):
    out = np.zeros(a.shape, np.int64)
    pos = a > 0
    out[pos] = np.frexp(a[pos].astype(np.float64))[1] - 1
    return out


def _constrain(diff, strength, shift):
    mag = np.abs(diff)
    v = np.minimum(mag, np.maximum(0, strength - (mag >> shift)))
    v = np.where(strength > 0, v, 0)
    return np.where(diff >= 0, v, -v)


def filter_plane_rows(src, dirs, pri, sec, damp, enabled, coeff_shift, unit_row0):
    """Filter the unit rows [unit_row0, unit_row0 + dirs.shape[0]) of src."""
    src = np.asarray(src)
    h, w = src.shape
    nr = dirs.shape[0]
    r0 = unit_row0 * 8
    r1 = min(h, r0 + nr * 8)
    band = src[r0:r1].astype(np.int64)
    out = band.copy()
    if not np.any(enabled):
        return out.astype(np.uint16)

    padded = np.full((h + 2 * _PAD, w + 2 * _PAD), -1, np.int64)
    padded[_PAD:-_PAD, _PAD:-_PAD] = src

    def per_pixel(a):
        a = np.repeat(np.repeat(np.asarray(a, np.int64), 8, axis=0), 8, axis=1)
        return a[: r1 - r0, :w]

    en = per_pixel(enabled).astype(bool)
    ii, jj = np.nonzero(en)
    d = per_pixel(dirs)[ii, jj]
    ps = per_pixel(pri)[ii, jj]
    ss = per_pixel(sec)[ii, jj]
    dm = per_pixel(damp)[ii, jj]
    p_shift = np.where(ps > 0, dm - _msb(ps), 0)
    s_shift = np.where(ss > 0, dm - _msb(ss), 0)
    parity = (ps >> coeff_shift) & 1
    near = np.where(parity == 1, PRIMARY_WEIGHTS[1][0], PRIMARY_WEIGHTS[0][0])
    far = np.where(parity == 1, PRIMARY_WEIGHTS[1][1], PRIMARY_WEIGHTS[0][1])

    gi = ii + r0 + _PAD
    gj = jj + _PAD
    x = padded[gi, gj]
    total = np.zeros_like(x)
    lo = x.copy()
    hi = x.copy()

    def visit(off, strength, shift, weight):
        nonlocal total
        p = padded[gi + off[:, 0], gj + off[:, 1]]
        valid = p >= 0
        c = _constrain(p - x, strength, shift)
        total = total + np.where(valid, weight * c, 0)
        np.minimum(lo, np.where(valid, p, lo), out=lo)
        np.maximum(hi, np.where(valid, p, hi), out=hi)

    for t in range(4):
        visit(_PRIM[d, t], ps, p_shift, far if _PRIM_FAR[t] else near)
    for t in range(8):
        visit(_SEC[d, t], ss, s_shift, _SEC_W[t])

    mag = (np.abs(total) + 8) >> 4
    y = x + np.where(total >= 0, mag, -mag)
    out[ii, jj] = np.clip(y, lo, hi)
    return out.astype(np.uint16)


def filter_plane(src, dirs, pri, sec, damp, enabled, coeff_shift):
    return filter_plane_rows(src, dirs, pri, sec, damp, enabled, coeff_shift, 0)
