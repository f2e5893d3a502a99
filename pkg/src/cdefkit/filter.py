"""Non-linear directional low-pass filter.

All arithmetic is integer.  Weights are in 1/16 units; the correction is
rounded half away from zero and the result clamped to the range spanned by
the centre pixel and every in-frame tap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .frame import UNIT, UNITS_PER_FB, Frame, Plane

# primary tap offsets (row, col): near, far; secondary taps reuse the
# offsets of directions d+2 and d-2
DIRECTION_OFFSETS: Tuple[Tuple[Tuple[int, int], Tuple[int, int]], ...] = (
    ((-1, 1), (-2, 2)),
    ((0, 1), (-1, 2)),
    ((0, 1), (0, 2)),
    ((0, 1), (1, 2)),
    ((1, 1), (2, 2)),
    ((1, 0), (2, 1)),
    ((1, 0), (2, 0)),
    ((1, 0), (2, -1)),
)

# (near, far) weights / 16
PRIMARY_WEIGHTS = {0: (4, 2), 1: (3, 3)}  # keyed by strength parity
SECONDARY_WEIGHTS = (2, 1)


def floor_log2(v: int) -> int:
    return int(v).bit_length() - 1


def constraint(diff: int, strength: int, damping: int) -> int:
    """Limit a neighbour difference: passes small diffs, fades large ones to 0."""
    if strength == 0:
        return 0
    shift = damping - floor_log2(strength)
    if shift < 0:
        raise ValueError(f"damping {damping} below log2 of strength {strength}")
    mag = abs(diff)
    v = min(mag, max(0, strength - (mag >> shift)))
    return v if diff >= 0 else -v


def adjust_primary_strength(strength: int, contrast: int) -> int:
    """Scale luma primary strength by the block's directional contrast."""
    if contrast < (1 << 10):
        return 0
    coarse = contrast >> 16
    level = min(floor_log2(coarse), 12) if coarse else 0
    return (strength * (4 + level) + 8) >> 4


@dataclass(frozen=True)
class Tap:
    offset: Tuple[int, int]
    weight: int


@dataclass(frozen=True)
class TapSet:
    direction: int
    parity: int
    primary: Tuple[Tap, ...]
    secondary: Tuple[Tap, ...]

    def all_taps(self):
        return self.primary + self.secondary


def _mirror(taps):
    out = []
    for (di, dj), w in taps:
        out.append(Tap((di, dj), w))
        out.append(Tap((-di, -dj), w))
    return tuple(out)


def taps_for(direction: int, parity: int) -> TapSet:
    if not 0 <= direction < 8:
        raise ValueError(f"direction {direction} out of range")
    near, far = PRIMARY_WEIGHTS[parity & 1]
    o1, o2 = DIRECTION_OFFSETS[direction]
    primary = _mirror([(o1, near), (o2, far)])
    snear, sfar = SECONDARY_WEIGHTS
    secondary = []
    for sd in ((direction + 2) % 8, (direction + 6) % 8):
        s1, s2 = DIRECTION_OFFSETS[sd]
        secondary += [(s1, snear), (s2, sfar)]
    return TapSet(direction, parity & 1, primary, _mirror(secondary))


@dataclass(frozen=True)
class BlockParams:
    """Strengths as applied (bit-depth scaled), damping and direction for one unit."""

    pri: int
    sec: int
    damping: int
    direction: int
    coeff_shift: int = 0
    enabled: bool = True

    @property
    def parity(self) -> int:
        return (self.pri >> self.coeff_shift) & 1


def round_sixteenths(total: int) -> int:
    mag = (abs(total) + 8) >> 4
    return mag if total >= 0 else -mag


def filter_pixel(x: int, neighbour, params: BlockParams) -> int:
    """Filter one pixel.

    ``neighbour(di, dj)`` returns the pixel at that offset, or None when it
    lies outside the frame.
    """
    if not params.enabled:
        return x
    taps = taps_for(params.direction, params.parity)
    total = 0
    lo = hi = x
    for group, strength in ((taps.primary, params.pri), (taps.secondary, params.sec)):
        for tap in group:
            p = neighbour(*tap.offset)
            if p is None:
                continue
            total += tap.weight * constraint(p - x, strength, params.damping)
            lo = min(lo, p)
            hi = max(hi, p)
    y = x + round_sixteenths(total)
    return min(hi, max(lo, y))


@dataclass
class UnitParams:
    """Per 8x8 unit filter parameters for one plane, ready for a kernel."""

    directions: np.ndarray  # uint8
    pri: np.ndarray  # int32, scaled
    sec: np.ndarray  # int32, scaled
    damping: np.ndarray  # int32
    enabled: np.ndarray  # uint8
    coeff_shift: int

    @classmethod
    def disabled(cls, unit_rows: int, unit_cols: int, coeff_shift: int = 0) -> "UnitParams":
        z = np.zeros((unit_rows, unit_cols), np.int32)
        return cls(z.astype(np.uint8), z, z.copy(), z.copy(), z.astype(np.uint8), coeff_shift)

    def block(self, r: int, c: int) -> BlockParams:
        return BlockParams(
            int(self.pri[r, c]),
            int(self.sec[r, c]),
            int(self.damping[r, c]),
            int(self.directions[r, c]),
            self.coeff_shift,
            bool(self.enabled[r, c]),
        )

    def validate(self) -> None:
        on = self.enabled.astype(bool)
        for s in (self.pri, self.sec):
            pos = on & (s > 0)
            if np.any(self.damping[pos] < _msb(s[pos])):
                raise ValueError("damping below log2 of strength")


def _msb(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, np.int64)
    out = np.full(a.shape, -1, np.int64)
    pos = a > 0
    out[pos] = np.frexp(a[pos].astype(np.float64))[1] - 1
    return out


def adjust_primary_array(strength8: np.ndarray, contrast: np.ndarray) -> np.ndarray:
    """Vectorised adjust_primary_strength."""
    strength8 = np.asarray(strength8, np.int64)
    contrast = np.asarray(contrast, np.int64)
    coarse = contrast >> 16
    level = np.where(coarse > 0, np.minimum(_msb(coarse), 12), 0)
    adj = (strength8 * (4 + level) + 8) >> 4
    return np.where(contrast >= (1 << 10), adj, 0)


@dataclass(frozen=True)
class PlaneSetting:
    """Effective per-plane values of one preset (strengths already bit-depth scaled)."""

    pri: int
    sec: int
    damping: int
    skip: bool
    active: bool = True


def chroma_unit_geometry(luma_units: Tuple[int, int], chroma_shape, shift):
    """Map chroma 8x8 units to luma units.

    Returns (luma_row, luma_col) index arrays of the luma unit holding each
    chroma unit's top-left collocated sample, plus (row_span, col_span) in
    luma units covered by one chroma unit.
    """
    ss_x, ss_y = shift
    cr = -(-chroma_shape[0] // UNIT)
    cc = -(-chroma_shape[1] // UNIT)
    rows = (np.arange(cr) << ss_y)
    cols = (np.arange(cc) << ss_x)
    rows = np.minimum(rows, luma_units[0] - 1)
    cols = np.minimum(cols, luma_units[1] - 1)
    return rows, cols, (1 << ss_y, 1 << ss_x)


def pool_coded(coded: np.ndarray, span: Tuple[int, int], out_shape) -> np.ndarray:
    """OR luma unit flags over the footprint of each chroma unit."""
    sr, sc = span
    r, c = out_shape
    padded = np.zeros((r * sr, c * sc), bool)
    h = min(coded.shape[0], r * sr)
    w = min(coded.shape[1], c * sc)
    padded[:h, :w] = coded[:h, :w]
    return padded.reshape(r, sr, c, sc).any(axis=(1, 3))


def resolve_units(
    settings: Sequence[PlaneSetting],
    unit_preset: np.ndarray,
    unit_coded: np.ndarray,
    directions: np.ndarray,
    contrasts: Optional[np.ndarray],
    coeff_shift: int,
) -> UnitParams:
    """Expand per-preset settings to per-unit arrays.

    unit_preset holds the preset index of each unit's filter block, or -1 when
    the filter block carries no residual (filtering off).  contrasts is only
    given for luma, where it drives the primary strength adjustment.
    """
    n = len(settings)
    pri = np.array([s.pri for s in settings] + [0], np.int64)
    sec = np.array([s.sec for s in settings] + [0], np.int64)
    damp = np.array([s.damping for s in settings] + [0], np.int64)
    skip = np.array([s.skip for s in settings] + [False], bool)
    active = np.array([s.active for s in settings] + [False], bool)
    idx = np.where(unit_preset < 0, n, unit_preset)

    enabled = active[idx] & (unit_preset >= 0) & (unit_coded | skip[idx])
    upri = pri[idx]
    if contrasts is not None:
        upri = adjust_primary_array(upri >> coeff_shift, contrasts) << coeff_shift
    return UnitParams(
        directions=np.ascontiguousarray(directions, np.uint8),
        pri=np.ascontiguousarray(np.where(enabled, upri, 0), np.int32),
        sec=np.ascontiguousarray(np.where(enabled, sec[idx], 0), np.int32),
        damping=np.ascontiguousarray(np.where(enabled, damp[idx], 0), np.int32),
        enabled=np.ascontiguousarray(enabled, np.uint8),
        coeff_shift=coeff_shift,
    )


def filter_plane(plane: Plane, units: UnitParams, backend=None, threads: int = 1) -> Plane:
    """Filter a plane from its own unfiltered samples; disabled units are copied."""
    from . import _backend

    ur = -(-plane.height // UNIT)
    uc = -(-plane.width // UNIT)
    for name in ("directions", "pri", "sec", "damping", "enabled"):
        if getattr(units, name).shape != (ur, uc):
            raise ValueError(f"unit parameter {name!r} does not match plane {plane.height}x{plane.width}")
    units.validate()
    kern = _backend.get(backend)
    src = plane.samples
    args = (units.directions, units.pri, units.sec, units.damping, units.enabled)
    if threads <= 1 or ur <= 1:
        out = kern.filter_plane(src, *args, units.coeff_shift)
    else:
        # bands of unit rows; each band writes a disjoint slice of the output
        out = np.array(src, copy=True)

        def run(band):
            r0, r1 = band
            sub = tuple(np.ascontiguousarray(a[r0:r1]) for a in args)
            return kern.filter_plane_rows(src, *sub, units.coeff_shift, r0)

        bands = _backend.row_bands(ur, threads)
        for (r0, r1), part in zip(bands, _backend.parallel_map(run, bands, threads)):
            out[r0 * UNIT : r0 * UNIT + part.shape[0]] = part
    return plane.with_samples(out)


def filter_plane_reference(plane: Plane, units: UnitParams) -> Plane:
    """Slow per-pixel path built on filter_pixel; used to cross-check kernels."""
    src = plane.samples.astype(np.int64)
    out = src.copy()
    h, w = src.shape
    for r in range(units.enabled.shape[0]):
        for c in range(units.enabled.shape[1]):
            bp = units.block(r, c)
            if not bp.enabled:
                continue
            for i in range(r * UNIT, min(h, r * UNIT + UNIT)):
                for j in range(c * UNIT, min(w, c * UNIT + UNIT)):

                    def nb(di, dj, i=i, j=j):
                        y, x = i + di, j + dj
                        if 0 <= y < h and 0 <= x < w:
                            return int(src[y, x])
                        return None

                    out[i, j] = filter_pixel(int(src[i, j]), nb, bp)
    return plane.with_samples(out)


def unit_preset_map(fb_preset: np.ndarray, unit_shape, unit_to_luma_rows=None, unit_to_luma_cols=None):
    """Broadcast a (fb_rows, fb_cols) preset map to units (luma units by default)."""
    ur, uc = unit_shape
    rows = np.arange(ur) if unit_to_luma_rows is None else unit_to_luma_rows
    cols = np.arange(uc) if unit_to_luma_cols is None else unit_to_luma_cols
    return fb_preset[np.ix_(rows // UNITS_PER_FB, cols // UNITS_PER_FB)]


def plane_unit_layout(frame: Frame, plane_index: int, luma_units: Tuple[int, int]):
    """(unit_shape, luma_row_idx, luma_col_idx, span) for a plane."""
    plane = frame.planes[plane_index]
    shape = (-(-plane.height // UNIT), -(-plane.width // UNIT))
    if plane_index == 0:
        return shape, np.arange(shape[0]), np.arange(shape[1]), (1, 1)
    rows, cols, span = chroma_unit_geometry(luma_units, (plane.height, plane.width), frame.chroma_shift)
    return shape, rows, cols, span


def frame_units(
    frame: Frame,
    luma_settings: Sequence[PlaneSetting],
    chroma_settings: Sequence[PlaneSetting],
    fb_preset: np.ndarray,
    coded: np.ndarray,
    dirmap,
) -> List[UnitParams]:
    """Per-plane UnitParams for a whole frame.

    fb_preset: (fb_rows, fb_cols) preset index per filter block, -1 if skipped.
    coded: per luma unit coded flags.
    """
    shift = frame.bit_depth - 8
    luma_units = coded.shape
    out = []
    for pi in range(len(frame.planes)):
        shape, rows, cols, span = plane_unit_layout(frame, pi, luma_units)
        preset = unit_preset_map(fb_preset, shape, rows, cols)
        if pi == 0:
            out.append(resolve_units(luma_settings, preset, coded, dirmap.directions, dirmap.contrasts, shift))
            continue
        if not frame.chroma_filtered:
            out.append(UnitParams.disabled(*shape, coeff_shift=shift))
            continue
        ucoded = pool_coded(coded, span, shape)
        dirs = dirmap.directions[np.ix_(rows, cols)]
        out.append(resolve_units(chroma_settings, preset, ucoded, dirs, None, shift))
    return out
