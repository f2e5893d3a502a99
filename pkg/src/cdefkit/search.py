"""Encoder-side preset search.

A first pass filters every coded filter block with every candidate
(primary strength x secondary index x skip bit) and records the distortion.
Presets are then picked greedily to minimise

    J = lambda * B * log2(N) + sum_b min_i (D_luma[b, L_i] + D_chroma[b, C_i])

where B counts coded filter blocks and one signalled id selects the
(luma, chroma) pair of a preset.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _backend
from .direction import DirectionMap
from .filter import filter_plane, plane_unit_layout, pool_coded, resolve_units, unit_preset_map
from .frame import UNIT, UNITS_PER_FB, Frame, SkipMap, partition
from .params import CHROMA, LUMA, CdefPreset, FrameParams, chroma_signaled, resolve_effective

NUM_CANDIDATES = 16 * 4 * 2
FAST_PRIMARY = (0, 1, 2, 3, 5, 7, 10, 13, 15)
PRESET_COUNTS = (1, 2, 4, 8)

C1 = 6.25
C2 = 312.5


def candidate_fields(p: int) -> Tuple[int, int, int]:
    """Candidate index -> (primary, secondary index, skip bit)."""
    if not 0 <= p < NUM_CANDIDATES:
        raise ValueError(f"candidate {p} out of range")
    return p // 8, (p // 2) % 4, p % 2


def candidate_index(pri: int, sec_idx: int, skip: int) -> int:
    return pri * 8 + sec_idx * 2 + skip


def candidate_subset(fast: bool = False) -> List[int]:
    if not fast:
        return list(range(NUM_CANDIDATES))
    return [
        candidate_index(p, s, k) for p in FAST_PRIMARY for s in range(4) for k in range(2)
    ]


def damping_from_q(q_index: int) -> int:
    """Luma damping (8-bit domain) from a 0..255 quantizer index."""
    if not 0 <= q_index <= 255:
        raise ValueError(f"q_index {q_index} outside 0..255")
    return min(6, max(3, 3 + q_index // 64))


def q_index_from_step(q_step: float) -> int:
    """Rough quantizer index for the desk degrader's step size."""
    return int(min(255, max(0, round(4 * q_step))))


def default_lambda(q_step: float) -> float:
    return 0.03 * q_step * q_step


def cdef_distortion(src, dec, bit_depth: int = 8) -> float:
    """Contrast-weighted SSE summed over the 8x8 sub-blocks of src/dec."""
    src = np.asarray(src, np.float64)
    dec = np.asarray(dec, np.float64)
    if src.shape != dec.shape:
        raise ValueError("blocks differ in shape")
    sse, var_s, var_d, _ = _unit_stats(src, dec)
    return float(_weighted(sse, var_s, var_d, bit_depth).sum())


def _unit_stats(src: np.ndarray, dec: np.ndarray):
    """Per 8x8 unit SSE, population variances and pixel counts."""
    h, w = src.shape
    ur, uc = -(-h // UNIT), -(-w // UNIT)

    def blocks(a):
        p = np.zeros((ur * UNIT, uc * UNIT), np.float64)
        p[:h, :w] = a
        return p.reshape(ur, UNIT, uc, UNIT)

    mask = np.zeros((h, w)) + 1.0
    n = blocks(mask).sum(axis=(1, 3))
    s, d = blocks(src), blocks(dec)
    sse = ((s - d) ** 2).sum(axis=(1, 3))
    ms = s.sum(axis=(1, 3)) / n
    md = d.sum(axis=(1, 3)) / n
    var_s = np.maximum((s * s).sum(axis=(1, 3)) / n - ms * ms, 0.0)
    var_d = np.maximum((d * d).sum(axis=(1, 3)) / n - md * md, 0.0)
    return sse, var_s, var_d, n


def _weighted(sse, var_s, var_d, bit_depth: int):
    c1 = C1 * 4.0 ** (bit_depth - 8)
    c2 = C2 * 16.0 ** (bit_depth - 8)
    return (var_s + var_d + c1) / (2.0 * np.sqrt(var_s * var_d + c2)) * sse


def unit_distortion(src: np.ndarray, dec: np.ndarray, metric: str, bit_depth: int) -> np.ndarray:
    """Distortion of every 8x8 unit of a plane, shape (unit_rows, unit_cols)."""
    if metric == "sse":
        h, w = src.shape
        ur, uc = -(-h // UNIT), -(-w // UNIT)
        diff = np.zeros((ur * UNIT, uc * UNIT), np.int64)
        diff[:h, :w] = src.astype(np.int64) - dec.astype(np.int64)
        return (diff * diff).reshape(ur, UNIT, uc, UNIT).sum(axis=(1, 3)).astype(np.float64)
    if metric != "cdef":
        raise ValueError(f"unknown metric {metric!r}")
    sse, var_s, var_d, _ = _unit_stats(src.astype(np.float64), dec.astype(np.float64))
    return _weighted(sse, var_s, var_d, bit_depth)


@dataclass
class SearchConfig:
    lam: float = 0.0
    max_presets: int = 8
    metric: str = "cdef"
    fast: bool = False
    refine_passes: int = 2
    damping: int = 4
    threads: int = 1
    backend: Optional[str] = None

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("lambda must be finite and non-negative")
        if self.max_presets not in PRESET_COUNTS:
            raise ValueError(f"max_presets must be one of {PRESET_COUNTS}")
        if self.metric not in ("cdef", "sse"):
            raise ValueError(f"unknown metric {self.metric!r}")


@dataclass
class DistortionTable:
    luma: np.ndarray  # (B, K_luma)
    chroma: np.ndarray  # (B, K_chroma)
    luma_candidates: List[int]
    chroma_candidates: List[int]
    fb_index: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def num_blocks(self) -> int:
        return self.luma.shape[0]


def _fb_sum(unit_vals: np.ndarray, fb_of_row: np.ndarray, fb_of_col: np.ndarray, fb_shape) -> np.ndarray:
    out = np.zeros(fb_shape, np.float64)
    np.add.at(out, (fb_of_row[:, None], fb_of_col[None, :]), unit_vals)
    return out


def _candidate_setting(cand: int, group: str, bit_depth: int, subsampling: str, damping: int):
    pri, sec_idx, skip = candidate_fields(cand)
    prefix = "luma" if group == LUMA else "chroma"
    preset = CdefPreset(**{f"{prefix}_pri": pri, f"{prefix}_sec_idx": sec_idx, f"{prefix}_skip": skip})
    return resolve_effective(preset, group, bit_depth, subsampling, damping)


def build_table(
    source: Frame,
    decoded: Frame,
    dirmap: DirectionMap,
    config: SearchConfig,
    skip_map: Optional[SkipMap] = None,
) -> DistortionTable:
    """Distortion of every coded filter block under every candidate."""
    if [p.samples.shape for p in source.planes] != [p.samples.shape for p in decoded.planes]:
        raise ValueError("source and decoded frames differ in geometry")
    grid = partition(decoded)
    if skip_map is None:
        skip_map = SkipMap.all_coded(grid)
    skip_map.check(grid)
    fb_coded = skip_map.fb_coded(grid)
    coded_idx = np.flatnonzero(fb_coded.ravel())
    fb_index = [tuple(int(v) for v in divmod(int(i), grid.fb_cols)) for i in coded_idx]
    fb_preset = np.where(fb_coded, 0, -1)
    bd = decoded.bit_depth
    shift = bd - 8
    subset = candidate_subset(config.fast)
    # the skip bit only matters when a coded filter block has residual-free units
    in_coded_fb = unit_preset_map(fb_preset, skip_map.coded.shape) >= 0
    skip_matters = bool(np.any(in_coded_fb & ~skip_map.coded))

    def layout(pi: int):
        shape, rows, cols, span = plane_unit_layout(decoded, pi, skip_map.coded.shape)
        preset = unit_preset_map(fb_preset, shape, rows, cols)
        if pi == 0:
            return rows, cols, preset, skip_map.coded, dirmap.directions, dirmap.contrasts
        coded = pool_coded(skip_map.coded, span, shape)
        return rows, cols, preset, coded, dirmap.directions[np.ix_(rows, cols)], None

    def group_table(plane_ids: Sequence[int], group: str, cands: Sequence[int]) -> np.ndarray:
        layouts = {pi: layout(pi) for pi in plane_ids}
        settings = [_candidate_setting(c, group, bd, decoded.subsampling, config.damping) for c in cands]
        keys = [(s.pri, s.sec, s.damping, s.active, s.skip if skip_matters else None) for s in settings]
        unique = {}
        for key, setting in zip(keys, settings):
            unique.setdefault(key, setting)

        def evaluate(setting) -> np.ndarray:
            total = np.zeros(fb_coded.shape, np.float64)
            for pi in plane_ids:
                rows, cols, preset, coded, dirs, contrasts = layouts[pi]
                units = resolve_units([setting], preset, coded, dirs, contrasts, shift)
                out = filter_plane(decoded.planes[pi], units, backend=config.backend)
                dist = unit_distortion(source.planes[pi].samples, out.samples, config.metric, bd)
                total += _fb_sum(dist, rows // UNITS_PER_FB, cols // UNITS_PER_FB, fb_coded.shape)
            return total.ravel()[coded_idx]

        results = _backend.parallel_map(evaluate, list(unique.values()), config.threads)
        by_key = dict(zip(unique.keys(), results))
        return np.stack([by_key[k] for k in keys], axis=1)

    luma = group_table([0], LUMA, subset)
    if chroma_signaled(decoded.subsampling):
        chroma_cands = subset
        chroma = group_table([1, 2], CHROMA, chroma_cands)
    else:
        chroma_cands = [0]
        chroma = np.zeros((len(coded_idx), 1))
    return DistortionTable(luma, chroma, list(subset), list(chroma_cands), fb_index)


@dataclass
class Selection:
    presets: List[Tuple[int, int]]  # (luma column, chroma column)
    ids: List[int]
    cost: float
    distortion: float

    @property
    def n(self) -> int:
        return len(self.presets)


def _combined(table: DistortionTable, presets) -> np.ndarray:
    """(B, N) summed distortion of each block under each chosen preset."""
    return np.stack([table.luma[:, l] + table.chroma[:, c] for l, c in presets], axis=1)


def rd_cost(table: DistortionTable, presets, lam: float) -> Tuple[float, float, List[int]]:
    """(J, distortion, per-block ids) for a preset list."""
    b = table.num_blocks
    if b == 0:
        return 0.0, 0.0, []
    m = _combined(table, presets)
    ids = m.argmin(axis=1)
    dist = float(m[np.arange(b), ids].sum())
    return lam * b * math.log2(len(presets)) + dist, dist, [int(i) for i in ids]


def _best_addition(cur: np.ndarray, table: DistortionTable) -> Tuple[Tuple[int, int], float]:
    """Preset minimising sum_b min(cur_b, D_luma[b,l] + D_chroma[b,c]); lowest (l, c) on ties."""
    kl = table.luma.shape[1]
    totals = np.empty((kl, table.chroma.shape[1]))
    for l in range(kl):
        totals[l] = np.minimum(cur[:, None], table.luma[:, l, None] + table.chroma).sum(axis=0)
    flat = int(np.argmin(totals))
    l, c = divmod(flat, totals.shape[1])
    return (l, c), float(totals[l, c])


def _make(table, presets, lam) -> Selection:
    j, dist, ids = rd_cost(table, presets, lam)
    return Selection(list(presets), ids, j, dist)


def _empty() -> Selection:
    return Selection([(0, 0)], [], 0.0, 0.0)


def greedy_order(table: DistortionTable, n_max: int) -> List[Tuple[int, int]]:
    cur = np.full(table.num_blocks, np.inf)
    order = []
    for _ in range(n_max):
        pick, _ = _best_addition(cur, table)
        order.append(pick)
        cur = np.minimum(cur, table.luma[:, pick[0]] + table.chroma[:, pick[1]])
    return order


def greedy_select(table: DistortionTable, config: SearchConfig) -> Selection:
    """Grow the preset list one at a time; keep the best N in {1,2,4,8}."""
    if table.num_blocks == 0:
        return _empty()
    order = greedy_order(table, config.max_presets)
    best = None
    for n in PRESET_COUNTS:
        if n > config.max_presets:
            break
        sel = _make(table, order[:n], config.lam)
        if best is None or sel.cost < best.cost:
            best = sel
    return best


def refine(selection: Selection, table: DistortionTable, config: SearchConfig, history=None) -> Selection:
    """Coordinate descent: re-optimise one preset slot at a time."""
    if table.num_blocks == 0:
        return selection
    presets = list(selection.presets)
    current = _make(table, presets, config.lam)
    if history is not None:
        history.append(current.cost)
    for _ in range(config.refine_passes):
        changed = False
        for slot in range(len(presets)):
            others = presets[:slot] + presets[slot + 1 :]
            cur = np.full(table.num_blocks, np.inf)
            for l, c in others:
                cur = np.minimum(cur, table.luma[:, l] + table.chroma[:, c])
            pick, total = _best_addition(cur, table)
            if pick != presets[slot] and total < current.distortion:
                trial = presets[:slot] + [pick] + presets[slot + 1 :]
                cand = _make(table, trial, config.lam)
                if cand.cost < current.cost:
                    presets, current, changed = trial, cand, True
        if history is not None:
            history.append(current.cost)
        if not changed:
            break
    return current


def select_presets(table: DistortionTable, config: SearchConfig) -> Selection:
    """Greedy growth plus refinement, evaluated at every allowed N."""
    if table.num_blocks == 0:
        return _empty()
    order = greedy_order(table, config.max_presets)
    best = None
    for n in PRESET_COUNTS:
        if n > config.max_presets:
            break
        sel = refine(_make(table, order[:n], config.lam), table, config)
        if best is None or sel.cost < best.cost:
            best = sel
    return best


EXHAUSTIVE_LIMIT = 20_000_000


def exhaustive_select(table: DistortionTable, config: SearchConfig) -> Selection:
    """Global minimum of J by enumeration; small instances only."""
    if table.num_blocks == 0:
        return _empty()
    pairs = list(itertools.product(range(table.luma.shape[1]), range(table.chroma.shape[1])))
    sizes = [n for n in PRESET_COUNTS if n <= config.max_presets]
    work = sum(math.comb(len(pairs), n) for n in sizes) * table.num_blocks
    if work > EXHAUSTIVE_LIMIT:
        raise ValueError(f"instance too large for exhaustive search ({work} evaluations)")
    cols = np.stack([table.luma[:, l] + table.chroma[:, c] for l, c in pairs], axis=1)
    best = None
    for n in sizes:
        for combo in itertools.combinations(range(len(pairs)), n):
            dist = float(cols[:, combo].min(axis=1).sum())
            j = config.lam * table.num_blocks * math.log2(n) + dist
            if best is None or j < best[0]:
                best = (j, combo)
    return _make(table, [pairs[k] for k in best[1]], config.lam)


def to_frame_params(selection: Selection, table: DistortionTable, config: SearchConfig, subsampling: str) -> FrameParams:
    presets = []
    for l, c in selection.presets:
        lp, ls, lk = candidate_fields(table.luma_candidates[l])
        if chroma_signaled(subsampling):
            cp, cs, ck = candidate_fields(table.chroma_candidates[c])
        else:
            cp = cs = ck = 0
        presets.append(CdefPreset(lp, lk, ls, cp, ck, cs))
    n = len(presets)
    return FrameParams(config.damping, n.bit_length() - 1, tuple(presets), tuple(selection.ids))
