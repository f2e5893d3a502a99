"""Per-8x8 direction estimation.

Each block is matched against the eight "perfectly directional" blocks (pixels
constant along every line of a direction).  Minimising the SSD to that block
is equivalent to maximising ``s_d = sum_k (sum of line k)^2 / N_k``; the score
is kept multiplied by 840 (lcm of 1..8) so everything stays integer.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

import numpy as np

NUM_DIRECTIONS = 8
LCM = 840


def line_index(d: int, i: int, j: int) -> int:
    """Line number of pixel (row i, col j) under direction d."""
    if d == 0:
        return i + j
    if d == 1:
        return i + j // 2
    if d == 2:
        return i
    if d == 3:
        return 3 + i - j // 2
    if d == 4:
        return 7 + i - j
    if d == 5:
        return 3 - i // 2 + j
    if d == 6:
        return j
    if d == 7:
        return i // 2 + j
    raise ValueError(f"direction {d} out of range")


@dataclass(frozen=True)
class LineTables:
    index: np.ndarray  # (8, 8, 8) line number per (d, i, j)
    num_lines: Tuple[int, ...]
    counts: Tuple[Tuple[int, ...], ...]  # N_{d,k}
    factors: Tuple[Tuple[int, ...], ...]  # 840 / N_{d,k}


def _build_tables() -> LineTables:
    index = np.empty((8, 8, 8), np.int64)
    for d in range(8):
        for i in range(8):
            for j in range(8):
                index[d, i, j] = line_index(d, i, j)
    index.setflags(write=False)
    num_lines = tuple(int(index[d].max()) + 1 for d in range(8))
    counts = tuple(
        tuple(int(c) for c in np.bincount(index[d].ravel(), minlength=num_lines[d]))
        for d in range(8)
    )
    factors = tuple(tuple(LCM // n for n in counts[d]) for d in range(8))
    return LineTables(index, num_lines, counts, factors)


LINE_TABLES = _build_tables()
# flat python copy for the scalar search: _FLAT_INDEX[d][8 * i + j]
_FLAT_INDEX = [LINE_TABLES.index[d].ravel().tolist() for d in range(8)]


@dataclass(frozen=True)
class DirectionResult:
    direction: int
    scores: Tuple[int, ...]
    contrast: int


def _to_centered(block, bit_depth: int) -> List[List[int]]:
    shift = bit_depth - 8
    return [[(int(v) >> shift) - 128 for v in row] for row in block]


def _check_block(block) -> None:
    if len(block) != 8 or any(len(row) != 8 for row in block):
        raise ValueError("direction search needs a full 8x8 block")


def _pick(scores: Sequence[int]) -> Tuple[int, int]:
    best = 0
    for d in range(1, 8):
        if scores[d] > scores[best]:
            best = d
    return best, scores[best] - scores[(best + 4) % 8]


def search_direction(block, bit_depth: int = 8) -> DirectionResult:
    """Scalar reference search on one 8x8 block (rows of ints or a 2-D array)."""
    block = np.asarray(block).tolist()
    _check_block(block)
    flat = [v for row in _to_centered(block, bit_depth) for v in row]
    tables = LINE_TABLES
    scores = []
    for d in range(8):
        partial = [0] * tables.num_lines[d]
        for k, v in zip(_FLAT_INDEX[d], flat):
            partial[k] += v
        scores.append(sum(p * p * f for p, f in zip(partial, tables.factors[d])))
    best, contrast = _pick(scores)
    return DirectionResult(best, tuple(scores), contrast)


def directional_ssd(block, bit_depth: int = 8) -> List[Fraction]:
    """E_d^2 for every direction: SSD between the block and its line means."""
    block = np.asarray(block).tolist()
    _check_block(block)
    x = _to_centered(block, bit_depth)
    out = []
    for d in range(8):
        lines = {}
        for i in range(8):
            for j in range(8):
                lines.setdefault(line_index(d, i, j), []).append(x[i][j])
        err = Fraction(0)
        for members in lines.values():
            mean = Fraction(sum(members), len(members))
            err += sum((v - mean) ** 2 for v in members)
        out.append(err)
    return out


def search_direction_oracle(block, bit_depth: int = 8) -> Tuple[int, List[Fraction]]:
    """Brute-force argmin of the SSD to the closest directional block (lowest d on ties)."""
    ssd = directional_ssd(block, bit_depth)
    best = 0
    for d in range(1, 8):
        if ssd[d] < ssd[best]:
            best = d
    return best, ssd


# lcm of all N_{d,k}^2; E_d^2 * SSD_SCALE is an integer for every block
SSD_SCALE = 705600


def directional_ssd_scaled(blocks: np.ndarray) -> np.ndarray:
    """Vectorised exact oracle: SSD_SCALE * E_d^2 as int64, shape (n, 8).

    ``blocks`` are centred 8-bit values, shape (n, 8, 8).  Works on deviations
    from the line mean directly (N*x - S), never on the s_d shortcut.
    """
    x = np.asarray(blocks, np.int64).reshape(-1, 64)
    out = np.zeros((x.shape[0], 8), np.int64)
    for d in range(8):
        idx = LINE_TABLES.index[d].ravel()
        counts = np.asarray(LINE_TABLES.counts[d], np.int64)
        onehot = np.zeros((64, LINE_TABLES.num_lines[d]), np.int64)
        onehot[np.arange(64), idx] = 1
        sums = x @ onehot
        n_pix = counts[idx]
        dev = n_pix * x - sums[:, idx]
        out[:, d] = (dev * dev * (SSD_SCALE // (n_pix * n_pix))).sum(axis=1)
    return out


@dataclass
class OpCounts:
    additions: int = 0
    multiplies: int = 0
    comparisons: int = 0
    line_sums: int = 0
    max_magnitude: int = 0

    def as_dict(self):
        return {
            "additions": self.additions,
            "multiplies": self.multiplies,
            "comparisons": self.comparisons,
            "line_sums": self.line_sums,
        }


class _Counter:
    def __init__(self):
        self.ops = OpCounts()

    def _track(self, v: int) -> int:
        if abs(v) > self.ops.max_magnitude:
            self.ops.max_magnitude = abs(v)
        return v

    def add(self, a: int, b: int) -> int:
        self.ops.additions += 1
        return self._track(a + b)

    def mul(self, a: int, b: int) -> int:
        self.ops.multiplies += 1
        return self._track(a * b)

    def gt(self, a: int, b: int) -> bool:
        self.ops.comparisons += 1
        return a > b

    def total(self, values: Sequence[int]) -> int:
        acc = values[0]
        for v in values[1:]:
            acc = self.add(acc, v)
        return acc


def _line_sums(c: _Counter, items) -> List[int]:
    """items: iterable of (line, value); first value of a line is free."""
    sums = {}
    for k, v in items:
        sums[k] = v if k not in sums else c.add(sums[k], v)
    return [sums[k] for k in sorted(sums)]


def count_operations(block, bit_depth: int = 8) -> Tuple[DirectionResult, OpCounts]:
    """Instrumented search that reuses partial sums of adjacent pixel pairs.

    Horizontal pairs feed directions 1, 3 and the row sums of direction 2;
    vertical pairs feed 5, 7 and the column sums of direction 6.  Diagonal
    directions 0 and 4 accumulate single pixels.  Centring and the final
    contrast subtraction are not counted.
    """
    block = np.asarray(block).tolist()
    _check_block(block)
    x = _to_centered(block, bit_depth)
    c = _Counter()
    for row in x:
        for v in row:
            c._track(v)
    hpair = [[c.add(x[i][2 * q], x[i][2 * q + 1]) for q in range(4)] for i in range(8)]
    vpair = [[c.add(x[2 * q][j], x[2 * q + 1][j]) for j in range(8)] for q in range(4)]

    partial = [None] * 8
    partial[0] = _line_sums(c, ((i + j, x[i][j]) for i in range(8) for j in range(8)))
    partial[4] = _line_sums(c, ((7 + i - j, x[i][j]) for i in range(8) for j in range(8)))
    partial[1] = _line_sums(c, ((i + q, hpair[i][q]) for i in range(8) for q in range(4)))
    partial[3] = _line_sums(c, ((3 + i - q, hpair[i][q]) for i in range(8) for q in range(4)))
    partial[2] = _line_sums(c, ((i, hpair[i][q]) for i in range(8) for q in range(4)))
    partial[5] = _line_sums(c, ((3 - q + j, vpair[q][j]) for q in range(4) for j in range(8)))
    partial[7] = _line_sums(c, ((q + j, vpair[q][j]) for q in range(4) for j in range(8)))
    partial[6] = _line_sums(c, ((j, vpair[q][j]) for q in range(4) for j in range(8)))
    c.ops.line_sums = sum(len(p) for p in partial)

    sq = [[c.mul(p, p) for p in partial[d]] for d in range(8)]
    factors = LINE_TABLES.factors
    scores = [0] * 8
    for d in (0, 4):
        # lines k and 14-k have equal length and share a factor
        terms = [c.mul(c.add(sq[d][k], sq[d][14 - k]), factors[d][k]) for k in range(7)]
        terms.append(c.mul(sq[d][7], factors[d][7]))
        scores[d] = c.total(terms)
    for d in (2, 6):
        scores[d] = c.mul(c.total(sq[d]), factors[d][0])
    for d in (1, 3, 5, 7):
        # lines 3..7 are full length; (0,10), (1,9), (2,8) pair up
        terms = [c.mul(c.total(sq[d][3:8]), factors[d][3])]
        terms += [c.mul(c.add(sq[d][k], sq[d][10 - k]), factors[d][k]) for k in range(3)]
        scores[d] = c.total(terms)

    best = 0
    for d in range(1, 8):
        if c.gt(scores[d], scores[best]):
            best = d
    contrast = scores[best] - scores[(best + 4) % 8]
    return DirectionResult(best, tuple(scores), contrast), c.ops


def pad_to_units(samples: np.ndarray) -> np.ndarray:
    """Edge-replicate a plane up to a multiple of 8 in both axes."""
    h, w = samples.shape
    ph, pw = (-h) % 8, (-w) % 8
    if ph or pw:
        samples = np.pad(samples, ((0, ph), (0, pw)), mode="edge")
    return np.ascontiguousarray(samples, dtype=np.uint16)


@dataclass(frozen=True)
class DirectionMap:
    """Per luma 8x8 unit directions, contrasts and scores."""

    directions: np.ndarray  # (unit_rows, unit_cols) uint8
    contrasts: np.ndarray  # (unit_rows, unit_cols) int32
    scores: np.ndarray  # (unit_rows, unit_cols, 8) int32

    def histogram(self) -> List[int]:
        return [int(v) for v in np.bincount(self.directions.ravel(), minlength=8)]


def search_plane(plane, backend=None, threads: int = 1) -> DirectionMap:
    """Search every 8x8 unit of a plane; edge units read replicated pixels."""
    from . import _backend

    kern = _backend.get(backend)
    padded = pad_to_units(plane.samples)
    shift = plane.bit_depth - 8
    if threads <= 1 or padded.shape[0] <= 8:
        dirs, contrast, scores = kern.search_directions(padded, shift)
    else:
        bands = _backend.row_bands(padded.shape[0] // 8, threads)
        parts = _backend.parallel_map(
            lambda b: kern.search_directions(
                np.ascontiguousarray(padded[b[0] * 8 : b[1] * 8]), shift
            ),
            bands,
            threads,
        )
        dirs = np.concatenate([p[0] for p in parts])
        contrast = np.concatenate([p[1] for p in parts])
        scores = np.concatenate([p[2] for p in parts])
    return DirectionMap(dirs, contrast, scores)
