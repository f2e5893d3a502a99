"""Golden conformance vectors as plain-text fixtures.

Four files are produced:

``constraint.txt``  one line per valid (S, D): f(d, S, D) for d = -255..255
``lines.txt``       line index of every pixel and line sizes, per direction
``taps.txt``        primary/secondary tap offsets and weights, per direction and parity
``blocks.txt``      filtered 8x8 blocks with their input neighbourhood

Every value is computed by the scalar reference functions, so a fixture
mismatch means a behavioural change somewhere in the stack.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Dict, Iterator, List, Tuple

import numpy as np

from .direction import LINE_TABLES
from .filter import BlockParams, constraint, filter_pixel, floor_log2, taps_for

STRENGTHS = tuple(range(16)) + (19,)
DAMPINGS = (3, 4, 5, 6)
DIFF_RANGE = range(-255, 256)
NUM_BLOCKS = 64
FIXTURE_NAMES = ("constraint.txt", "lines.txt", "taps.txt", "blocks.txt")

# (frame height, frame width, block row, block col); taps reach 2 pixels out
_LAYOUTS = ((18, 18, 8, 8), (10, 10, 0, 0), (10, 18, 0, 8), (18, 10, 8, 0))


def valid_pairs() -> Iterator[Tuple[int, int]]:
    for s in STRENGTHS:
        for d in DAMPINGS:
            if s == 0 or d >= floor_log2(s):
                yield s, d


def constraint_text() -> str:
    out = ["# S D f(-255) .. f(255)"]
    for s, d in valid_pairs():
        vals = " ".join(str(constraint(x, s, d)) for x in DIFF_RANGE)
        out.append(f"{s} {d} {vals}")
    return "\n".join(out) + "\n"


def lines_text() -> str:
    out = []
    for d in range(8):
        out.append(f"direction {d} lines {LINE_TABLES.num_lines[d]}")
        out.append("counts " + " ".join(map(str, LINE_TABLES.counts[d])))
        out.append("factors " + " ".join(map(str, LINE_TABLES.factors[d])))
        for i in range(8):
            out.append(" ".join(str(int(k)) for k in LINE_TABLES.index[d, i]))
    return "\n".join(out) + "\n"


def taps_text() -> str:
    out = ["# direction parity kind di dj weight"]
    for d in range(8):
        for parity in (0, 1):
            ts = taps_for(d, parity)
            for kind, group in (("p", ts.primary), ("s", ts.secondary)):
                for tap in group:
                    di, dj = tap.offset
                    out.append(f"{d} {parity} {kind} {di} {dj} {tap.weight}")
    return "\n".join(out) + "\n"


@dataclass
class BlockVector:
    params: BlockParams
    bit_depth: int
    frame: np.ndarray  # (h, w) input samples
    origin: Tuple[int, int]
    expected: np.ndarray  # (8, 8)


def filter_block(frame: np.ndarray, origin: Tuple[int, int], params: BlockParams) -> np.ndarray:
    """Reference filtering of the 8x8 block at ``origin``."""
    h, w = frame.shape
    i0, j0 = origin
    out = np.zeros((8, 8), np.int64)
    for i in range(8):
        for j in range(8):
            y, x = i0 + i, j0 + j

            def nb(di, dj, y=y, x=x):
                if 0 <= y + di < h and 0 <= x + dj < w:
                    return int(frame[y + di, x + dj])
                return None

            out[i, j] = filter_pixel(int(frame[y, x]), nb, params)
    return out


def make_blocks(seed: int = 2024, count: int = NUM_BLOCKS) -> List[BlockVector]:
    rng = np.random.default_rng(seed)
    vectors = []
    for k in range(count):
        h, w, i0, j0 = _LAYOUTS[k % len(_LAYOUTS)] if k >= count // 2 else _LAYOUTS[0]
        bd = (8, 10)[k % 2]
        shift = bd - 8
        pri8 = int(rng.choice(STRENGTHS))
        sec8 = int(rng.choice((0, 1, 2, 4)))
        lo = max(floor_log2(pri8) if pri8 else 0, floor_log2(sec8) if sec8 else 0, 3)
        damping = int(rng.integers(lo, 7)) + shift
        direction = int(rng.integers(0, 8))
        params = BlockParams(pri8 << shift, sec8 << shift, damping, direction, shift)
        # smooth ramp plus noise on the order of the strengths
        base = rng.integers(16, 240) << shift
        yy, xx = np.mgrid[0:h, 0:w]
        ramp = (yy * rng.integers(-3, 4) + xx * rng.integers(-3, 4)) << shift
        noise = rng.integers(-24, 25, size=(h, w)) << shift
        frame = np.clip(base + ramp + noise, 0, (1 << bd) - 1).astype(np.int64)
        expected = filter_block(frame, (i0, j0), params)
        vectors.append(BlockVector(params, bd, frame, (i0, j0), expected))
    return vectors


def blocks_text(vectors: List[BlockVector]) -> str:
    out = ["# vector k: bit_depth direction pri sec damping coeff_shift h w i0 j0", "# then h input rows, then 8 output rows"]
    for k, v in enumerate(vectors):
        p = v.params
        h, w = v.frame.shape
        out.append(
            f"vector {k}: {v.bit_depth} {p.direction} {p.pri} {p.sec} {p.damping} "
            f"{p.coeff_shift} {h} {w} {v.origin[0]} {v.origin[1]}"
        )
        out += [" ".join(map(str, row)) for row in v.frame.tolist()]
        out += [" ".join(map(str, row)) for row in v.expected.tolist()]
    return "\n".join(out) + "\n"


def parse_blocks(text: str) -> List[BlockVector]:
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    vectors, pos = [], 0
    while pos < len(rows):
        head = rows[pos]
        if not head.startswith("vector "):
            raise ValueError(f"expected a vector header, got {head[:40]!r}")
        bd, d, pri, sec, damp, shift, h, w, i0, j0 = map(int, head.split(":", 1)[1].split())
        frame = np.array([list(map(int, r.split())) for r in rows[pos + 1 : pos + 1 + h]], np.int64)
        exp = np.array([list(map(int, r.split())) for r in rows[pos + 1 + h : pos + 9 + h]], np.int64)
        if frame.shape != (h, w) or exp.shape != (8, 8):
            raise ValueError(f"malformed vector at line {pos}")
        vectors.append(BlockVector(BlockParams(pri, sec, damp, d, shift), bd, frame, (i0, j0), exp))
        pos += 9 + h
    return vectors


def parse_constraint(text: str) -> Dict[Tuple[int, int], List[int]]:
    table = {}
    for ln in text.splitlines():
        if not ln or ln.startswith("#"):
            continue
        vals = list(map(int, ln.split()))
        table[(vals[0], vals[1])] = vals[2:]
    return table


def generate(seed: int = 2024) -> Dict[str, str]:
    return {
        "constraint.txt": constraint_text(),
        "lines.txt": lines_text(),
        "taps.txt": taps_text(),
        "blocks.txt": blocks_text(make_blocks(seed)),
    }


def write_vectors(out_dir, seed: int = 2024) -> List[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, text in generate(seed).items():
        path = os.path.join(out_dir, name)
        with open(path, "w") as f:
            f.write(text)
        paths.append(path)
    return paths
