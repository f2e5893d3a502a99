"""Planar frames, 8x8 unit / 64x64 filter-block geometry and skip maps."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

UNIT = 8
FB_SIZE = 64
UNITS_PER_FB = FB_SIZE // UNIT

# subsampling name -> (ss_x, ss_y); None means no chroma planes
SUBSAMPLINGS = {
    "400": None,
    "420": (1, 1),
    "422": (1, 0),
    "444": (0, 0),
}


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class Plane:
    samples: np.ndarray
    bit_depth: int = 8

    def __post_init__(self):
        if self.bit_depth not in (8, 10, 12):
            raise ValueError(f"unsupported bit depth {self.bit_depth}")
        arr = np.asarray(self.samples)
        if arr.ndim != 2:
            raise ValueError("plane samples must be 2-D (rows, cols)")
        if arr.size and (arr.min() < 0 or arr.max() >= (1 << self.bit_depth)):
            raise ValueError(f"sample out of range for {self.bit_depth}-bit plane")
        arr = np.ascontiguousarray(arr, dtype=np.uint16)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def peak(self) -> int:
        return (1 << self.bit_depth) - 1

    def with_samples(self, samples: np.ndarray) -> "Plane":
        return Plane(samples, self.bit_depth)


@dataclass(frozen=True)
class Frame:
    luma: Plane
    chroma: Optional[Tuple[Plane, Plane]] = None
    subsampling: str = "420"

    def __post_init__(self):
        if self.subsampling not in SUBSAMPLINGS:
            raise ValueError(f"unknown subsampling {self.subsampling!r}")
        ss = SUBSAMPLINGS[self.subsampling]
        if ss is None:
            if self.chroma is not None:
                raise ValueError("4:0:0 frame cannot carry chroma planes")
            return
        if self.chroma is None or len(self.chroma) != 2:
            raise ValueError(f"{self.subsampling} frame needs two chroma planes")
        want = chroma_shape(self.luma.height, self.luma.width, self.subsampling)
        for p in self.chroma:
            if (p.height, p.width) != want:
                raise ValueError(
                    f"chroma plane is {p.height}x{p.width}, expected {want[0]}x{want[1]}"
                )
            if p.bit_depth != self.luma.bit_depth:
                raise ValueError("all planes must share bit depth")

    @property
    def bit_depth(self) -> int:
        return self.luma.bit_depth

    @property
    def planes(self) -> Tuple[Plane, ...]:
        if self.chroma is None:
            return (self.luma,)
        return (self.luma,) + tuple(self.chroma)

    @property
    def chroma_shift(self) -> Optional[Tuple[int, int]]:
        """(ss_x, ss_y) for chroma planes, or None for monochrome."""
        return SUBSAMPLINGS[self.subsampling]

    @property
    def chroma_filtered(self) -> bool:
        """Chroma is only filtered when subsampling is equal in both axes."""
        ss = self.chroma_shift
        return ss is not None and ss[0] == ss[1]

    def replace_planes(self, planes) -> "Frame":
        planes = list(planes)
        chroma = None if len(planes) == 1 else (planes[1], planes[2])
        return Frame(planes[0], chroma, self.subsampling)


def chroma_shape(luma_h: int, luma_w: int, subsampling: str) -> Tuple[int, int]:
    ss_x, ss_y = SUBSAMPLINGS[subsampling]
    return _ceil_div(luma_h, 1 << ss_y), _ceil_div(luma_w, 1 << ss_x)


@dataclass(frozen=True)
class BlockGrid:
    unit_cols: int
    unit_rows: int
    fb_cols: int
    fb_rows: int

    @property
    def num_fbs(self) -> int:
        return self.fb_cols * self.fb_rows

    def fb_of_unit(self, unit_row: int, unit_col: int) -> Tuple[int, int]:
        return unit_row // UNITS_PER_FB, unit_col // UNITS_PER_FB


def partition(frame: Frame) -> BlockGrid:
    """Count luma 8x8 units and 64x64 filter blocks, partial edge blocks included."""
    h, w = frame.luma.height, frame.luma.width
    if h == 0 or w == 0:
        raise ValueError("zero-dimension frame")
    return BlockGrid(
        unit_cols=_ceil_div(w, UNIT),
        unit_rows=_ceil_div(h, UNIT),
        fb_cols=_ceil_div(w, FB_SIZE),
        fb_rows=_ceil_div(h, FB_SIZE),
    )


def grid_for_size(width: int, height: int) -> BlockGrid:
    return partition(Frame(Plane(np.zeros((height, width), np.uint16)), None, "400"))


@dataclass(frozen=True)
class SkipMap:
    """Per luma 8x8 unit coded-residual flags (True = has residual)."""

    coded: np.ndarray = field()

    def __post_init__(self):
        arr = np.ascontiguousarray(self.coded, dtype=bool)
        if arr.ndim != 2:
            raise ValueError("skip map must be 2-D")
        arr.setflags(write=False)
        object.__setattr__(self, "coded", arr)

    @classmethod
    def all_coded(cls, grid: BlockGrid) -> "SkipMap":
        return cls(np.ones((grid.unit_rows, grid.unit_cols), bool))

    def check(self, grid: BlockGrid) -> None:
        if self.coded.shape != (grid.unit_rows, grid.unit_cols):
            raise ValueError(
                f"skip map is {self.coded.shape}, grid needs "
                f"{(grid.unit_rows, grid.unit_cols)}"
            )

    def fb_coded(self, grid: BlockGrid) -> np.ndarray:
        """OR of unit flags over each filter block, shape (fb_rows, fb_cols)."""
        self.check(grid)
        padded = np.zeros((grid.fb_rows * UNITS_PER_FB, grid.fb_cols * UNITS_PER_FB), bool)
        padded[: grid.unit_rows, : grid.unit_cols] = self.coded
        return padded.reshape(grid.fb_rows, UNITS_PER_FB, grid.fb_cols, UNITS_PER_FB).any(
            axis=(1, 3)
        )


@dataclass
class BlockView:
    values: np.ndarray
    valid: np.ndarray


def extract_block(plane: Plane, i0: int, j0: int, n: int = UNIT) -> BlockView:
    """n x n window at (i0, j0); positions past the frame edge are zero and masked out."""
    if not (0 <= i0 < plane.height and 0 <= j0 < plane.width):
        raise ValueError("block origin outside plane")
    values = np.zeros((n, n), np.int32)
    valid = np.zeros((n, n), bool)
    src = plane.samples[i0 : i0 + n, j0 : j0 + n]
    values[: src.shape[0], : src.shape[1]] = src
    valid[: src.shape[0], : src.shape[1]] = True
    return BlockView(values, valid)


def write_block(samples: np.ndarray, i0: int, j0: int, block: BlockView) -> None:
    """Inverse of extract_block on the valid region (in place on a writable array)."""
    h = min(block.values.shape[0], samples.shape[0] - i0)
    w = min(block.values.shape[1], samples.shape[1] - j0)
    mask = block.valid[:h, :w]
    region = samples[i0 : i0 + h, j0 : j0 + w]
    region[mask] = block.values[:h, :w][mask]
