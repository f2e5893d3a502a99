"""Frame and filter-block filter parameters and their fixed-width bit layout.

Layout, MSB first::

    damping - 3          2 bits
    fb_bits              2 bits
    preset * 2^fb_bits   14 bits each (7 when chroma is not signalled):
        luma_pri 4, luma_skip 1, luma_sec_idx 2,
        chroma_pri 4, chroma_skip 1, chroma_sec_idx 2
    preset id            fb_bits per coded filter block, raster order
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .filter import PlaneSetting, floor_log2

SECONDARY_STRENGTHS = (0, 1, 2, 4)
# (0, 0) with the skip bit set is re-purposed to this pair
SPECIAL_PRIMARY = 19
SPECIAL_SECONDARY = 7

LUMA = "luma"
CHROMA = "chroma"


class BitstreamError(ValueError):
    pass


def chroma_signaled(subsampling: str) -> bool:
    """Chroma fields are present only for 4:2:0 and 4:4:4."""
    return subsampling in ("420", "444")


def preset_bits(subsampling: str) -> int:
    return 14 if chroma_signaled(subsampling) else 7


def decode_secondary(idx: int) -> int:
    if not 0 <= idx <= 3:
        raise ValueError(f"secondary index {idx} out of range")
    return SECONDARY_STRENGTHS[idx]


@dataclass(frozen=True)
class CdefPreset:
    luma_pri: int = 0
    luma_skip: int = 0
    luma_sec_idx: int = 0
    chroma_pri: int = 0
    chroma_skip: int = 0
    chroma_sec_idx: int = 0

    def __post_init__(self):
        for name, bits in _PRESET_FIELDS:
            v = getattr(self, name)
            if not 0 <= v < (1 << bits):
                raise ValueError(f"{name}={v} does not fit in {bits} bits")

    def fields(self, plane: str) -> Tuple[int, int, int]:
        """(primary, secondary index, skip bit) for a plane group."""
        if plane == LUMA:
            return self.luma_pri, self.luma_sec_idx, self.luma_skip
        return self.chroma_pri, self.chroma_sec_idx, self.chroma_skip


_PRESET_FIELDS = (
    ("luma_pri", 4),
    ("luma_skip", 1),
    ("luma_sec_idx", 2),
    ("chroma_pri", 4),
    ("chroma_skip", 1),
    ("chroma_sec_idx", 2),
)


@dataclass(frozen=True)
class FrameParams:
    damping: int
    fb_bits: int
    presets: Tuple[CdefPreset, ...]
    fb_preset_ids: Tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "presets", tuple(self.presets))
        object.__setattr__(self, "fb_preset_ids", tuple(int(i) for i in self.fb_preset_ids))
        if not 3 <= self.damping <= 6:
            raise ValueError(f"damping {self.damping} outside 3..6")
        if not 0 <= self.fb_bits <= 3:
            raise ValueError(f"fb_bits {self.fb_bits} outside 0..3")
        if len(self.presets) != 1 << self.fb_bits:
            raise ValueError(
                f"{len(self.presets)} presets given, fb_bits={self.fb_bits} needs {1 << self.fb_bits}"
            )
        for i in self.fb_preset_ids:
            if not 0 <= i < len(self.presets):
                raise ValueError(f"preset id {i} out of range")


@dataclass(frozen=True)
class Bitstring:
    data: bytes
    length: int

    def __post_init__(self):
        if self.length > 8 * len(self.data):
            raise ValueError("bit length exceeds data")

    def __str__(self):
        return "".join(str(b) for b in self.bits())

    def __len__(self):
        return self.length

    def bits(self):
        for k in range(self.length):
            yield (self.data[k >> 3] >> (7 - (k & 7))) & 1

    @classmethod
    def from_str(cls, s: str) -> "Bitstring":
        w = _Writer()
        for ch in s:
            w.put(int(ch), 1)
        return w.finish()


class _Writer:
    def __init__(self):
        self.buf = bytearray()
        self.n = 0

    def put(self, value: int, bits: int) -> None:
        if value < 0 or value >> bits:
            raise ValueError(f"{value} does not fit in {bits} bits")
        for k in range(bits - 1, -1, -1):
            if self.n % 8 == 0:
                self.buf.append(0)
            if (value >> k) & 1:
                self.buf[-1] |= 0x80 >> (self.n % 8)
            self.n += 1

    def finish(self) -> Bitstring:
        return Bitstring(bytes(self.buf), self.n)


class _Reader:
    def __init__(self, bits: Bitstring):
        self.bits = bits
        self.pos = 0

    def get(self, bits: int) -> int:
        if self.pos + bits > self.bits.length:
            raise BitstreamError(
                f"truncated bitstring: need {self.pos + bits} bits, have {self.bits.length}"
            )
        v = 0
        for _ in range(bits):
            byte = self.bits.data[self.pos >> 3]
            v = (v << 1) | ((byte >> (7 - (self.pos & 7))) & 1)
            self.pos += 1
        return v


def coded_fb_count(fb_coded: np.ndarray) -> int:
    return int(np.count_nonzero(fb_coded))


def packed_length(params_or_fb_bits, n_coded: int, subsampling: str) -> int:
    fb_bits = getattr(params_or_fb_bits, "fb_bits", params_or_fb_bits)
    return 4 + (1 << fb_bits) * preset_bits(subsampling) + n_coded * fb_bits


def pack(params: FrameParams, fb_coded: np.ndarray, subsampling: str) -> Bitstring:
    """Serialise; ids are expected for the coded filter blocks only."""
    n_coded = coded_fb_count(fb_coded)
    if len(params.fb_preset_ids) != n_coded:
        raise ValueError(
            f"{len(params.fb_preset_ids)} preset ids for {n_coded} coded filter blocks"
        )
    with_chroma = chroma_signaled(subsampling)
    w = _Writer()
    w.put(params.damping - 3, 2)
    w.put(params.fb_bits, 2)
    for p in params.presets:
        fields = _PRESET_FIELDS if with_chroma else _PRESET_FIELDS[:3]
        if not with_chroma and (p.chroma_pri or p.chroma_skip or p.chroma_sec_idx):
            raise ValueError(f"chroma fields are not signalled for {subsampling}")
        for name, bits in fields:
            w.put(getattr(p, name), bits)
    for i in params.fb_preset_ids:
        w.put(i, params.fb_bits)
    return w.finish()


def unpack(bits: Bitstring, fb_coded: np.ndarray, subsampling: str) -> FrameParams:
    r = _Reader(bits)
    damping = r.get(2) + 3
    fb_bits = r.get(2)
    with_chroma = chroma_signaled(subsampling)
    presets = []
    for _ in range(1 << fb_bits):
        fields = _PRESET_FIELDS if with_chroma else _PRESET_FIELDS[:3]
        presets.append(CdefPreset(**{name: r.get(b) for name, b in fields}))
    ids = [r.get(fb_bits) for _ in range(coded_fb_count(fb_coded))]
    if r.pos != bits.length:
        raise BitstreamError(f"{bits.length - r.pos} trailing bits after parameters")
    return FrameParams(damping, fb_bits, tuple(presets), tuple(ids))


def resolve_effective(
    preset: CdefPreset, plane: str, bit_depth: int, subsampling: str, luma_damping: int
) -> PlaneSetting:
    """Strengths, damping and skip bit actually used for one plane group."""
    if not 3 <= luma_damping <= 6:
        raise ValueError(f"luma damping {luma_damping} outside 3..6")
    if plane not in (LUMA, CHROMA):
        raise ValueError(f"unknown plane group {plane!r}")
    if plane == CHROMA and not chroma_signaled(subsampling):
        return PlaneSetting(0, 0, 0, False, active=False)
    pri, sec_idx, skip = preset.fields(plane)
    sec = decode_secondary(sec_idx)
    if pri == 0 and sec == 0 and skip:
        pri, sec = SPECIAL_PRIMARY, SPECIAL_SECONDARY
    damping = luma_damping if plane == LUMA else luma_damping - 1
    if pri:
        damping = max(damping, floor_log2(pri))
    shift = bit_depth - 8
    return PlaneSetting(pri << shift, sec << shift, damping + shift, bool(skip))


def block_filter_enable(fb_coded: bool, unit_coded: bool, skip_bit: bool) -> bool:
    if not fb_coded:
        return False
    return bool(unit_coded or skip_bit)


def fb_preset_map(params: FrameParams, fb_coded: np.ndarray) -> np.ndarray:
    """Preset index per filter block (raster order ids), -1 where not coded."""
    out = np.full(fb_coded.shape, -1, np.int64)
    flat = np.flatnonzero(fb_coded.ravel())
    if len(flat) != len(params.fb_preset_ids):
        raise ValueError("preset id count does not match coded filter blocks")
    out.ravel()[flat] = params.fb_preset_ids
    return out
