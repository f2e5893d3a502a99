"""Binary side files: the parameter sidecar ("CDF1") and skip maps ("CDSK").

All multi-byte integers are little-endian.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .frame import SkipMap
from .params import Bitstring

SIDECAR_MAGIC = b"CDF1"
SIDECAR_VERSION = 1
SKIP_MAGIC = b"CDSK"
SUBSAMPLING_CODES = {"400": 0, "420": 1, "422": 2, "444": 3}
_CODE_TO_SS = {v: k for k, v in SUBSAMPLING_CODES.items()}


class FormatError(ValueError):
    pass


@dataclass
class Sidecar:
    width: int
    height: int
    bit_depth: int
    subsampling: str
    frames: List[Bitstring] = field(default_factory=list)

    def to_bytes(self) -> bytes:
        out = [
            SIDECAR_MAGIC,
            struct.pack(
                "<BHHBB",
                SIDECAR_VERSION,
                self.width,
                self.height,
                self.bit_depth,
                SUBSAMPLING_CODES[self.subsampling],
            ),
        ]
        for bits in self.frames:
            nbytes = (bits.length + 7) // 8
            out.append(struct.pack("<I", bits.length))
            out.append(bits.data[:nbytes].ljust(nbytes, b"\0"))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Sidecar":
        if data[:4] != SIDECAR_MAGIC:
            raise FormatError("not a CDF1 sidecar")
        if len(data) < 11:
            raise FormatError("truncated sidecar header")
        version, w, h, bd, code = struct.unpack_from("<BHHBB", data, 4)
        if version != SIDECAR_VERSION:
            raise FormatError(f"unsupported sidecar version {version}")
        if code not in _CODE_TO_SS:
            raise FormatError(f"bad subsampling code {code}")
        car = cls(w, h, bd, _CODE_TO_SS[code])
        pos = 11
        while pos < len(data):
            if pos + 4 > len(data):
                raise FormatError("truncated frame length")
            (nbits,) = struct.unpack_from("<I", data, pos)
            pos += 4
            nbytes = (nbits + 7) // 8
            if pos + nbytes > len(data):
                raise FormatError("truncated frame payload")
            car.frames.append(Bitstring(bytes(data[pos : pos + nbytes]), nbits))
            pos += nbytes
        return car


def read_sidecar(path) -> Sidecar:
    with open(path, "rb") as f:
        return Sidecar.from_bytes(f.read())


def write_sidecar(car: Sidecar, path) -> None:
    with open(path, "wb") as f:
        f.write(car.to_bytes())


def skip_map_to_bytes(skip: SkipMap) -> bytes:
    rows, cols = skip.coded.shape
    packed = np.packbits(skip.coded.astype(np.uint8), axis=1, bitorder="big")
    return SKIP_MAGIC + struct.pack("<HH", cols, rows) + packed.tobytes()


def skip_map_from_bytes(data: bytes) -> SkipMap:
    if data[:4] != SKIP_MAGIC:
        raise FormatError("not a CDSK skip map")
    cols, rows = struct.unpack_from("<HH", data, 4)
    stride = (cols + 7) // 8
    body = data[8:]
    if len(body) != rows * stride:
        raise FormatError(f"skip map body is {len(body)} bytes, expected {rows * stride}")
    raw = np.frombuffer(body, np.uint8).reshape(rows, stride)
    bits = np.unpackbits(raw, axis=1, bitorder="big")[:, :cols]
    return SkipMap(bits.astype(bool))


def read_skip_map(path) -> SkipMap:
    with open(path, "rb") as f:
        return skip_map_from_bytes(f.read())


def write_skip_map(skip: SkipMap, path) -> None:
    with open(path, "wb") as f:
        f.write(skip_map_to_bytes(skip))
