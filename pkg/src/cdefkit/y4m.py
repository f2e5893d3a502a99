"""YUV4MPEG2 reading and writing (mono/420/422/444, 8/10/12-bit)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .frame import Frame, Plane, chroma_shape

MAGIC = b"YUV4MPEG2"


class Y4MError(ValueError):
    pass


def parse_colorspace(tag: Optional[str]):
    """'C' tag value -> (subsampling, bit_depth)."""
    if tag is None:
        return "420", 8
    t = tag
    if t.startswith("mono"):
        rest = t[4:]
        return "400", int(rest) if rest else 8
    for ss in ("420", "422", "444"):
        if t.startswith(ss):
            rest = t[3:]
            if rest in ("", "jpeg", "paldv", "mpeg2"):
                return ss, 8
            if rest.startswith("p") and rest[1:].isdigit():
                return ss, int(rest[1:])
    raise Y4MError(f"unsupported colorspace tag C{tag}")


def colorspace_tag(subsampling: str, bit_depth: int) -> str:
    if subsampling == "400":
        return "mono" if bit_depth == 8 else f"mono{bit_depth}"
    return subsampling if bit_depth == 8 else f"{subsampling}p{bit_depth}"


@dataclass
class Y4MStream:
    width: int
    height: int
    subsampling: str = "420"
    bit_depth: int = 8
    frame_rate: str = "30:1"
    header_params: List[str] = field(default_factory=list)
    frames: List[Frame] = field(default_factory=list)
    frame_params: List[bytes] = field(default_factory=list)

    def header(self) -> bytes:
        if self.header_params:
            return b" ".join([MAGIC] + [p.encode() for p in self.header_params]) + b"\n"
        parts = [
            f"W{self.width}",
            f"H{self.height}",
            f"F{self.frame_rate}",
            "Ip",
            "A1:1",
            f"C{colorspace_tag(self.subsampling, self.bit_depth)}",
        ]
        return b" ".join([MAGIC] + [p.encode() for p in parts]) + b"\n"

    def plane_shapes(self):
        shapes = [(self.height, self.width)]
        if self.subsampling != "400":
            cs = chroma_shape(self.height, self.width, self.subsampling)
            shapes += [cs, cs]
        return shapes

    def frame_bytes(self) -> int:
        bps = 1 if self.bit_depth == 8 else 2
        return sum(h * w for h, w in self.plane_shapes()) * bps

    def with_frames(self, frames) -> "Y4MStream":
        return Y4MStream(
            self.width,
            self.height,
            self.subsampling,
            self.bit_depth,
            self.frame_rate,
            list(self.header_params),
            list(frames),
            list(self.frame_params) if len(self.frame_params) == len(frames) else [],
        )


def parse_header(line: bytes) -> Y4MStream:
    tokens = line.rstrip(b"\n").split(b" ")
    if tokens[0] != MAGIC:
        raise Y4MError("missing YUV4MPEG2 signature")
    params = [t.decode("ascii") for t in tokens[1:] if t]
    width = height = None
    tag = None
    rate = "30:1"
    for p in params:
        key, val = p[0], p[1:]
        if key == "W":
            width = int(val)
        elif key == "H":
            height = int(val)
        elif key == "C":
            tag = val
        elif key == "F":
            rate = val
    if not width or not height:
        raise Y4MError("header lacks W/H")
    subsampling, bit_depth = parse_colorspace(tag)
    if bit_depth not in (8, 10, 12):
        raise Y4MError(f"unsupported bit depth {bit_depth}")
    return Y4MStream(width, height, subsampling, bit_depth, rate, params)


def decode_y4m(data: bytes) -> Y4MStream:
    nl = data.find(b"\n")
    if nl < 0:
        raise Y4MError("unterminated header")
    stream = parse_header(data[: nl + 1])
    pos = nl + 1
    size = stream.frame_bytes()
    dtype = np.dtype(np.uint8) if stream.bit_depth == 8 else np.dtype("<u2")
    while pos < len(data):
        end = data.find(b"\n", pos)
        if end < 0 or not data.startswith(b"FRAME", pos):
            raise Y4MError(f"bad frame marker at byte {pos}")
        stream.frame_params.append(data[pos + 5 : end])
        pos = end + 1
        if pos + size > len(data):
            raise Y4MError(
                f"short frame {len(stream.frames)}: need {size} bytes, have {len(data) - pos}"
            )
        raw = np.frombuffer(data, dtype=dtype, count=size // dtype.itemsize, offset=pos)
        pos += size
        planes, off = [], 0
        for h, w in stream.plane_shapes():
            planes.append(Plane(raw[off : off + h * w].reshape(h, w), stream.bit_depth))
            off += h * w
        chroma = None if len(planes) == 1 else (planes[1], planes[2])
        stream.frames.append(Frame(planes[0], chroma, stream.subsampling))
    return stream


def encode_y4m(stream: Y4MStream) -> bytes:
    out = [stream.header()]
    dtype = np.dtype(np.uint8) if stream.bit_depth == 8 else np.dtype("<u2")
    for k, frame in enumerate(stream.frames):
        extra = stream.frame_params[k] if k < len(stream.frame_params) else b""
        out.append(b"FRAME" + extra + b"\n")
        for p in frame.planes:
            out.append(p.samples.astype(dtype).tobytes())
    return b"".join(out)


def read_y4m(path) -> Y4MStream:
    with open(path, "rb") as f:
        return decode_y4m(f.read())


def write_y4m(stream: Y4MStream, path) -> None:
    with open(path, "wb") as f:
        f.write(encode_y4m(stream))
