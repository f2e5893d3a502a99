"""End-to-end encode (search + sidecar) and decode (sidecar -> filtered) paths."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .apply import apply_params
from .degrade import degrade
from .direction import DirectionMap, count_operations, search_plane
from .formats import Sidecar
from .frame import Frame, SkipMap, partition
from .metrics import frame_psnr
from .params import Bitstring, FrameParams, pack, unpack
from .search import (
    SearchConfig,
    build_table,
    damping_from_q,
    default_lambda,
    q_index_from_step,
    select_presets,
    to_frame_params,
)

# per-block tallies of the instrumented direction search (data independent)
_, _BLOCK_OPS = count_operations([[128] * 8] * 8)


@dataclass
class FrameStats:
    index: int
    psnr_decoded: Dict[str, float]
    psnr_filtered: Dict[str, float]
    num_presets: int
    presets: List[str]
    direction_histogram: List[int]
    cost: float
    bits: int
    seconds: Dict[str, float]
    op_counts: Dict[str, int]


@dataclass
class SearchResult:
    filtered: Frame
    params: FrameParams
    bits: Bitstring
    dirmap: DirectionMap
    stats: Optional[FrameStats] = None


def config_for(q_step: Optional[float] = None, **overrides) -> SearchConfig:
    """Search defaults; lambda and damping follow q_step unless given."""
    kw = dict(overrides)
    if q_step is not None:
        if kw.get("lam") is None:
            kw["lam"] = default_lambda(q_step)
        if kw.get("damping") is None:
            kw["damping"] = damping_from_q(q_index_from_step(q_step))
    kw = {k: v for k, v in kw.items() if v is not None}
    return SearchConfig(**kw)


def encode_frame(
    source: Frame,
    decoded: Frame,
    config: SearchConfig,
    skip_map: Optional[SkipMap] = None,
    index: int = 0,
) -> SearchResult:
    grid = partition(decoded)
    if skip_map is None:
        skip_map = SkipMap.all_coded(grid)
    t0 = time.perf_counter()
    dirmap = search_plane(decoded.luma, backend=config.backend, threads=config.threads)
    t1 = time.perf_counter()
    table = build_table(source, decoded, dirmap, config, skip_map)
    t2 = time.perf_counter()
    sel = select_presets(table, config)
    params = to_frame_params(sel, table, config, decoded.subsampling)
    bits = pack(params, skip_map.fb_coded(grid), decoded.subsampling)
    t3 = time.perf_counter()
    filtered = apply_params(
        decoded, params, skip_map, dirmap, backend=config.backend, threads=config.threads
    )
    t4 = time.perf_counter()
    units = grid.unit_rows * grid.unit_cols
    stats = FrameStats(
        index=index,
        psnr_decoded=frame_psnr(source, decoded),
        psnr_filtered=frame_psnr(source, filtered),
        num_presets=len(params.presets),
        presets=[_preset_str(p) for p in params.presets],
        direction_histogram=dirmap.histogram(),
        cost=sel.cost,
        bits=bits.length,
        seconds={
            "direction": t1 - t0,
            "table": t2 - t1,
            "select": t3 - t2,
            "filter": t4 - t3,
        },
        op_counts={k: v * units for k, v in _BLOCK_OPS.as_dict().items()},
    )
    return SearchResult(filtered, params, bits, dirmap, stats)


def decode_frame(
    decoded: Frame,
    bits: Bitstring,
    skip_map: Optional[SkipMap] = None,
    backend=None,
    threads: int = 1,
) -> Frame:
    grid = partition(decoded)
    if skip_map is None:
        skip_map = SkipMap.all_coded(grid)
    params = unpack(bits, skip_map.fb_coded(grid), decoded.subsampling)
    return apply_params(decoded, params, skip_map, backend=backend, threads=threads)


def _preset_str(p) -> str:
    return (
        f"Y(pri={p.luma_pri},sec_idx={p.luma_sec_idx},skip={p.luma_skip}) "
        f"C(pri={p.chroma_pri},sec_idx={p.chroma_sec_idx},skip={p.chroma_skip})"
    )


@dataclass
class RunOutput:
    filtered: List[Frame]
    decoded: List[Frame]
    sidecar: Sidecar
    stats: List[FrameStats] = field(default_factory=list)


def run_pipeline(
    source: List[Frame],
    decoded: Optional[List[Frame]] = None,
    q_step: Optional[float] = None,
    config: Optional[SearchConfig] = None,
    skip_map: Optional[SkipMap] = None,
) -> RunOutput:
    """Search every frame; decoded frames are synthesised from q_step if absent."""
    if decoded is None:
        if q_step is None:
            raise ValueError("need decoded frames or a q_step to synthesise them")
        decoded = [degrade(f, q_step) for f in source]
    if len(decoded) != len(source):
        raise ValueError("source and decoded frame counts differ")
    if config is None:
        config = config_for(q_step)
    first = decoded[0]
    car = Sidecar(first.luma.width, first.luma.height, first.bit_depth, first.subsampling)
    out = RunOutput([], list(decoded), car)
    for k, (src, dec) in enumerate(zip(source, decoded)):
        res = encode_frame(src, dec, config, skip_map, index=k)
        out.filtered.append(res.filtered)
        car.frames.append(res.bits)
        out.stats.append(res.stats)
    return out


def decode_stream(
    decoded: List[Frame], car: Sidecar, skip_map: Optional[SkipMap] = None, backend=None, threads: int = 1
) -> List[Frame]:
    if len(decoded) != len(car.frames):
        raise ValueError(f"{len(decoded)} frames but sidecar holds {len(car.frames)}")
    first = decoded[0] if decoded else None
    if first is not None and (
        (first.luma.width, first.luma.height, first.bit_depth, first.subsampling)
        != (car.width, car.height, car.bit_depth, car.subsampling)
    ):
        raise ValueError("sidecar does not match the stream geometry")
    return [decode_frame(f, b, skip_map, backend, threads) for f, b in zip(decoded, car.frames)]
