"""Apply signalled frame parameters to a decoded frame.

This is the one path both the encoder-side search and the sidecar decoder go
through, so the two always agree bit for bit.
"""

from __future__ import annotations

from typing import Optional

from .direction import DirectionMap, search_plane
from .filter import filter_plane, frame_units
from .frame import Frame, SkipMap, partition
from .params import CHROMA, LUMA, FrameParams, fb_preset_map, resolve_effective


def plane_settings(params: FrameParams, frame: Frame):
    luma = [
        resolve_effective(p, LUMA, frame.bit_depth, frame.subsampling, params.damping)
        for p in params.presets
    ]
    chroma = [
        resolve_effective(p, CHROMA, frame.bit_depth, frame.subsampling, params.damping)
        for p in params.presets
    ]
    return luma, chroma


def apply_params(
    frame: Frame,
    params: FrameParams,
    skip_map: Optional[SkipMap] = None,
    dirmap: Optional[DirectionMap] = None,
    backend=None,
    threads: int = 1,
) -> Frame:
    grid = partition(frame)
    if skip_map is None:
        skip_map = SkipMap.all_coded(grid)
    skip_map.check(grid)
    if dirmap is None:
        dirmap = search_plane(frame.luma, backend=backend, threads=threads)
    fb_coded = skip_map.fb_coded(grid)
    fb_preset = fb_preset_map(params, fb_coded)
    luma, chroma = plane_settings(params, frame)
    units = frame_units(frame, luma, chroma, fb_preset, skip_map.coded, dirmap)
    planes = [
        filter_plane(p, u, backend=backend, threads=threads) for p, u in zip(frame.planes, units)
    ]
    return frame.replace_planes(planes)
