"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback.  ``CDEFKIT_BACKEND=python`` forces the fallback.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["compiled"] = _ckernels


def _default_name() -> str:
    forced = os.environ.get("CDEFKIT_BACKEND")
    if forced:
        if forced not in BACKENDS:
            raise ImportError(f"CDEFKIT_BACKEND={forced!r} is not available")
        return forced
    return "compiled" if "compiled" in BACKENDS else "python"


DEFAULT = _default_name()


def available():
    return sorted(BACKENDS)


def get(name=None):
    if name is None:
        name = DEFAULT
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}") from None


def row_bands(n_rows: int, parts: int):
    """Split [0, n_rows) into at most ``parts`` contiguous bands."""
    parts = max(1, min(parts, n_rows))
    step, extra = divmod(n_rows, parts)
    bands, start = [], 0
    for k in range(parts):
        end = start + step + (1 if k < extra else 0)
        bands.append((start, end))
        start = end
    return bands


def parallel_map(fn, items, threads: int):
    """Ordered map; results never depend on the thread count."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
