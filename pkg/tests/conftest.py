import functools

import numpy as np
import pytest

from cdefkit import _backend
from cdefkit.frame import Frame, Plane


def to_ycbcr420(rgb: np.ndarray) -> Frame:
    """BT.601 full-range conversion with 2x2 box-filtered chroma."""
    rgb = rgb.astype(np.float64)
    y = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    cb = 128 + 0.564 * (rgb[..., 2] - y)
    cr = 128 + 0.713 * (rgb[..., 0] - y)
    h, w = y.shape

    def q(a):
        return np.clip(np.rint(a), 0, 255).astype(np.uint16)

    def ds(a):
        return a.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))

    return Frame(Plane(q(y)), (Plane(q(ds(cb))), Plane(q(ds(cr)))), "420")


@functools.lru_cache(maxsize=None)
def astronaut() -> Frame:
    from skimage import data

    return to_ycbcr420(data.astronaut())


@functools.lru_cache(maxsize=None)
def camera() -> Frame:
    from skimage import data

    return Frame(Plane(data.camera().astype(np.uint16)), None, "400")


def random_frame(rng, h, w, subsampling="420", bit_depth=8) -> Frame:
    from cdefkit.frame import chroma_shape

    top = 1 << bit_depth

    def plane(shape):
        # smooth field plus noise; pure noise barely exercises the filter
        yy, xx = np.mgrid[0 : shape[0], 0 : shape[1]]
        base = (top // 2) + (top // 4) * np.sin(xx / 5.0 + rng.uniform(0, 6)) * np.cos(yy / 7.0)
        noise = rng.normal(0, top / 40, shape)
        return Plane(np.clip(np.rint(base + noise), 0, top - 1).astype(np.uint16), bit_depth)

    luma = plane((h, w))
    if subsampling == "400":
        return Frame(luma, None, "400")
    cs = chroma_shape(h, w, subsampling)
    return Frame(luma, (plane(cs), plane(cs)), subsampling)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=_backend.available())
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
