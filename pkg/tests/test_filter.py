import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdefkit.direction import LINE_TABLES
from cdefkit.filter import (
    DIRECTION_OFFSETS,
    BlockParams,
    PlaneSetting,
    UnitParams,
    adjust_primary_array,
    adjust_primary_strength,
    constraint,
    filter_pixel,
    filter_plane,
    filter_plane_reference,
    floor_log2,
    resolve_units,
    round_sixteenths,
    taps_for,
)
from cdefkit.frame import Plane


def test_constraint_examples():
    assert constraint(6, 4, 3) == 1
    assert constraint(-6, 4, 3) == -1
    assert constraint(8, 4, 3) == 0
    assert constraint(2, 4, 3) == 2
    assert constraint(5, 0, 3) == 0
    for s in range(16):
        assert constraint(0, s, 6) == 0


def test_constraint_rejects_low_damping():
    with pytest.raises(ValueError):
        constraint(1, 15, 2)


def test_adjust_examples():
    assert adjust_primary_strength(8, 512) == 0
    assert adjust_primary_strength(8, 2**16) == 2
    assert adjust_primary_strength(8, 2**28) == 8


def test_adjust_vector_matches_scalar():
    rng = np.random.default_rng(0)
    s = rng.integers(0, 20, 5000)
    v = (2 ** rng.uniform(0, 31, 5000)).astype(np.int64)
    got = adjust_primary_array(s, v)
    assert got.tolist() == [adjust_primary_strength(int(a), int(b)) for a, b in zip(s, v)]


def test_round_half_away_from_zero():
    assert [round_sixteenths(t) for t in (8, 7, -8, -7, 24, -24, 0)] == [1, 0, -1, 0, 2, -2, 0]


@pytest.mark.parametrize("d", range(8))
def test_far_offset_stays_on_line(d):
    # the far tap relative to any pixel with room lands on the same line
    (a, b), (c, e) = DIRECTION_OFFSETS[d]
    idx = LINE_TABLES.index[d]
    for i in range(2, 6):
        for j in range(2, 6):
            assert idx[i + c, j + e] == idx[i, j]


def test_taps_geometry():
    t = taps_for(2, 0)
    assert {(tp.offset, tp.weight) for tp in t.primary} == {
        ((0, 1), 4), ((0, -1), 4), ((0, 2), 2), ((0, -2), 2)
    }
    t0 = taps_for(0, 1)
    assert {tp.offset for tp in t0.primary} == {(-1, 1), (1, -1), (-2, 2), (2, -2)}
    assert {tp.weight for tp in t0.primary} == {3}
    for d in range(8):
        for parity in (0, 1):
            ts = taps_for(d, parity)
            assert len(ts.primary) == 4 and len(ts.secondary) == 8
            assert sum(tp.weight for tp in ts.primary) == 12
            assert sum(tp.weight for tp in ts.secondary) == 12
            sec_dirs = {(d + 2) % 8, (d + 6) % 8}
            want = {o for sd in sec_dirs for o in DIRECTION_OFFSETS[sd]}
            want |= {(-a, -b) for a, b in want}
            assert {tp.offset for tp in ts.secondary} == want
    with pytest.raises(ValueError):
        taps_for(8, 0)


def _neighbours(values):
    return lambda di, dj: values.get((di, dj))


def test_filter_pixel_worked_example():
    x = 100
    vals = {tp.offset: x for tp in taps_for(2, 0).all_taps()}
    vals.update({(0, 1): 104, (0, -1): 104, (0, 2): 108, (0, -2): 108})
    p = BlockParams(pri=4, sec=0, damping=3, direction=2)
    assert filter_pixel(x, _neighbours(vals), p) == 101


def test_filter_pixel_identities():
    flat = {tp.offset: 50 for tp in taps_for(5, 1).all_taps()}
    assert filter_pixel(50, _neighbours(flat), BlockParams(7, 4, 5, 5)) == 50
    rng = np.random.default_rng(3)
    noisy = {tp.offset: int(v) for tp, v in zip(taps_for(5, 0).all_taps(), rng.integers(0, 256, 12))}
    assert filter_pixel(77, _neighbours(noisy), BlockParams(0, 0, 3, 5)) == 77
    assert filter_pixel(77, _neighbours(noisy), BlockParams(9, 2, 4, 5, enabled=False)) == 77
    assert filter_pixel(77, lambda di, dj: None, BlockParams(15, 4, 6, 1)) == 77


@settings(max_examples=500, deadline=None)
@given(
    st.integers(0, 255),
    st.lists(st.one_of(st.none(), st.integers(0, 255)), min_size=12, max_size=12),
    st.integers(0, 7),
    st.sampled_from(list(range(16)) + [19]),
    st.sampled_from([0, 1, 2, 4, 7]),
    st.integers(3, 6),
)
def test_filter_pixel_clamp_bound(x, taps, d, pri, sec, damp):
    damp = max(damp, floor_log2(pri) if pri else 0)
    params = BlockParams(pri, sec, damp, d)
    vals = {tp.offset: v for tp, v in zip(taps_for(d, params.parity).all_taps(), taps)}
    y = filter_pixel(x, _neighbours(vals), params)
    seen = [x] + [v for v in vals.values() if v is not None]
    assert min(seen) <= y <= max(seen)


def test_linear_regime_matches_convolution():
    rng = np.random.default_rng(5)
    for _ in range(200):
        d = int(rng.integers(0, 8))
        x = int(rng.integers(40, 200))
        # diffs small enough that the constraint passes them unchanged
        params = BlockParams(15, 4, 6, d)
        ts = taps_for(d, params.parity)
        vals = {tp.offset: x + int(rng.integers(-3, 4)) for tp in ts.all_taps()}
        total = sum(tp.weight * (vals[tp.offset] - x) for tp in ts.all_taps())
        seen = list(vals.values()) + [x]
        expect = min(max(seen), max(min(seen), x + round_sixteenths(total)))
        assert filter_pixel(x, _neighbours(vals), params) == expect


def _random_units(rng, shape, shift=0, enabled_frac=0.8):
    pri = rng.choice(list(range(16)) + [19], shape)
    sec = rng.choice([0, 1, 2, 4, 7], shape)
    lo = np.maximum(3, np.where(pri > 0, np.floor(np.log2(np.maximum(pri, 1))), 0)).astype(np.int32)
    damp = lo + rng.integers(0, 2, shape)
    damp = np.minimum(damp, 6) + shift
    return UnitParams(
        rng.integers(0, 8, shape).astype(np.uint8),
        (pri << shift).astype(np.int32),
        (sec << shift).astype(np.int32),
        damp.astype(np.int32),
        (rng.random(shape) < enabled_frac).astype(np.uint8),
        shift,
    )


@pytest.mark.parametrize("h, w, bd", [(24, 32, 8), (19, 27, 10), (8, 8, 12), (13, 5, 8)])
def test_kernel_matches_reference(backend, h, w, bd):
    rng = np.random.default_rng(h * w + bd)
    top = 1 << bd
    base = rng.integers(0, top, (1, 1)) + rng.integers(-top // 16, top // 16, (h, w))
    plane = Plane(np.clip(base, 0, top - 1), bd)
    units = _random_units(rng, (-(-h // 8), -(-w // 8)), bd - 8)
    got = filter_plane(plane, units, backend=backend)
    ref = filter_plane_reference(plane, units)
    assert np.array_equal(got.samples, ref.samples)


def test_backends_identical_on_large_plane():
    from cdefkit import _backend

    if len(_backend.available()) < 2:
        pytest.skip("compiled kernel not built")
    rng = np.random.default_rng(9)
    plane = Plane(np.clip(128 + rng.normal(0, 20, (203, 157)), 0, 255).astype(np.uint16))
    units = _random_units(rng, (26, 20))
    outs = [filter_plane(plane, units, backend=b).samples for b in _backend.available()]
    assert all(np.array_equal(outs[0], o) for o in outs[1:])


def test_threads_identical(backend):
    rng = np.random.default_rng(11)
    plane = Plane(np.clip(128 + rng.normal(0, 20, (150, 90)), 0, 255).astype(np.uint16))
    units = _random_units(rng, (19, 12))
    a = filter_plane(plane, units, backend=backend, threads=1)
    for t in (2, 3, 8):
        assert np.array_equal(a.samples, filter_plane(plane, units, backend=backend, threads=t).samples)


def test_disabled_units_are_copied(backend):
    rng = np.random.default_rng(2)
    plane = Plane(rng.integers(0, 256, (40, 40)))
    assert np.array_equal(filter_plane(plane, UnitParams.disabled(5, 5), backend=backend).samples, plane.samples)
    units = _random_units(rng, (5, 5), enabled_frac=1.0)
    units.enabled[:] = 0
    units.enabled[2, 3] = 1
    out = filter_plane(plane, units, backend=backend).samples
    changed = out != plane.samples
    changed[16:24, 24:32] = False
    assert not changed.any()


def test_edge_unit_never_reads_outside(backend):
    # every unit touches the frame edge here
    rng = np.random.default_rng(4)
    plane = Plane(rng.integers(90, 110, (16, 16)))
    units = _random_units(rng, (2, 2), enabled_frac=1.0)
    got = filter_plane(plane, units, backend=backend).samples
    assert np.array_equal(got, filter_plane_reference(plane, units).samples)


def test_filter_plane_validates():
    plane = Plane(np.zeros((16, 16), np.uint16))
    with pytest.raises(ValueError):
        filter_plane(plane, UnitParams.disabled(3, 2))
    bad = UnitParams.disabled(2, 2)
    bad.enabled[:] = 1
    bad.pri[:] = 15
    bad.damping[:] = 2
    with pytest.raises(ValueError):
        filter_plane(plane, bad)


@pytest.mark.parametrize("d", [0, 2, 4, 6])
def test_directional_fixed_point(backend, d):
    # constant along lines of d, alternating 20/230 across lines; the jump of
    # 210 exceeds both zero points (15 * 2^3 = 120 and 4 * 2^4 = 64)
    i, j = np.mgrid[0:24, 0:24]
    k = {0: i + j, 2: i, 4: i - j, 6: j}[d]
    samples = np.where(k % 2 == 0, 20, 230)
    plane = Plane(samples)
    units = UnitParams(
        np.full((3, 3), d, np.uint8),
        np.full((3, 3), 15, np.int32),
        np.full((3, 3), 4, np.int32),
        np.full((3, 3), 6, np.int32),
        np.ones((3, 3), np.uint8),
        0,
    )
    assert np.array_equal(filter_plane(plane, units, backend=backend).samples, plane.samples)


def test_resolve_units_enable_rules():
    settings_ = [PlaneSetting(8, 2, 4, skip=False), PlaneSetting(8, 2, 4, skip=True)]
    preset = np.array([[0, 1, -1]])
    coded = np.array([[False, False, True]])
    dirs = np.zeros((1, 3), np.uint8)
    u = resolve_units(settings_, preset, coded, dirs, None, 0)
    assert u.enabled.tolist() == [[0, 1, 0]]
    assert u.pri.tolist() == [[0, 8, 0]]


def test_resolve_units_adjusts_luma_primary():
    s = [PlaneSetting(8 << 2, 4 << 2, 6, skip=False)]
    preset = np.zeros((1, 3), np.int64)
    coded = np.ones((1, 3), bool)
    contrast = np.array([[512, 2**16, 2**28]])
    u = resolve_units(s, preset, coded, np.zeros((1, 3), np.uint8), contrast, 2)
    assert u.pri.tolist() == [[0, 8, 32]]
    assert u.sec.tolist() == [[16, 16, 16]]
