import math

import numpy as np
import pytest

from conftest import astronaut, camera, random_frame
from cdefkit.degrade import degrade
from cdefkit.direction import search_plane
from cdefkit.frame import SkipMap, partition
from cdefkit.search import (
    DistortionTable,
    SearchConfig,
    build_table,
    candidate_fields,
    candidate_index,
    candidate_subset,
    cdef_distortion,
    damping_from_q,
    exhaustive_select,
    greedy_select,
    q_index_from_step,
    rd_cost,
    refine,
    select_presets,
    unit_distortion,
)


def table_of(luma, chroma=None):
    luma = np.asarray(luma, np.float64)
    if chroma is None:
        chroma = np.zeros((luma.shape[0], 1))
    chroma = np.asarray(chroma, np.float64)
    return DistortionTable(luma, chroma, list(range(luma.shape[1])), list(range(chroma.shape[1])))


def test_cdef_distortion_examples():
    src = np.full((8, 8), 100.0)
    assert cdef_distortion(src, src) == 0
    assert cdef_distortion(src, src + 4) == pytest.approx(181.02, abs=0.01)
    i, j = np.mgrid[0:8, 0:8]
    s = 128 + 10 * np.where((i + j) % 2, 1, -1)
    d = s + math.sqrt(1000 / 64)
    assert cdef_distortion(s, d) == pytest.approx(1015.5, abs=0.05)


def test_cdef_distortion_properties():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 256, (16, 24)).astype(float)
    b = a + rng.integers(-3, 4, a.shape)
    per_unit = unit_distortion(a, b, "cdef", 8)
    assert per_unit.shape == (2, 3)
    assert cdef_distortion(a, b) == pytest.approx(per_unit.sum())
    # variance-matched: a positive multiple of SSE
    c = a[:8, :8]
    ratio = cdef_distortion(c, c + 2) / (64 * 4)
    assert ratio > 0
    assert cdef_distortion(c, c + 3) / (64 * 9) == pytest.approx(ratio)
    assert cdef_distortion(c, c) == 0 and cdef_distortion(c, c + 1) > 0
    sse = unit_distortion(a, b, "sse", 8)
    assert sse.sum() == pytest.approx(((a - b) ** 2).sum())
    with pytest.raises(ValueError):
        unit_distortion(a, b, "ssim", 8)


def test_damping_from_q():
    assert damping_from_q(0) == 3
    assert damping_from_q(255) == 6
    assert damping_from_q(100) == 4
    with pytest.raises(ValueError):
        damping_from_q(256)
    assert q_index_from_step(40) == 160
    assert q_index_from_step(1000) == 255


def test_candidates():
    assert len(candidate_subset()) == 128
    fast = candidate_subset(fast=True)
    assert len(fast) == 72 and candidate_index(0, 0, 0) in fast
    for c in range(128):
        assert candidate_index(*candidate_fields(c)) == c


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(lam=-1)
    with pytest.raises(ValueError):
        SearchConfig(lam=float("nan"))
    with pytest.raises(ValueError):
        SearchConfig(max_presets=3)
    with pytest.raises(ValueError):
        SearchConfig(metric="psnr")


def test_single_block_picks_argmin():
    t = table_of([[5.0, 3.0, 3.0, 9.0]])
    sel = greedy_select(t, SearchConfig())
    assert sel.presets == [(1, 0)] and sel.cost == 3.0 and sel.ids == [0]
    assert exhaustive_select(t, SearchConfig()).cost == sel.cost


def test_disjoint_blocks_both_selected():
    t = table_of([[1.0, 50.0, 60.0], [50.0, 2.0, 60.0]])
    sel = greedy_select(t, SearchConfig(max_presets=2))
    assert sorted(sel.presets) == [(0, 0), (1, 0)]
    assert sel.cost == 3.0
    assert sel.cost == exhaustive_select(t, SearchConfig(max_presets=2)).cost


def test_large_lambda_gives_one_preset():
    rng = np.random.default_rng(1)
    t = table_of(rng.uniform(0, 100, (10, 8)))
    assert select_presets(t, SearchConfig(lam=1e9)).n == 1


def test_ids_are_rowwise_minimum():
    rng = np.random.default_rng(2)
    t = table_of(rng.uniform(0, 100, (30, 16)), rng.uniform(0, 50, (30, 6)))
    sel = select_presets(t, SearchConfig(lam=5))
    m = np.stack([t.luma[:, l] + t.chroma[:, c] for l, c in sel.presets], axis=1)
    assert sel.ids == m.argmin(axis=1).tolist()
    j, dist, ids = rd_cost(t, sel.presets, 5)
    assert j == pytest.approx(sel.cost) and ids == sel.ids


def test_joint_chroma_choice():
    luma = [[1.0, 5.0], [5.0, 1.0]]
    chroma = [[0.0, 9.0], [9.0, 0.0]]
    sel = exhaustive_select(table_of(luma, chroma), SearchConfig(max_presets=2))
    assert sorted(sel.presets) == [(0, 0), (1, 1)] and sel.cost == 2.0


def test_refine_fixpoint_and_descent():
    # greedy picks column 0 first (best single), then is stuck with it
    t = table_of([[4.0, 0.0, 10.0], [4.0, 10.0, 0.0], [4.0, 10.0, 10.0]])
    cfg = SearchConfig(max_presets=2)
    g = greedy_select(t, cfg)
    hist = []
    r = refine(g, t, cfg, hist)
    assert r.cost <= g.cost
    assert all(b <= a for a, b in zip(hist, hist[1:]))
    opt = exhaustive_select(t, cfg)
    again = refine(opt, t, cfg)
    assert again.presets == opt.presets and again.cost == opt.cost


def test_greedy_matches_exhaustive_on_covering_case():
    rng = np.random.default_rng(3)
    luma = rng.uniform(50, 100, (12, 8))
    for b in range(12):
        luma[b, b % 8] = rng.uniform(0, 5)
    t = table_of(luma)
    cfg = SearchConfig(lam=0, max_presets=8)
    assert select_presets(t, cfg).cost == pytest.approx(sum(luma.min(axis=1)))


def test_greedy_near_optimal_in_aggregate():
    rng = np.random.default_rng(4)
    jg = jo = 0.0
    for _ in range(200):
        b = int(rng.integers(1, 7))
        t = table_of(rng.uniform(0, 1000, (b, 8)))
        cfg = SearchConfig(lam=float(rng.uniform(0, 200)), max_presets=2)
        g = select_presets(t, cfg)
        o = exhaustive_select(t, cfg)
        assert o.cost <= g.cost + 1e-9
        jg += g.cost
        jo += o.cost
    assert jg <= 1.01 * jo


def test_exhaustive_guard():
    t = table_of(np.zeros((50, 128)), np.zeros((50, 128)))
    with pytest.raises(ValueError):
        exhaustive_select(t, SearchConfig(max_presets=8))


def test_empty_table():
    t = table_of(np.zeros((0, 4)))
    sel = select_presets(t, SearchConfig())
    assert sel.ids == [] and sel.cost == 0


def _setup(frame, q):
    dec = degrade(frame, q)
    return dec, search_plane(dec.luma)


def test_build_table_basics(rng):
    src = random_frame(rng, 80, 136)
    dec, dm = _setup(src, 30)
    grid = partition(dec)
    coded = np.ones((grid.unit_rows, grid.unit_cols), bool)
    coded[:8, :8] = False  # filter block (0, 0) fully skipped
    coded[9, 10] = False
    skip = SkipMap(coded)
    t = build_table(src, dec, dm, SearchConfig(metric="sse"), skip)
    assert t.num_blocks == grid.num_fbs - 1
    assert (0, 0) not in t.fb_index
    assert (t.luma >= 0).all() and (t.chroma >= 0).all()
    # (pri 0, sec 0, skip 0) filters nothing
    col = t.luma_candidates.index(candidate_index(0, 0, 0))
    ref = unit_distortion(src.luma.samples, dec.luma.samples, "sse", 8)
    for row, (fr, fc) in enumerate(t.fb_index):
        want = ref[fr * 8 : fr * 8 + 8, fc * 8 : fc * 8 + 8].sum()
        assert t.luma[row, col] == pytest.approx(want)


def test_build_table_threads_identical(rng):
    src = random_frame(rng, 72, 72)
    dec, dm = _setup(src, 25)
    a = build_table(src, dec, dm, SearchConfig(fast=True, threads=1))
    b = build_table(src, dec, dm, SearchConfig(fast=True, threads=8))
    assert np.array_equal(a.luma, b.luma) and np.array_equal(a.chroma, b.chroma)


def test_build_table_422_has_no_chroma_columns(rng):
    src = random_frame(rng, 64, 64, "422")
    dec, dm = _setup(src, 25)
    t = build_table(src, dec, dm, SearchConfig(fast=True))
    assert t.chroma.shape == (1, 1) and t.chroma_candidates == [0]


def test_sse_selection_beats_best_single_candidate(rng):
    src = random_frame(rng, 128, 128)
    dec, dm = _setup(src, 35)
    t = build_table(src, dec, dm, SearchConfig(metric="sse"))
    sel = select_presets(t, SearchConfig(metric="sse", lam=0))
    single = (t.luma.sum(axis=0)[:, None] + t.chroma.sum(axis=0)[None, :]).min()
    assert sel.distortion <= single + 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("make", [astronaut, camera], ids=["astronaut", "camera"])
def test_reduced_candidates_within_one_percent(make):
    frame = make()
    dec, dm = _setup(frame, 40)
    full_cfg = SearchConfig(lam=0.03 * 40**2, damping=5)
    fast_cfg = SearchConfig(lam=0.03 * 40**2, damping=5, fast=True)
    jf = select_presets(build_table(frame, dec, dm, full_cfg), full_cfg).cost
    jr = select_presets(build_table(frame, dec, dm, fast_cfg), fast_cfg).cost
    assert jr - jf <= 0.01 * jf
