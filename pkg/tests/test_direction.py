from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from blocks import checkerboard, diagonal, line_pattern, stripes, structured_blocks
from cdefkit.direction import (
    LCM,
    LINE_TABLES,
    SSD_SCALE,
    count_operations,
    directional_ssd,
    directional_ssd_scaled,
    line_index,
    search_direction,
    search_direction_oracle,
    search_plane,
)
from cdefkit.frame import Plane

block8 = arrays(np.int64, (8, 8), elements=st.integers(0, 255))


def test_line_table_shape():
    assert LINE_TABLES.num_lines == (15, 11, 8, 11, 15, 11, 8, 11)
    assert sum(LINE_TABLES.num_lines) == 90
    for d in range(8):
        assert sum(LINE_TABLES.counts[d]) == 64
        assert all(1 <= n <= 8 for n in LINE_TABLES.counts[d])
        assert all(f * n == LCM for f, n in zip(LINE_TABLES.factors[d], LINE_TABLES.counts[d]))
    assert LINE_TABLES.counts[1][0] == 2
    assert LINE_TABLES.counts[1][4] == 8


def test_line_index_examples():
    assert line_index(2, 3, 5) == 3
    assert line_index(1, 0, 1) == 0
    assert line_index(6, 7, 0) == 0
    with pytest.raises(ValueError):
        line_index(8, 0, 0)


def test_constant_block():
    r = search_direction(np.full((8, 8), 128))
    assert r.direction == 0 and r.contrast == 0 and set(r.scores) == {0}
    d, ssd = search_direction_oracle(np.full((8, 8), 77))
    assert d == 0 and set(ssd) == {0}


def test_horizontal_stripes():
    r = search_direction(stripes(96, 160))
    assert r.direction == 2
    assert r.scores[2] == 55_050_240
    d, ssd = search_direction_oracle(stripes(96, 160))
    assert d == 2 and ssd[2] == 0


def test_45_degree_pattern_selects_direction_0():
    i, j = np.mgrid[0:8, 0:8]
    blk = 40 + 11 * ((i + j) % 5) + 3 * (i + j)
    assert search_direction(blk).direction == 0


def test_contrast_definition():
    r = search_direction(diagonal(1, 3))
    assert r.contrast == r.scores[r.direction] - r.scores[(r.direction + 4) % 8]
    assert r.contrast >= 0
    assert max(r.scores) == r.scores[r.direction]


@pytest.mark.parametrize("d", range(8))
def test_line_constant_block_has_zero_ssd(d):
    blk = line_pattern(d, 3)
    ssd = directional_ssd(blk)
    assert ssd[d] == 0
    assert search_direction(blk).direction == search_direction_oracle(blk)[0]


@settings(max_examples=300, deadline=None)
@given(block8)
def test_search_matches_oracle(blk):
    r = search_direction(blk)
    d, ssd = search_direction_oracle(blk)
    assert r.direction == d
    x = blk - 128
    energy = int((x * x).sum())
    for k in range(8):
        assert LCM * energy == LCM * ssd[k] + r.scores[k]


@settings(max_examples=200, deadline=None)
@given(block8)
def test_scaled_oracle_matches_fraction_oracle(blk):
    scaled = directional_ssd_scaled((blk - 128)[None])[0]
    assert [Fraction(int(v), SSD_SCALE) for v in scaled] == directional_ssd(blk)


@settings(max_examples=200, deadline=None)
@given(block8)
def test_transpose_maps_direction_scores(blk):
    # reflecting about the main diagonal sends direction d to (8 - d) mod 8
    s = search_direction(blk).scores
    st_ = search_direction(blk.T).scores
    assert list(st_) == [s[(8 - d) % 8] for d in range(8)]
    e = directional_ssd(blk)
    et = directional_ssd(blk.T)
    assert et == [e[(8 - d) % 8] for d in range(8)]


def test_ties_pick_lowest_direction():
    # a checkerboard scores equally in several directions
    r = search_direction(checkerboard(100, 101))
    best = max(r.scores)
    assert r.direction == r.scores.index(best)
    assert search_direction_oracle(checkerboard(100, 101))[0] == r.direction


def test_high_bit_depth_downshifts():
    blk = stripes(96, 160)
    assert search_direction(blk * 4 + 3, 10) == search_direction(blk)
    assert search_direction(blk * 16 + 15, 12) == search_direction(blk)


def test_rejects_partial_block():
    with pytest.raises(ValueError):
        search_direction(np.zeros((7, 8)))


@pytest.mark.parametrize("blk", [np.zeros((8, 8)), np.full((8, 8), 255), checkerboard()])
def test_32_bit_bound_on_extremes(blk):
    r, ops = count_operations(blk)
    assert ops.max_magnitude <= 2**31 - 1
    x = np.asarray(blk, np.int64) - 128
    assert LCM * int((x * x).sum()) <= 2**31 - 1
    assert all(0 <= s <= 2**31 - 1 for s in r.scores)


@settings(max_examples=100, deadline=None)
@given(block8)
def test_op_counts(blk):
    r, ops = count_operations(blk)
    assert r == search_direction(blk)
    assert ops.line_sums == 90
    assert ops.multiplies == 124
    assert ops.comparisons == 7
    assert ops.additions == 376


def test_structured_patterns_agree():
    for blk in structured_blocks():
        assert search_direction(blk).direction == search_direction_oracle(blk)[0]


def test_plane_search_backends_agree(backend, rng):
    samples = rng.integers(0, 1024, (37, 45))
    plane = Plane(samples, 10)
    dm = search_plane(plane, backend=backend)
    assert dm.directions.shape == (5, 6)
    assert sum(dm.histogram()) == 30
    padded = np.pad(samples, ((0, 3), (0, 3)), mode="edge")
    for r in range(5):
        for c in range(6):
            ref = search_direction(padded[r * 8 : r * 8 + 8, c * 8 : c * 8 + 8], 10)
            assert dm.directions[r, c] == ref.direction
            assert dm.contrasts[r, c] == ref.contrast
            assert tuple(dm.scores[r, c]) == ref.scores


def test_plane_search_threads_identical(backend, rng):
    plane = Plane(rng.integers(0, 256, (130, 70)))
    a = search_plane(plane, backend=backend, threads=1)
    b = search_plane(plane, backend=backend, threads=8)
    assert np.array_equal(a.directions, b.directions)
    assert np.array_equal(a.scores, b.scores)
