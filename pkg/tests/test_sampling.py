import numpy as np
import pytest

from polyqd import geometry as geo
from polyqd.sampling import (MAX_DIMENSION, SobolGenerator, scale_to_bounds, sobol_points,
                             unscale_from_bounds)

# first eight 2-D points of the unscrambled sequence, as printed by scipy.stats.qmc.Sobol
SOBOL_2D = [[0.0, 0.0], [0.5, 0.5], [0.75, 0.25], [0.25, 0.75],
            [0.375, 0.375], [0.875, 0.875], [0.625, 0.125], [0.125, 0.625]]
SOBOL_16D_ROW5 = [0.875, 0.875, 0.125, 0.375, 0.875, 0.625, 0.875, 0.375,
                  0.375, 0.125, 0.375, 0.875, 0.875, 0.125, 0.875, 0.375]


def test_first_one_dimensional_points():
    assert sobol_points(4, 1)[:, 0].tolist() == [0.0, 0.5, 0.75, 0.25]


def test_frozen_reference_points():
    assert sobol_points(8, 2).tolist() == SOBOL_2D
    assert sobol_points(6, 16)[5].tolist() == SOBOL_16D_ROW5


def test_matches_reference_implementation():
    qmc = pytest.importorskip("scipy.stats.qmc")
    ref = qmc.Sobol(16, scramble=False).random_base2(10)
    assert np.array_equal(sobol_points(1024, 16), ref)


@pytest.mark.parametrize("k", [1, 2, 4, 6, 8])
@pytest.mark.parametrize("block", [0, 1, 3])
def test_dyadic_balance(k, block):
    # blocks aligned at multiples of 2^k form a digital net
    n = 2 ** k
    offset = block * n
    pts = sobol_points(offset + n, 2)[offset:]
    for d in range(2):
        assert np.sum(pts[:, d] < 0.5) == n // 2
    # every dyadic box of volume 1/n holds exactly one point
    if k % 2 == 0:
        m = 2 ** (k // 2)
        cells = (pts * m).astype(int)
        assert len({tuple(c) for c in cells}) == n


def test_stream_continues_where_it_stopped():
    g = SobolGenerator(3)
    a = np.vstack([g.next(5), g.next(11)])
    assert np.array_equal(a, sobol_points(16, 3))
    assert np.array_equal(sobol_points(8, 3, skip=8), sobol_points(16, 3)[8:])


def test_scrambled_stream_deterministic_and_distinct():
    a = SobolGenerator(16, scramble_seed=5).next(32)
    b = SobolGenerator(16, scramble_seed=5).next(32)
    c = SobolGenerator(16, scramble_seed=6).next(32)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.all((a >= 0) & (a < 1))
    # XOR scrambling keeps the digital-net balance
    assert np.sum(a[:, 0] < 0.5) == 16


def test_dimension_limit():
    with pytest.raises(ValueError):
        SobolGenerator(MAX_DIMENSION + 1)
    with pytest.raises(ValueError):
        SobolGenerator(2).next(0)


def _star_discrepancy_2d(pts):
    # exact for small sets: check boxes anchored at the origin with corners on the grid
    xs = np.r_[np.unique(pts[:, 0]), 1.0]
    ys = np.r_[np.unique(pts[:, 1]), 1.0]
    n = len(pts)
    worst = 0.0
    for x in xs:
        inside_x = pts[:, 0] < x
        closed_x = pts[:, 0] <= x
        for y in ys:
            vol = x * y
            open_count = np.sum(inside_x & (pts[:, 1] < y))
            closed_count = np.sum(closed_x & (pts[:, 1] <= y))
            worst = max(worst, vol - open_count / n, closed_count / n - vol)
    return worst


def test_lower_discrepancy_than_random():
    sob = _star_discrepancy_2d(sobol_points(256, 2))
    rand = [_star_discrepancy_2d(np.random.default_rng(s).random((256, 2))) for s in range(20)]
    assert sob < np.median(rand)


def test_scale_to_bounds():
    a = geo.get_bounds("A")
    assert np.array_equal(scale_to_bounds(np.zeros((1, 16)), a)[0], a.lower)
    mid = scale_to_bounds(np.full((1, 16), 0.5), a)[0]
    np.testing.assert_allclose(mid[:8], 0.5)
    np.testing.assert_allclose(mid[8:], 0.0, atol=1e-15)
    p = np.random.default_rng(0).random((10, 16))
    for case in "ACE":
        np.testing.assert_allclose(unscale_from_bounds(scale_to_bounds(p, case), case), p,
                                   atol=1e-12)
