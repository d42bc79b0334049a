import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyqd import metrics as m


def brute_sdnn(x):
    n = len(x)
    return sum(min(np.linalg.norm(x[i] - x[j]) for j in range(n) if j != i) for i in range(n))


def recursive_pd(points, dis):
    """The defining recursion evaluated literally (exponential)."""
    cache = {}

    def pd(idx):
        if len(idx) == 1:
            return 0.0
        if idx in cache:
            return cache[idx]
        best = -math.inf
        for k, i in enumerate(idx):
            rest = idx[:k] + idx[k + 1:]
            best = max(best, pd(rest) + min(dis(points[i], points[j]) for j in rest))
        cache[idx] = best
        return best

    return pd(tuple(range(len(points))))


def test_sdnn_small_cases():
    assert m.sdnn([[0.0], [3.0]]) == 6
    assert m.sdnn([[0.0], [1.0], [3.0]]) == 4
    with pytest.raises(ValueError):
        m.sdnn([[1.0, 2.0]])


@pytest.mark.parametrize("n", [20, 50])
def test_sdnn_brute_force(n):
    x = np.random.default_rng(n).random((n, 16))
    assert m.sdnn(x) == pytest.approx(brute_sdnn(x), rel=1e-12)


def test_sdnn_scales_linearly():
    x = np.random.default_rng(1).random((15, 4))
    assert m.sdnn(3.5 * x) == pytest.approx(3.5 * m.sdnn(x), rel=1e-12)


def test_sdnn_hamming_on_bitmaps():
    rng = np.random.default_rng(2)
    b = rng.random((6, 64, 64)) < 0.5
    d = np.array([[np.mean(b[i] != b[j]) for j in range(6)] for i in range(6)])
    np.fill_diagonal(d, np.inf)
    assert m.sdnn(b, "hamming") == pytest.approx(d.min(1).sum(), rel=1e-12)


def test_spd_closed_forms():
    assert m.solow_polasky([[0.3, 0.1]]) == 1.0
    assert m.solow_polasky([[0.0], [0.0]]) == pytest.approx(1.0, abs=1e-6)
    d = math.log(2)
    assert m.solow_polasky([[0.0], [d]], theta=1.0) == pytest.approx(4 / 3, abs=1e-9)
    for theta, dist in [(1.0, 0.7), (100.0, 0.01), (3.0, 2.5)]:
        expected = 2 / (1 + math.exp(-theta * dist))
        assert m.solow_polasky([[0.0], [dist]], theta=theta) == pytest.approx(expected, abs=1e-9)


def test_spd_bounds_and_saturation():
    x = np.random.default_rng(4).random((12, 3))
    v = m.solow_polasky(x, theta=1.0)
    assert 1.0 <= v <= 12
    d = m.pairwise_distances(x)
    dmin = d[np.triu_indices(12, 1)].min()
    assert m.solow_polasky(x, theta=50.0 / dmin) > 12 - 1e-6


def test_spd_duplicate_twin():
    x = np.random.default_rng(5).random((10, 3))
    base = m.solow_polasky(x, theta=2.0)
    twin = m.solow_polasky(np.vstack([x, x[3:4]]), theta=2.0)
    assert abs(twin - base) < 1e-3


def test_spd_rejects_bad_theta():
    with pytest.raises(ValueError):
        m.solow_polasky([[0.0], [1.0]], theta=0.0)


def test_lfrac():
    assert m.l_fractional_dissimilarity([1, 2], [1, 2]) == 0
    assert m.l_fractional_dissimilarity([0.0], [1.0]) == pytest.approx(1.0)
    assert m.l_fractional_dissimilarity([0, 0], [1, 1], p=0.1) == pytest.approx(1024.0)
    with pytest.raises(ValueError):
        m.l_fractional_dissimilarity([0, 0], [1, 1, 1])


def test_pd_base_cases():
    assert m.pure_diversity([[0.5, 0.5]]) == 0.0
    a, b = np.array([0.1, 0.4]), np.array([0.7, 0.2])
    assert m.pure_diversity([a, b]) == pytest.approx(m.l_fractional_dissimilarity(a, b))
    with pytest.raises(ValueError):
        m.pure_diversity(np.empty((0, 2)))


@pytest.mark.parametrize("seed", range(10))
def test_pd_exact_matches_recursion(seed):
    rng = np.random.default_rng(seed)
    x = rng.random((int(rng.integers(2, 9)), 16))
    ref = recursive_pd(x, m.l_fractional_dissimilarity)
    assert m.pure_diversity(x, method="exact") == pytest.approx(ref, rel=1e-12)
    assert m.pure_diversity(x) == pytest.approx(ref, rel=1e-12)


def test_pd_greedy_is_lower_bound():
    rng = np.random.default_rng(11)
    for _ in range(20):
        x = rng.random((int(rng.integers(2, 9)), 16))
        assert m.pure_diversity(x, method="greedy") <= m.pure_diversity(x, method="exact") * (1 + 1e-12)


def test_pd_permutation_invariant():
    x = np.random.default_rng(6).random((7, 5))
    ref = m.pure_diversity(x)
    for perm in itertools.islice(itertools.permutations(range(7)), 0, 5040, 700):
        assert m.pure_diversity(x[list(perm)]) == pytest.approx(ref, rel=1e-12)
    big = np.random.default_rng(7).random((30, 5))
    order = np.random.default_rng(8).permutation(30)
    assert m.pure_diversity(big[order]) == pytest.approx(m.pure_diversity(big), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000))
def test_pd_monotone_under_addition(n, seed):
    x = np.random.default_rng(seed).random((n + 1, 4))
    assert m.pure_diversity(x[:n], method="exact") <= m.pure_diversity(x, method="exact") + 1e-12


def test_pd_hamming_for_bitmaps():
    rng = np.random.default_rng(9)
    b = rng.random((5, 64, 64)) < 0.3
    ref = recursive_pd(list(b), lambda p, q: float(np.mean(p != q)))
    assert m.pure_diversity(b, "hamming") == pytest.approx(ref, rel=1e-12)


def test_metric_config_validation():
    with pytest.raises(ValueError):
        m.MetricConfig(spd_theta=-1)
    with pytest.raises(ValueError):
        m.MetricConfig(pd_norm_exponent=1.5)


def test_diversity_report_keys_and_values(random_genomes):
    from polyqd import geometry as geo

    ev = geo.evaluate(random_genomes(10))
    rep = m.diversity_report(ev.genomes, ev.bitmaps)
    assert set(rep) == {"sdnn_gen", "spd_gen", "pd_gen", "sdnn_phen", "spd_phen", "pd_phen"}
    assert rep["sdnn_gen"] == pytest.approx(brute_sdnn(ev.genomes))
    assert rep["spd_phen"] == pytest.approx(
        m.solow_polasky(ev.bitmaps, "hamming", theta=100.0))
    assert all(np.isfinite(v) for v in rep.values())
