import itertools

import numpy as np
import pytest

from polyqd import geometry as geo
from polyqd.experiments import Cell, ExperimentConfig, make_estimator
from polyqd.optimizers import (NSGA2, RestartedLocalSearch, VoronoiElites, crowding_distance,
                               dominates, gaussian_mutate, local_search, nondominated_sort)
from polyqd.optimizers.nsga2 import objectives_from_features
from tests.conftest import regular


# -- mutation --------------------------------------------------------------------

def test_zero_sigma_is_identity():
    g = regular(0.3, 0.01)
    assert np.array_equal(gaussian_mutate(g, 0.0, "A", np.random.default_rng(0)), g)


def test_mutation_clips_to_bounds():
    g = regular(1.0, 0.05)
    out = gaussian_mutate(np.tile(g, (500, 1)), 1.0, "A", np.random.default_rng(1))
    assert geo.get_bounds("A").contains(out)
    assert np.any(out[:, :8] == 1.0)


def test_mutation_sigma_statistics():
    b = geo.get_bounds("A")
    out = gaussian_mutate(np.tile(b.center, (100_000, 1)), 0.1, b, np.random.default_rng(2))
    # centre radius 0.5 sits 5 sigma from either bound, so clipping is negligible
    assert np.std(out[:, 0]) == pytest.approx(0.1, rel=0.02)
    assert np.std(out[:, 8]) == pytest.approx(0.1 * 0.1, rel=0.02)


# -- NSGA-II building blocks --------------------------------------------------------

def naive_fronts(obj):
    remaining = list(range(len(obj)))
    fronts = []
    while remaining:
        front = [i for i in remaining
                 if not any(dominates(obj[j], obj[i]) for j in remaining if j != i)]
        fronts.append(sorted(front))
        remaining = [i for i in remaining if i not in front]
    return fronts


def test_nondominated_sort_examples():
    assert [f.tolist() for f in nondominated_sort([[0.0, 0.0]])] == [[0]]
    # (A, l) = (1,1), (2,2), (2,1) with A maximized and l minimized
    obj = objectives_from_features(np.array([[1.0, 1.0], [2.0, 2.0], [2.0, 1.0]]))
    assert [sorted(f.tolist()) for f in nondominated_sort(obj)] == [[2], [0, 1]]


@pytest.mark.parametrize("seed", range(4))
def test_nondominated_sort_matches_naive(seed):
    rng = np.random.default_rng(seed)
    obj = rng.integers(0, 6, size=(30, 2)).astype(float)
    fronts = [sorted(f.tolist()) for f in nondominated_sort(obj)]
    assert fronts == naive_fronts(obj)
    assert sorted(itertools.chain(*fronts)) == list(range(30))


def test_crowding_distance_examples():
    assert np.all(np.isinf(crowding_distance([[0.0, 1.0], [1.0, 0.0]])))
    d = crowding_distance([[0.0, 2.0], [1.0, 1.0], [2.0, 0.0]])
    assert np.isinf(d[0]) and np.isinf(d[2])
    assert d[1] == pytest.approx(2.0)
    # a copy flanked by copies of itself adds nothing to the spread
    dup = crowding_distance([[0.0, 2.0], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [2.0, 0.0]])
    assert dup[2] == 0.0


# -- local search ------------------------------------------------------------------

def test_local_search_keeps_symmetric_start():
    g = regular(0.5)
    res = local_search(g, "A")
    assert res.fitness >= 1 - 1e-9
    assert np.allclose(res.genome, g, atol=1e-6)


@pytest.mark.parametrize("method", ["gauss-newton", "lbfgs"])
def test_local_search_repairs_one_radius(method):
    g = regular(0.5)
    g[2] += 0.05
    res = local_search(g, "A", method=method, max_evals=5000)
    assert res.fitness >= 0.999
    assert geo.get_bounds("A").contains(res.genome)
    assert np.all(np.diff(res.trajectory) >= 0)
    assert res.fitness >= geo.evaluate(g).fitness[0]


def test_local_search_respects_budget_and_bounds(random_genomes):
    for g in random_genomes(5, "E"):
        res = local_search(g, "E", max_evals=100)
        assert res.n_evals <= 100
        assert geo.get_bounds("E").contains(res.genome)
        assert np.all(np.diff(res.trajectory) >= 0)


# -- drivers -----------------------------------------------------------------------

def test_ve_contract():
    ve = VoronoiElites(capacity=25, generations=10, bounds="A", random_state=0).fit()
    assert len(ve.genomes_) == 25
    assert np.all((ve.fitness_ > 0) & (ve.fitness_ <= 1))
    assert ve.n_evals_ == 25 * 11
    assert geo.get_bounds("A").contains(ve.genomes_)
    assert [h["size"] for h in ve.history_][-1] == 25


def test_ve_rejects_bad_config_before_evaluating():
    with pytest.raises(ValueError):
        VoronoiElites(generations=0).fit()
    with pytest.raises(ValueError):
        VoronoiElites(descriptor="latent").fit()
    with pytest.raises(ValueError):
        VoronoiElites(mutation_sigma=0).fit()


def test_ve_genetic_descriptors_are_genomes():
    ve = VoronoiElites(capacity=10, generations=3, descriptor="genetic", bounds="B",
                       random_state=1).fit()
    assert np.array_equal(ve.descriptors_, ve.genomes_)


def test_nsga2_contract():
    nsga = NSGA2(population=30, generations=15, bounds="A", random_state=0).fit()
    assert len(nsga.genomes_) == 30
    assert nsga.n_evals_ == 30 * 16
    obj = nsga.objectives_
    front = obj[nsga.front_]
    assert not any(dominates(a, b) for a in obj for b in front)


def test_nsga2_is_elitist():
    # the non-dominated set of the merged history never loses ground
    nsga = NSGA2(population=20, generations=1, bounds="B", random_state=4)
    first = nsga.fit().objectives_[nsga.front_]
    second = NSGA2(population=20, generations=6, bounds="B", random_state=4).fit()
    for p in first:
        assert not any(dominates(p, q) for q in second.objectives_[second.front_])


def test_rls_single_restart_from_center():
    rls = RestartedLocalSearch(restarts=1, bounds="B", random_state=0).fit()
    assert len(rls.genomes_) == 1
    assert rls.results_[0].trajectory[0] == pytest.approx(
        geo.evaluate(geo.get_bounds("B").center).fitness[0])


def test_rls_budget_and_starts():
    rls = RestartedLocalSearch(restarts=6, budget=600, bounds="C", random_state=3)
    starts = rls.start_points()
    assert np.array_equal(starts[0], geo.get_bounds("C").center)
    assert len(np.unique(starts, axis=0)) == 6
    rls.fit()
    assert rls.n_evals_ <= 600
    assert geo.get_bounds("C").contains(rls.genomes_)
    with pytest.raises(ValueError):
        RestartedLocalSearch(restarts=5, budget=3).fit()


def test_budget_parity():
    cfg = ExperimentConfig.preset("desk", "neutrality_sweep", generations=8)
    counts = {}
    for alg in ("ve-feature", "rls", "nsga2"):
        est = make_estimator(Cell("neutrality_sweep", "B", alg, 20, 0), cfg).fit()
        counts[alg] = est.n_evals_
    budget = cfg.eval_budget(20)
    assert counts["ve-feature"] == counts["nsga2"] == budget
    assert budget - 20 <= counts["rls"] <= budget


@pytest.mark.parametrize("make", [
    lambda s: VoronoiElites(capacity=12, generations=5, bounds="D", random_state=s),
    lambda s: NSGA2(population=12, generations=5, bounds="D", random_state=s),
    lambda s: RestartedLocalSearch(restarts=3, budget=120, bounds="D", random_state=s),
])
def test_seed_determinism(make):
    a, b, c = make(7).fit(), make(7).fit(), make(8).fit()
    assert np.array_equal(a.genomes_, b.genomes_)
    assert np.array_equal(a.fitness_, b.fitness_)
    assert not np.array_equal(a.genomes_, c.genomes_)


def test_sklearn_params_round_trip():
    ve = VoronoiElites(capacity=7, bounds="E")
    assert ve.get_params()["capacity"] == 7
    assert ve.set_params(generations=3).generations == 3
