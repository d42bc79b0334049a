"""Restarted local search (RLS) with space-filling restart points."""
from __future__ import annotations

import numpy as np

from .. import geometry as geo
from ..sampling import SobolGenerator, scale_to_bounds
from .base import Driver, check_random_state
from .local_search import local_search


class RestartedLocalSearch(Driver):
    """Quasi-Newton local searches on symmetry fitness from many starts.

    The first start is the center of the bounds; later starts are
    consecutive points of a digitally shifted Sobol stream keyed by
    ``random_state``. The evaluation budget is shared: each restart may use
    the remaining budget divided by the remaining restarts (optionally capped
    by ``max_evals_per_restart``), so early convergence leaves more for later
    restarts.

    Parameters
    ----------
    restarts : int
        Number of local searches (= number of returned solutions).
    rho : float
        Initial step as a fraction of each gene's range.
    budget : int or None
        Total evaluations; defaults to ``restarts * 257``.
    max_evals_per_restart : int or None
    method : {"gauss-newton", "lbfgs"}
    bounds, random_state
        As for :class:`VoronoiElites`.
    """

    def __init__(self, restarts=100, rho=0.065, budget=None, max_evals_per_restart=None,
                 method="gauss-newton", bounds="A", random_state=None):
        self.restarts = restarts
        self.rho = rho
        self.budget = budget
        self.max_evals_per_restart = max_evals_per_restart
        self.method = method
        self.bounds = bounds
        self.random_state = random_state

    def _validate_params(self):
        if int(self.restarts) < 1:
            raise ValueError("restarts must be >= 1")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.budget is not None and int(self.budget) < int(self.restarts):
            raise ValueError("budget must allow at least one evaluation per restart")
        self._bounds()

    def start_points(self) -> np.ndarray:
        bounds = self._bounds()
        n = int(self.restarts)
        rng = check_random_state(self.random_state)
        seed = int(rng.integers(0, 2**32))
        starts = [bounds.center]
        if n > 1:
            starts.extend(scale_to_bounds(SobolGenerator(geo.N_GENES, seed).next(n - 1), bounds))
        return np.array(starts)

    def fit(self, X=None, y=None):
        """Run all restarts. ``X`` optionally supplies the start points."""
        self._validate_params()
        bounds = self._bounds()
        starts = self.start_points() if X is None else geo.check_genomes(X, bounds)
        n = len(starts)
        budget = int(self.budget) if self.budget is not None else n * 257
        used = 0
        genomes, fitness, results = [], [], []
        for k, x0 in enumerate(starts):
            share = (budget - used) // (n - k)
            if self.max_evals_per_restart is not None:
                share = min(share, int(self.max_evals_per_restart))
            res = local_search(x0, bounds, rho=self.rho, max_evals=max(share, 1),
                               method=self.method)
            used += res.n_evals
            genomes.append(res.genome)
            fitness.append(res.fitness)
            results.append(res)
        self.genomes_ = np.array(genomes)
        self.fitness_ = np.array(fitness)
        self.bitmaps_ = geo.rasterize_batch(geo.express_batch(self.genomes_))
        self.results_ = results
        self.n_evals_ = used
        return self
