"""Shared estimator plumbing for the optimization drivers."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .. import geometry as geo
from .. import metrics


def check_random_state(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gaussian_mutate(genomes, sigma_fraction: float, bounds, rng) -> np.ndarray:
    """Add N(0, (sigma_fraction * range)^2) to every gene, then clip to bounds."""
    b = geo.get_bounds(bounds)
    g = np.asarray(genomes, dtype=float)
    if sigma_fraction == 0:
        return g.copy()
    noise = rng.standard_normal(g.shape) * (sigma_fraction * b.span)
    return b.clip(g + noise)


class SolutionSetMixin:
    """Accessors common to every driver once fitted.

    Subclasses set ``genomes_``, ``fitness_``, ``bitmaps_`` and ``n_evals_``.
    """

    def solutions(self):
        check_is_fitted(self, "genomes_")
        return self.genomes_, self.fitness_, self.bitmaps_

    def diversity(self) -> dict[str, float]:
        check_is_fitted(self, "genomes_")
        return metrics.diversity_report(self.genomes_, self.bitmaps_)

    def manifest(self) -> dict:
        check_is_fitted(self, "genomes_")
        params = {k: (v.name if isinstance(v, geo.DomainBounds) else v)
                  for k, v in self.get_params().items()}
        return {
            "algorithm": type(self).__name__,
            "params": params,
            "n_evals": int(self.n_evals_),
            "n_solutions": int(len(self.genomes_)),
        }


class Driver(SolutionSetMixin, BaseEstimator):
    """Base class; ``fit`` runs the optimizer and returns ``self``."""

    def _bounds(self) -> geo.DomainBounds:
        return geo.get_bounds(self.bounds)
