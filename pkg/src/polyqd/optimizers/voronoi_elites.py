"""Voronoi-Elites: mutation-only elitist search over a self-organizing archive."""
from __future__ import annotations

import numpy as np

from .. import geometry as geo
from ..archive import VEArchive
from ..sampling import scale_to_bounds, sobol_points
from .base import Driver, check_random_state, gaussian_mutate

DESCRIPTOR_MODES = ("genetic", "feature")


def feature_descriptors(evaluation: geo.Evaluation, bounds: geo.DomainBounds) -> np.ndarray:
    """(area, circumference) scaled to [0, 1] by fixed domain ranges.

    Area is already a pixel fraction; circumference is divided by the
    perimeter of the largest admissible regular octagon, so self-intersecting
    shapes may exceed 1.
    """
    f = evaluation.features.copy()
    f[:, 1] /= bounds.max_perimeter
    return f


class VoronoiElites(Driver):
    """Voronoi-Elites on the polygon domain.

    Parameters
    ----------
    capacity : int
        Maximum number of elites (niches). Also the number of offspring per
        generation and the size of the initial Sobol population.
    generations : int
        Number of offspring batches after initialization.
    mutation_sigma : float
        Standard deviation of the Gaussian mutation as a fraction of each
        gene's range.
    descriptor : {"genetic", "feature"}
        Niching space: the raw genome, or normalized (area, circumference).
    bounds : str or DomainBounds
        Neutrality case ``"A"``-``"E"``.
    random_state : int, Generator or None

    Attributes
    ----------
    archive_ : VEArchive
    genomes_, fitness_, bitmaps_, descriptors_ : ndarray
        Final elites.
    n_evals_ : int
        ``capacity * (generations + 1)`` on completion.
    history_ : list of dict
        Per-generation archive size, median and max fitness.
    """

    def __init__(self, capacity=100, generations=256, mutation_sigma=0.1,
                 descriptor="feature", bounds="A", random_state=None):
        self.capacity = capacity
        self.generations = generations
        self.mutation_sigma = mutation_sigma
        self.descriptor = descriptor
        self.bounds = bounds
        self.random_state = random_state

    def _validate_params(self):
        if int(self.capacity) < 1:
            raise ValueError("capacity must be >= 1")
        if int(self.generations) < 1:
            raise ValueError("generations must be >= 1")
        if not 0 < self.mutation_sigma <= 1:
            raise ValueError("mutation_sigma must lie in (0, 1]")
        if self.descriptor not in self._descriptor_modes():
            raise ValueError(f"descriptor must be one of {self._descriptor_modes()}")
        self._bounds()

    def _descriptor_modes(self):
        return DESCRIPTOR_MODES

    def _descriptor_dim(self) -> int:
        return geo.N_GENES if self.descriptor == "genetic" else 2

    def describe(self, evaluation: geo.Evaluation) -> np.ndarray:
        if self.descriptor == "genetic":
            return evaluation.genomes.copy()
        return feature_descriptors(evaluation, self._bounds())

    def _initial_genomes(self, X):
        bounds = self._bounds()
        if X is None:
            return scale_to_bounds(sobol_points(int(self.capacity), geo.N_GENES), bounds)
        return geo.check_genomes(X, bounds)

    def _start(self, X, rng=None):
        self._validate_params()
        self._rng = check_random_state(self.random_state if rng is None else rng)
        self.archive_ = VEArchive(int(self.capacity), self._descriptor_dim())
        self.n_evals_ = 0
        self.history_ = []
        init = self._initial_genomes(X)
        ev = geo.evaluate(init)
        self.n_evals_ += len(ev)
        self.archive_.insert(ev.genomes, self.describe(ev), ev.fitness, ev.bitmaps)
        self.archive_.prune_to_capacity()
        self._record()

    def _step(self, n_generations: int):
        bounds = self._bounds()
        archive = self.archive_
        for _ in range(n_generations):
            parents = archive.genomes[archive.select_random(int(self.capacity), self._rng)]
            children = gaussian_mutate(parents, self.mutation_sigma, bounds, self._rng)
            ev = geo.evaluate(children)
            self.n_evals_ += len(ev)
            archive.insert(ev.genomes, self.describe(ev), ev.fitness, ev.bitmaps)
            archive.prune_to_capacity()
            self._record()

    def _record(self):
        f = self.archive_.fitness
        self.history_.append(
            {"size": len(f), "median_fitness": float(np.median(f)), "max_fitness": float(f.max()),
             "n_evals": self.n_evals_}
        )

    def _finish(self):
        a = self.archive_
        self.genomes_ = a.genomes.copy()
        self.fitness_ = a.fitness.copy()
        self.bitmaps_ = a.bitmaps.copy()
        self.descriptors_ = a.descriptors.copy()
        return self

    def fit(self, X=None, y=None):
        """Run the search. ``X`` optionally replaces the Sobol initial population."""
        self._start(X)
        self._step(int(self.generations))
        return self._finish()
