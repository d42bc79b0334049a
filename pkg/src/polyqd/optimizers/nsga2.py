"""NSGA-II baseline maximizing area and minimizing circumference."""
from __future__ import annotations

import numpy as np

from .. import geometry as geo
from ..sampling import scale_to_bounds, sobol_points
from .base import Driver, check_random_state


def dominates(a, b) -> bool:
    """``a`` dominates ``b`` under minimization."""
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def nondominated_sort(objectives) -> list[np.ndarray]:
    """Fast non-dominated sorting (minimization); returns index arrays per front."""
    obj = np.asarray(objectives, dtype=float)
    if obj.ndim == 1:
        obj = obj[:, None]
    n = len(obj)
    if n == 0:
        return []
    le = np.all(obj[:, None, :] <= obj[None, :, :], axis=2)
    lt = np.any(obj[:, None, :] < obj[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    count = dom.sum(axis=0)
    fronts = []
    current = np.flatnonzero(count == 0)
    while current.size:
        fronts.append(current)
        count = count - dom[current].sum(axis=0)
        count[current] = -1
        current = np.flatnonzero(count == 0)
    return fronts


def crowding_distance(objectives) -> np.ndarray:
    """Crowding distance of each member of one front.

    Boundary points get ``inf``; interior points sum, over objectives, the gap
    between their neighbours divided by that objective's range.
    """
    obj = np.asarray(objectives, dtype=float)
    if obj.ndim == 1:
        obj = obj[:, None]
    n, m = obj.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for k in range(m):
        order = np.argsort(obj[:, k], kind="stable")
        vals = obj[order, k]
        dist[order[0]] = dist[order[-1]] = np.inf
        span = vals[-1] - vals[0]
        if span > 0:
            dist[order[1:-1]] += (vals[2:] - vals[:-2]) / span
    return dist


def sbx_crossover(a, b, bounds, rng, eta: float = 20.0, gene_prob: float = 0.5):
    """Simulated binary crossover of two parent batches; children are clipped."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    u = rng.random(a.shape)
    beta = np.where(u <= 0.5, (2 * u) ** (1 / (eta + 1)), (1 / (2 * (1 - u))) ** (1 / (eta + 1)))
    swap = rng.random(a.shape) < gene_prob
    beta = np.where(swap, beta, 1.0)
    c1 = 0.5 * ((1 + beta) * a + (1 - beta) * b)
    c2 = 0.5 * ((1 - beta) * a + (1 + beta) * b)
    return bounds.clip(c1), bounds.clip(c2)


def objectives_from_features(feats) -> np.ndarray:
    """Minimization vector: (-area, circumference)."""
    f = np.asarray(feats, dtype=float)
    return np.column_stack([-f[:, 0], f[:, 1]])


class NSGA2(Driver):
    """Elitist (mu + lambda) NSGA-II on (area, circumference).

    Parameters
    ----------
    population : int
    generations : int
    crossover_prob : float
        Probability that a mated pair is recombined with SBX.
    mutation_prob : float
        Per-gene probability of Gaussian mutation.
    mutation_sigma : float
        Mutation standard deviation as a fraction of the gene range.
    eta : float
        SBX distribution index.
    bounds, random_state
        As for :class:`VoronoiElites`.

    Attributes
    ----------
    genomes_, fitness_, bitmaps_, objectives_ : ndarray
        Final population; ``objectives_`` holds (-area, circumference).
    front_ : ndarray
        Indices of the final non-dominated front.
    n_evals_ : int
    history_ : list of dict
    """

    def __init__(self, population=100, generations=256, crossover_prob=0.9,
                 mutation_prob=1.0 / 16, mutation_sigma=0.1, eta=20.0,
                 bounds="A", random_state=None):
        self.population = population
        self.generations = generations
        self.crossover_prob = crossover_prob
        self.mutation_prob = mutation_prob
        self.mutation_sigma = mutation_sigma
        self.eta = eta
        self.bounds = bounds
        self.random_state = random_state

    def _validate_params(self):
        if int(self.population) < 2:
            raise ValueError("population must be >= 2")
        if int(self.generations) < 1:
            raise ValueError("generations must be >= 1")
        for name in ("crossover_prob", "mutation_prob"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 0 < self.mutation_sigma <= 1:
            raise ValueError("mutation_sigma must lie in (0, 1]")
        self._bounds()

    @staticmethod
    def _rank_and_crowding(obj):
        rank = np.empty(len(obj), dtype=int)
        crowd = np.empty(len(obj))
        fronts = nondominated_sort(obj)
        for r, front in enumerate(fronts):
            rank[front] = r
            crowd[front] = crowding_distance(obj[front])
        return rank, crowd, fronts

    def _tournament(self, rank, crowd, rng, n):
        a = rng.integers(0, len(rank), n)
        b = rng.integers(0, len(rank), n)
        a_wins = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] >= crowd[b]))
        return np.where(a_wins, a, b)

    def _variation(self, parents, rng):
        bounds = self._bounds()
        n = len(parents)
        if n % 2:
            parents = np.vstack([parents, parents[:1]])
        a, b = parents[0::2], parents[1::2]
        c1, c2 = sbx_crossover(a, b, bounds, rng, self.eta)
        mate = rng.random(len(a)) < self.crossover_prob
        c1 = np.where(mate[:, None], c1, a)
        c2 = np.where(mate[:, None], c2, b)
        children = np.empty_like(parents)
        children[0::2], children[1::2] = c1, c2
        children = children[:n]
        hit = rng.random(children.shape) < self.mutation_prob
        noise = rng.standard_normal(children.shape) * (self.mutation_sigma * bounds.span)
        return bounds.clip(np.where(hit, children + noise, children))

    def fit(self, X=None, y=None):
        """Run NSGA-II. ``X`` optionally replaces the Sobol initial population."""
        self._validate_params()
        bounds = self._bounds()
        rng = check_random_state(self.random_state)
        mu = int(self.population)
        if X is None:
            X = scale_to_bounds(sobol_points(mu, geo.N_GENES), bounds)
        ev = geo.evaluate(geo.check_genomes(X, bounds))
        pop = ev
        obj = objectives_from_features(pop.features)
        self.n_evals_ = len(pop)
        self.history_ = []
        rank, crowd, _ = self._rank_and_crowding(obj)
        for _ in range(int(self.generations)):
            mating = self._tournament(rank, crowd, rng, mu)
            children = geo.evaluate(self._variation(pop.genomes[mating], rng))
            self.n_evals_ += len(children)
            merged = _concat(pop, children)
            m_obj = np.vstack([obj, objectives_from_features(children.features)])
            m_rank, m_crowd, fronts = self._rank_and_crowding(m_obj)
            keep = []
            for front in fronts:
                if len(keep) + len(front) <= mu:
                    keep.extend(front.tolist())
                else:
                    order = np.argsort(-m_crowd[front], kind="stable")
                    keep.extend(front[order[: mu - len(keep)]].tolist())
                    break
            keep = np.array(sorted(keep))
            pop = _take(merged, keep)
            obj = m_obj[keep]
            rank, crowd, _ = self._rank_and_crowding(obj)
            self.history_.append({"front_size": int(np.sum(rank == 0)),
                                  "median_fitness": float(np.median(pop.fitness)),
                                  "n_evals": self.n_evals_})
        self.genomes_ = pop.genomes
        self.fitness_ = pop.fitness
        self.bitmaps_ = pop.bitmaps
        self.objectives_ = obj
        self.front_ = np.flatnonzero(rank == 0)
        return self


def _concat(a: geo.Evaluation, b: geo.Evaluation) -> geo.Evaluation:
    return geo.Evaluation(*(np.concatenate([getattr(a, f), getattr(b, f)])
                            for f in ("genomes", "polygons", "bitmaps", "fitness", "features")))


def _take(a: geo.Evaluation, idx) -> geo.Evaluation:
    return geo.Evaluation(*(getattr(a, f)[idx]
                            for f in ("genomes", "polygons", "bitmaps", "fitness", "features")))
