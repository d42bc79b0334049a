"""Capacity-bounded Voronoi-Elites archive.

Every offspring is accepted. When the archive holds more than ``capacity``
elites, the closest pair in descriptor space (Euclidean) is found and its
lower-fitness member removed, repeatedly, until the capacity holds again.
The surviving descriptors act as generators of an unbounded Voronoi
tessellation; no centroids are fixed in advance.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from . import geometry as geo


@dataclass(frozen=True)
class Elite:
    genome: np.ndarray
    descriptor: np.ndarray
    fitness: float
    bitmap: np.ndarray | None
    birth_order: int


@dataclass(frozen=True)
class Removal:
    """One pruning step: ``removed`` lost against ``kept`` at distance ``distance``."""

    removed: int
    kept: int
    distance: float
    removed_fitness: float
    kept_fitness: float


class VEArchive:
    """Voronoi-Elites archive.

    Elites are stored in birth order in parallel arrays. Ties in the closest
    pair search go to the lexicographically smallest pair of birth orders; a
    fitness tie inside the pair removes the younger elite.
    """

    def __init__(self, capacity: int, descriptor_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        if descriptor_dim < 1:
            raise ValueError("descriptor_dim must be >= 1")
        self.capacity = int(capacity)
        self.descriptor_dim = int(descriptor_dim)
        self.genomes = np.empty((0, geo.N_GENES))
        self.descriptors = np.empty((0, self.descriptor_dim))
        self.fitness = np.empty(0)
        self.bitmaps = np.empty((0, geo.RESOLUTION, geo.RESOLUTION), dtype=bool)
        self.birth_order = np.empty(0, dtype=np.int64)
        self._dist = np.empty((0, 0))
        self._next_birth = 0
        self.removals: list[Removal] = []

    def __len__(self):
        return len(self.fitness)

    def __getitem__(self, i) -> Elite:
        return Elite(
            self.genomes[i].copy(),
            self.descriptors[i].copy(),
            float(self.fitness[i]),
            self.bitmaps[i].copy(),
            int(self.birth_order[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def insert(self, genomes, descriptors, fitness, bitmaps=None) -> "VEArchive":
        """Append a batch unconditionally; capacity may be exceeded until pruning."""
        g = np.atleast_2d(np.asarray(genomes, dtype=float))
        if g.size == 0:
            return self
        d = np.asarray(descriptors, dtype=float).reshape(len(g), -1)
        f = np.asarray(fitness, dtype=float).ravel()
        if d.shape[1] != self.descriptor_dim:
            raise ValueError(
                f"descriptor dimension {d.shape[1]} does not match archive ({self.descriptor_dim})"
            )
        if len(f) != len(g):
            raise ValueError("fitness and genome counts differ")
        if bitmaps is None:
            bitmaps = geo.rasterize_batch(geo.express_batch(g))
        b = np.asarray(bitmaps, dtype=bool).reshape(len(g), geo.RESOLUTION, geo.RESOLUTION)

        cross = cdist(self.descriptors, d)
        inner = cdist(d, d)
        self._dist = np.block([[self._dist, cross], [cross.T, inner]])
        self.genomes = np.vstack([self.genomes, g])
        self.descriptors = np.vstack([self.descriptors, d])
        self.fitness = np.concatenate([self.fitness, f])
        self.bitmaps = np.concatenate([self.bitmaps, b])
        births = np.arange(self._next_birth, self._next_birth + len(g))
        self.birth_order = np.concatenate([self.birth_order, births])
        self._next_birth += len(g)
        return self

    def insert_elites(self, elites) -> "VEArchive":
        elites = list(elites)
        if not elites:
            return self
        return self.insert(
            [e.genome for e in elites],
            [e.descriptor for e in elites],
            [e.fitness for e in elites],
            [e.bitmap for e in elites] if all(e.bitmap is not None for e in elites) else None,
        )

    def closest_pair(self) -> tuple[int, int]:
        """Indices ``(i, j)``, ``i < j``, of the closest pair of descriptors."""
        if len(self) < 2:
            raise ValueError("closest_pair needs at least two elites")
        upper = np.where(np.triu(np.ones_like(self._dist, dtype=bool), k=1), self._dist, np.inf)
        flat = int(np.argmin(upper))
        return divmod(flat, len(self))

    def prune_to_capacity(self) -> list[Removal]:
        """Remove closest-pair losers until the capacity holds; returns the log."""
        n = len(self)
        if n <= self.capacity:
            return []
        dist = np.where(np.triu(np.ones((n, n), dtype=bool), k=1), self._dist, np.inf)
        alive = np.ones(n, dtype=bool)
        row_arg = np.argmin(dist, axis=1)
        row_min = dist[np.arange(n), row_arg]
        log = []
        for _ in range(n - self.capacity):
            i = int(np.argmin(row_min))
            j = int(row_arg[i])
            # i < j and i is older; the younger one loses fitness ties
            loser, winner = (i, j) if self.fitness[i] < self.fitness[j] else (j, i)
            log.append(
                Removal(
                    removed=int(self.birth_order[loser]),
                    kept=int(self.birth_order[winner]),
                    distance=float(dist[i, j]),
                    removed_fitness=float(self.fitness[loser]),
                    kept_fitness=float(self.fitness[winner]),
                )
            )
            alive[loser] = False
            dist[loser, :] = np.inf
            dist[:, loser] = np.inf
            row_min[loser] = np.inf
            stale = np.flatnonzero(alive & (row_arg == loser))
            if stale.size:
                row_arg[stale] = np.argmin(dist[stale], axis=1)
                row_min[stale] = dist[stale, row_arg[stale]]
        self._keep(alive)
        self.removals.extend(log)
        return log

    def _keep(self, mask: np.ndarray) -> None:
        self.genomes = self.genomes[mask]
        self.descriptors = self.descriptors[mask]
        self.fitness = self.fitness[mask]
        self.bitmaps = self.bitmaps[mask]
        self.birth_order = self.birth_order[mask]
        self._dist = self._dist[np.ix_(mask, mask)]

    def select_random(self, k: int, rng) -> np.ndarray:
        """Indices of ``k`` uniform draws with replacement."""
        if len(self) == 0:
            raise ValueError("cannot select from an empty archive")
        return rng.integers(0, len(self), size=k)

    def replace_descriptors(self, descriptors) -> "VEArchive":
        """Swap in new descriptors for all elites (e.g. after retraining an encoder)."""
        d = np.asarray(descriptors, dtype=float).reshape(len(self), -1)
        self.descriptor_dim = d.shape[1]
        self.descriptors = d
        self._dist = cdist(d, d)
        return self

    # -- serialization -------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(
            ["birth_order", "fitness"]
            + [f"g{k}" for k in range(geo.N_GENES)]
            + [f"d{k}" for k in range(self.descriptor_dim)]
        )
        for i in range(len(self)):
            w.writerow(
                [int(self.birth_order[i]), repr(float(self.fitness[i]))]
                + [repr(float(v)) for v in self.genomes[i]]
                + [repr(float(v)) for v in self.descriptors[i]]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, capacity: int | None = None) -> "VEArchive":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty archive CSV")
        header, body = rows[0], rows[1:]
        n_desc = sum(1 for h in header if h.startswith("d"))
        arch = cls(capacity or max(len(body), 1), max(n_desc, 1))
        if not body:
            return arch
        data = np.array(body, dtype=float)
        genomes = data[:, 2 : 2 + geo.N_GENES]
        arch.insert(genomes, data[:, 2 + geo.N_GENES :], data[:, 1])
        arch.birth_order = data[:, 0].astype(np.int64)
        arch._next_birth = int(arch.birth_order.max()) + 1
        return arch
