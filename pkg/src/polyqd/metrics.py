"""Distance-based diversity indicators.

All indicators take a point set and a distance. Points are either genomes
(rows of a 2-D array) or bitmaps (a 3-D stack); a distance is a metric name
understood by :func:`pairwise_distances` or a callable on two items.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

SPD_THETA_GENETIC = 1.0
SPD_THETA_PHENOTYPIC = 100.0
PD_EXPONENT = 0.1
# Above this condition number the Solow-Polasky system is ridge-regularized.
SPD_MAX_CONDITION = 1e10
# Largest set evaluated with exact subset dynamic programming in pure diversity.
PD_EXACT_LIMIT = 12


@dataclass(frozen=True)
class MetricConfig:
    spd_theta: float = SPD_THETA_GENETIC
    pd_norm_exponent: float = PD_EXPONENT
    ridge: float = 1e-9

    def __post_init__(self):
        if self.spd_theta <= 0:
            raise ValueError("spd_theta must be positive")
        if not 0 < self.pd_norm_exponent < 1:
            raise ValueError("pd_norm_exponent must lie in (0, 1)")


def l_fractional_dissimilarity(a, b, p: float = PD_EXPONENT) -> float:
    """``(sum |a_k - b_k|^p)^(1/p)``, the fractional Minkowski dissimilarity."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if p <= 0:
        raise ValueError("p must be positive")
    return float(np.sum(np.abs(a - b) ** p) ** (1.0 / p))


def _flatten(points) -> np.ndarray:
    x = np.asarray(points)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim > 2:
        x = x.reshape(len(x), -1)
    return x


def pairwise_distances(points, metric="euclidean", p: float = PD_EXPONENT) -> np.ndarray:
    """Square distance matrix.

    ``metric`` is ``"euclidean"``, ``"hamming"`` (fraction of differing
    entries), ``"pixel"`` (count of differing entries), ``"lfrac"``
    (fractional Minkowski with exponent ``p``) or a callable on two items.
    """
    if callable(metric):
        items = list(points)
        n = len(items)
        d = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                d[i, j] = d[j, i] = metric(items[i], items[j])
        return d
    x = _flatten(points)
    if len(x) < 2:
        return np.zeros((len(x), len(x)))
    if metric == "euclidean":
        return squareform(pdist(x.astype(float), "euclidean"))
    if metric == "hamming":
        return squareform(pdist(x.astype(bool), "hamming"))
    if metric == "pixel":
        return squareform(pdist(x.astype(bool), "hamming")) * x.shape[1]
    if metric == "lfrac":
        # pdist's minkowski rejects p < 1
        x = x.astype(float)
        d = np.zeros((len(x), len(x)))
        for i in range(len(x) - 1):
            d[i, i + 1 :] = np.sum(np.abs(x[i + 1 :] - x[i]) ** p, axis=1) ** (1.0 / p)
        return d + d.T
    raise ValueError(f"unknown metric {metric!r}")


def _as_distance_matrix(points, metric, precomputed: bool) -> np.ndarray:
    if precomputed:
        d = np.asarray(points, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("precomputed distances must be a square matrix")
        return d
    return pairwise_distances(points, metric)


def sdnn(points, metric="euclidean", precomputed: bool = False) -> float:
    """Sum over the set of each member's distance to its nearest neighbour."""
    d = _as_distance_matrix(points, metric, precomputed).copy()
    if len(d) < 2:
        raise ValueError("SDNN needs at least two points")
    np.fill_diagonal(d, np.inf)
    return float(d.min(axis=1).sum())


def solow_polasky(
    points,
    metric="euclidean",
    theta: float = SPD_THETA_GENETIC,
    ridge: float = 1e-9,
    precomputed: bool = False,
) -> float:
    """Effective number of species ``1^T M^-1 1`` with ``M_ij = exp(-theta d_ij)``.

    Duplicates make ``M`` singular. A well-conditioned ``M`` is solved as is;
    otherwise the system becomes ``M + eps I`` with ``eps`` starting at
    ``ridge`` and growing tenfold up to 1e-3 until the solve succeeds with a
    finite answer. The result is clamped to ``[1, N]``.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    d = _as_distance_matrix(points, metric, precomputed)
    n = len(d)
    if n == 0:
        raise ValueError("empty point set")
    if n == 1:
        return 1.0
    m = np.exp(-theta * d)
    ones = np.ones(n)
    eps = 0.0 if np.linalg.cond(m) < SPD_MAX_CONDITION else ridge
    while True:
        try:
            x = np.linalg.solve(m + eps * np.eye(n), ones)
            value = float(ones @ x)
            if np.isfinite(value):
                break
        except np.linalg.LinAlgError:
            pass
        if eps >= 1e-3:
            raise np.linalg.LinAlgError("Solow-Polasky system stays singular")
        eps = ridge if eps == 0.0 else eps * 10.0
    return float(np.clip(value, 1.0, n))


def _pd_exact(d: np.ndarray) -> float:
    """Pure diversity by dynamic programming over subsets, O(2^n n^2)."""
    n = len(d)
    full = (1 << n) - 1
    best = np.full(1 << n, -np.inf)
    for i in range(n):
        best[1 << i] = 0.0
    masks = sorted(range(1, full + 1), key=lambda m: bin(m).count("1"))
    members = [[i for i in range(n) if m >> i & 1] for m in range(full + 1)]
    for mask in masks:
        idx = members[mask]
        if len(idx) < 2:
            continue
        sub = d[np.ix_(idx, idx)].copy()
        np.fill_diagonal(sub, np.inf)
        nearest = sub.min(axis=1)
        best[mask] = max(best[mask & ~(1 << i)] + nearest[k] for k, i in enumerate(idx))
    return float(best[full])


def _pd_greedy(d: np.ndarray) -> float:
    """Farthest-first insertion from every start point; the best total wins.

    Inserting points one at a time and crediting each with its distance to the
    points already inserted is the reverse of the recursive removal that
    defines pure diversity, so every insertion order gives a lower bound.
    """
    n = len(d)
    best = 0.0
    for start in range(n):
        placed = np.zeros(n, dtype=bool)
        placed[start] = True
        nearest = d[start].copy()
        total = 0.0
        for _ in range(n - 1):
            cand = np.where(placed, -np.inf, nearest)
            k = int(np.argmax(cand))
            total += cand[k]
            placed[k] = True
            np.minimum(nearest, d[k], out=nearest)
        best = max(best, total)
    return float(best)


def pure_diversity(
    points,
    metric="lfrac",
    precomputed: bool = False,
    method: str = "auto",
) -> float:
    """Pure diversity: ``PD(X) = max_s [PD(X - s) + d(s, X - s)]`` with ``PD`` of
    a singleton equal to 0 and ``d(s, Y)`` the distance to the nearest member
    of ``Y``.

    ``method="exact"`` evaluates the recursion by subset dynamic programming,
    ``"greedy"`` uses farthest-first insertion (a lower bound), and
    ``"auto"`` picks exact up to ``PD_EXACT_LIMIT`` points.
    """
    d = _as_distance_matrix(points, metric, precomputed)
    n = len(d)
    if n == 0:
        raise ValueError("empty point set")
    if n == 1:
        return 0.0
    if method == "auto":
        method = "exact" if n <= PD_EXACT_LIMIT else "greedy"
    if method == "exact":
        return _pd_exact(d)
    if method == "greedy":
        return _pd_greedy(d)
    raise ValueError(f"unknown method {method!r}")


def diversity_report(genomes, bitmaps, config_genetic: MetricConfig | None = None,
                     config_phenotypic: MetricConfig | None = None) -> dict[str, float]:
    """All six diversity values: (SDNN, SPD, PD) in genetic and phenotypic space.

    Genetic distances are Euclidean on raw genes with the fractional norm for
    PD; phenotypic distances are normalized Hamming throughout.
    """
    cg = config_genetic or MetricConfig(spd_theta=SPD_THETA_GENETIC)
    cp = config_phenotypic or MetricConfig(spd_theta=SPD_THETA_PHENOTYPIC)
    g = np.asarray(genomes, dtype=float)
    b = np.asarray(bitmaps, dtype=bool)
    d_gen = pairwise_distances(g, "euclidean")
    d_gen_pd = pairwise_distances(g, "lfrac", p=cg.pd_norm_exponent)
    d_phen = pairwise_distances(b, "hamming")
    return {
        "sdnn_gen": sdnn(d_gen, precomputed=True),
        "spd_gen": solow_polasky(d_gen, theta=cg.spd_theta, ridge=cg.ridge, precomputed=True),
        "pd_gen": pure_diversity(d_gen_pd, precomputed=True),
        "sdnn_phen": sdnn(d_phen, precomputed=True),
        "spd_phen": solow_polasky(d_phen, theta=cp.spd_theta, ridge=cp.ridge, precomputed=True),
        "pd_phen": pure_diversity(d_phen, precomputed=True),
    }

