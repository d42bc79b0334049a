"""Polygon domain: genome expression, rasterization, features and symmetry.

A genome holds 16 genes. The first eight are radius deviations of the eight
control points of an octagon, the last eight are their angular deviations in
units of pi radians. Control point ``i`` sits at polar angle
``2*pi*i/8 + theta_i*pi`` and radius ``r_i``; negative radii reflect the point
through the origin.

The phenotype is a 64x64 boolean raster covering ``[-1, 1]^2`` with row 0 at
the bottom, filled with the even-odd rule at pixel centers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_GENES = 16
N_VERTICES = 8
RESOLUTION = 64
N_PIXELS = RESOLUTION * RESOLUTION
N_BOUNDARY_SAMPLES = 1000

# Vertex coordinates are snapped to this grid so that genomes expressing the
# same control points through different angle sums rasterize identically.
_SNAP_DECIMALS = 12


class BoundsViolationError(ValueError):
    """A gene lies outside its domain bounds."""


class DegenerateShapeError(ValueError):
    """A polygon has zero perimeter."""


@dataclass(frozen=True)
class DomainBounds:
    """Box bounds for the radius genes and the angular genes.

    Angular bounds are in units of pi radians.
    """

    radial_min: float
    radial_max: float
    angular_min: float
    angular_max: float
    name: str = ""

    def __post_init__(self):
        if not self.radial_min < self.radial_max:
            raise ValueError("radial_min must be < radial_max")
        if not self.angular_min < self.angular_max:
            raise ValueError("angular_min must be < angular_max")

    @property
    def lower(self) -> np.ndarray:
        return np.r_[np.full(8, self.radial_min), np.full(8, self.angular_min)]

    @property
    def upper(self) -> np.ndarray:
        return np.r_[np.full(8, self.radial_max), np.full(8, self.angular_max)]

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def max_perimeter(self) -> float:
        """Perimeter of the regular octagon at the largest admissible radius."""
        r = max(abs(self.radial_min), abs(self.radial_max))
        return 16.0 * np.sin(np.pi / 8) * r

    def contains(self, genomes, atol: float = 1e-12) -> bool:
        g = np.asarray(genomes, dtype=float)
        return bool(np.all(g >= self.lower - atol) and np.all(g <= self.upper + atol))

    def clip(self, genomes) -> np.ndarray:
        return np.clip(genomes, self.lower, self.upper)


# Rows of the neutrality table. Column "axial" is the radius deviation and
# column "radial" the angular deviation (units of pi).
_CASES = {
    "A": (0.0, 1.0, -0.05, 0.05),
    "B": (0.0, 1.0, -0.125, 0.125),
    "C": (-0.25, 1.0, -0.25, 0.25),
    "D": (-0.5, 1.0, -0.5, 0.5),
    "E": (-1.0, 1.0, -1.0, 1.0),
}


def neutrality_cases() -> dict[str, DomainBounds]:
    """The five bounds cases A-E, ordered by increasing genetic neutrality."""
    return {k: DomainBounds(*v, name=k) for k, v in _CASES.items()}


def get_bounds(case) -> DomainBounds:
    if isinstance(case, DomainBounds):
        return case
    try:
        return DomainBounds(*_CASES[str(case).upper()], name=str(case).upper())
    except KeyError:
        raise ValueError(f"unknown bounds case {case!r}; expected one of A-E") from None


def check_genomes(genomes, bounds: DomainBounds | None = None) -> np.ndarray:
    """Validate a genome or batch of genomes; always returns shape (n, 16)."""
    g = np.asarray(genomes, dtype=float)
    if g.ndim == 1:
        g = g[None, :]
    if g.ndim != 2 or g.shape[1] != N_GENES:
        raise ValueError(f"genomes must have {N_GENES} genes, got shape {np.shape(genomes)}")
    if not np.all(np.isfinite(g)):
        raise ValueError("genomes contain non-finite values")
    if bounds is not None and not bounds.contains(g):
        raise BoundsViolationError(f"genome outside bounds case {bounds.name or bounds}")
    return g


def express_batch(genomes, bounds: DomainBounds | None = None) -> np.ndarray:
    """Vertices of each genome's polygon, shape (n, 8, 2)."""
    g = check_genomes(genomes, bounds)
    r = g[:, :8]
    phi = 2.0 * np.pi * np.arange(8) / 8 + g[:, 8:] * np.pi
    verts = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)
    return np.round(verts, _SNAP_DECIMALS) + 0.0


def express(genome, bounds: DomainBounds | None = None) -> np.ndarray:
    """Polygon vertices (8, 2) of a single genome."""
    return express_batch(genome, bounds)[0]


_CENTERS = -1.0 + (np.arange(RESOLUTION) + 0.5) * (2.0 / RESOLUTION)


def rasterize_batch(polygons) -> np.ndarray:
    """Even-odd fill of each polygon at pixel centers, shape (n, 64, 64)."""
    p = np.asarray(polygons, dtype=float)
    if p.ndim == 2:
        p = p[None]
    n = len(p)
    q = np.roll(p, -1, axis=1)
    x0, y0 = p[:, :, None, 0], p[:, :, None, 1]
    x1, y1 = q[:, :, None, 0], q[:, :, None, 1]
    yc = _CENTERS[None, None, :]
    # half-open rule: an edge crosses a scanline when its endpoints straddle it
    straddle = (y0 > yc) != (y1 > yc)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = x0 + (yc - y0) * (x1 - x0) / (y1 - y0)
    poly_idx, _, row_idx = np.nonzero(straddle)
    # number of pixel centers strictly left of each crossing
    cols = np.searchsorted(_CENTERS, x_cross[straddle], side="left")
    toggles = np.bincount(
        (poly_idx * RESOLUTION + row_idx) * (RESOLUTION + 1) + cols,
        minlength=n * RESOLUTION * (RESOLUTION + 1),
    ).reshape(n, RESOLUTION, RESOLUTION + 1)
    # a center is inside iff an odd number of crossings lie to its right
    right = np.cumsum(toggles[:, :, ::-1], axis=2)[:, :, ::-1][:, :, 1:]
    return (right % 2).astype(bool)


def rasterize(polygon) -> np.ndarray:
    """64x64 boolean bitmap of a single polygon."""
    return rasterize_batch(polygon)[0]


def perimeter(polygon) -> float:
    p = np.asarray(polygon, dtype=float)
    return float(np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1).sum())


def boundary_samples(polygon, n: int = N_BOUNDARY_SAMPLES) -> np.ndarray:
    """``n`` points spaced equally by arc length, starting at vertex 0."""
    return _boundary_samples_batch(np.asarray(polygon, dtype=float)[None], n)[0]


def _boundary_samples_batch(polys: np.ndarray, n: int) -> np.ndarray:
    closed = np.concatenate([polys, polys[:, :1]], axis=1)
    seg = np.linalg.norm(np.diff(closed, axis=1), axis=2)
    cum = np.concatenate([np.zeros((len(polys), 1)), np.cumsum(seg, axis=1)], axis=1)
    total = cum[:, -1]
    if np.any(total <= 0.0):
        raise DegenerateShapeError("polygon has zero perimeter")
    # arc length in units of the sample spacing; rows are laid end to end with
    # a gap so that one flat interpolation serves the whole batch
    offset = (np.arange(len(polys)) * (n + 1.0))[:, None]
    knots = (cum * (n / total[:, None]) + offset).ravel()
    pos = (np.arange(n)[None, :] + offset).ravel()
    x = np.interp(pos, knots, closed[:, :, 0].ravel())
    y = np.interp(pos, knots, closed[:, :, 1].ravel())
    return np.stack([x, y], axis=-1).reshape(len(polys), n, 2)


def symmetry_error_batch(polygons, n: int = N_BOUNDARY_SAMPLES) -> np.ndarray:
    """Point-symmetry error: summed distance between each boundary sample in the
    first half and the origin reflection of its opposite sample.

    Polygons collapsed onto the origin are trivially symmetric (error 0); any
    other zero-perimeter polygon raises ``DegenerateShapeError``.
    """
    if n % 2:
        raise ValueError("n must be even")
    p = np.asarray(polygons, dtype=float)
    if p.ndim == 2:
        p = p[None]
    out = np.zeros(len(p))
    collapsed = np.all(p == p[:, :1], axis=(1, 2))
    if np.any(collapsed & np.any(p[:, 0] != 0.0, axis=1)):
        raise DegenerateShapeError("polygon has zero perimeter")
    live = ~collapsed
    if np.any(live):
        s = _boundary_samples_batch(p[live], n)
        half = n // 2
        out[live] = np.linalg.norm(s[:, :half] + s[:, half:], axis=2).sum(axis=1)
    return out


def symmetry_fitness_batch(polygons, n: int = N_BOUNDARY_SAMPLES) -> np.ndarray:
    return 1.0 / (1.0 + symmetry_error_batch(polygons, n))


def symmetry_fitness(polygon, n: int = N_BOUNDARY_SAMPLES) -> float:
    """Point-symmetry fitness in (0, 1]; 1 for shapes symmetric through the origin."""
    return float(symmetry_fitness_batch(polygon, n)[0])


def features_batch(polygons, bitmaps) -> np.ndarray:
    """(area fraction, circumference) per polygon, shape (n, 2)."""
    p = np.asarray(polygons, dtype=float)
    b = np.asarray(bitmaps, dtype=bool)
    if p.ndim == 2:
        p, b = p[None], b[None]
    area = b.reshape(len(b), -1).sum(axis=1) / N_PIXELS
    circ = np.linalg.norm(np.roll(p, -1, axis=1) - p, axis=2).sum(axis=1)
    return np.column_stack([area, circ])


def features(polygon, bitmap) -> tuple[float, float]:
    area, circ = features_batch(polygon, bitmap)[0]
    return float(area), float(circ)


def hamming(a, b) -> float:
    """Fraction of differing pixels."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"bitmap shapes differ: {a.shape} vs {b.shape}")
    return float(np.count_nonzero(a != b)) / a.size


def pixel_error(a, b) -> int:
    """Number of differing pixels."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"bitmap shapes differ: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


@dataclass
class Evaluation:
    """Everything computed for a batch of genomes."""

    genomes: np.ndarray
    polygons: np.ndarray
    bitmaps: np.ndarray
    fitness: np.ndarray
    features: np.ndarray

    def __len__(self):
        return len(self.genomes)


def evaluate(genomes, bounds: DomainBounds | None = None) -> Evaluation:
    """Express, rasterize and score a batch of genomes."""
    g = check_genomes(genomes, bounds)
    polys = express_batch(g)
    bitmaps = rasterize_batch(polys)
    return Evaluation(
        genomes=g,
        polygons=polys,
        bitmaps=bitmaps,
        fitness=symmetry_fitness_batch(polys),
        features=features_batch(polys, bitmaps),
    )


# -- plain-text exports ------------------------------------------------------


def to_pbm(bitmap) -> str:
    """Plain PBM (P1); the top text row is the top of the shape."""
    b = np.asarray(bitmap, dtype=bool)
    rows = [" ".join("1" if v else "0" for v in row) for row in b[::-1]]
    return f"P1\n{b.shape[1]} {b.shape[0]}\n" + "\n".join(rows) + "\n"


def from_pbm(text: str) -> np.ndarray:
    tokens = [t for line in text.splitlines() if not line.startswith("#") for t in line.split()]
    if not tokens or tokens[0] != "P1":
        raise ValueError("not a plain PBM (P1) file")
    width, height = int(tokens[1]), int(tokens[2])
    bits = "".join(tokens[3:])
    if len(bits) != width * height:
        raise ValueError("PBM pixel count does not match header")
    arr = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
    return arr.reshape(height, width).astype(bool)[::-1]


def polygon_to_csv(polygon) -> str:
    p = np.asarray(polygon, dtype=float)
    return "x,y\n" + "".join(f"{float(x)!r},{float(y)!r}\n" for x, y in p)
