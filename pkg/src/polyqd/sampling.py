"""Sobol low-discrepancy sequence (Gray-code construction, 32-bit)."""
from __future__ import annotations

import numpy as np

from .geometry import DomainBounds, get_bounds

_BITS = 32

# Joe-Kuo direction numbers for dimensions 2..16: (degree s, coefficient a, m_1..m_s).
# Dimension 1 is the van der Corput sequence.
_JOE_KUO = [
    (1, 0, (1,)),
    (2, 1, (1, 3)),
    (3, 1, (1, 3, 1)),
    (3, 2, (1, 1, 1)),
    (4, 1, (1, 1, 3, 3)),
    (4, 4, (1, 3, 5, 13)),
    (5, 2, (1, 1, 5, 5, 17)),
    (5, 4, (1, 1, 5, 5, 5)),
    (5, 7, (1, 1, 7, 11, 19)),
    (5, 11, (1, 1, 5, 1, 1)),
    (5, 13, (1, 1, 1, 3, 11)),
    (5, 14, (1, 3, 5, 5, 31)),
    (6, 1, (1, 3, 3, 9, 7, 49)),
    (6, 13, (1, 1, 1, 15, 21, 21)),
    (6, 16, (1, 3, 1, 13, 27, 49)),
]

MAX_DIMENSION = len(_JOE_KUO) + 1


def _direction_numbers(dimension: int) -> np.ndarray:
    v = np.zeros((dimension, _BITS), dtype=np.uint64)
    v[0] = [1 << (_BITS - 1 - k) for k in range(_BITS)]
    for d in range(1, dimension):
        s, a, m = _JOE_KUO[d - 1]
        col = [m[k] << (_BITS - 1 - k) for k in range(s)]
        for k in range(s, _BITS):
            val = col[k - s] ^ (col[k - s] >> s)
            for j in range(1, s):
                if (a >> (s - 1 - j)) & 1:
                    val ^= col[k - j]
            col.append(val)
        v[d] = col
    return v


class SobolGenerator:
    """Stream of Sobol points in [0, 1)^dimension.

    With ``scramble_seed`` set, every point is XOR-ed with a fixed random
    32-bit mask per dimension (a digital shift), which keeps the net
    structure while giving an independent stream per seed.
    """

    def __init__(self, dimension: int, scramble_seed: int | None = None):
        if not 1 <= dimension <= MAX_DIMENSION:
            raise ValueError(
                f"dimension {dimension} outside the embedded table (1..{MAX_DIMENSION})"
            )
        self.dimension = dimension
        self.scramble_seed = scramble_seed
        self._v = _direction_numbers(dimension)
        self._state = np.zeros(dimension, dtype=np.uint64)
        self.index = 0
        if scramble_seed is None:
            self._shift = np.zeros(dimension, dtype=np.uint64)
        else:
            rng = np.random.default_rng(scramble_seed)
            self._shift = rng.integers(0, 2**_BITS, size=dimension, dtype=np.uint64)

    def next(self, n: int = 1) -> np.ndarray:
        """The next ``n`` points, shape (n, dimension)."""
        if n < 1:
            raise ValueError("n must be >= 1")
        out = np.empty((n, self.dimension), dtype=np.uint64)
        for k in range(n):
            out[k] = self._state
            # flip the direction number of the lowest zero bit of the index
            i, c = self.index, 0
            while i & 1:
                i >>= 1
                c += 1
            self._state = self._state ^ self._v[:, c]
            self.index += 1
        return (out ^ self._shift).astype(np.float64) / float(2**_BITS)


def sobol_points(n: int, dimension: int, scramble_seed: int | None = None, skip: int = 0):
    gen = SobolGenerator(dimension, scramble_seed)
    if skip:
        gen.next(skip)
    return gen.next(n)


def scale_to_bounds(points, bounds: DomainBounds | str) -> np.ndarray:
    """Map unit-cube points onto genomes (radius genes first, then angles)."""
    b = get_bounds(bounds)
    p = np.asarray(points, dtype=float)
    return b.lower + p * b.span


def unscale_from_bounds(genomes, bounds: DomainBounds | str) -> np.ndarray:
    b = get_bounds(bounds)
    return (np.asarray(genomes, dtype=float) - b.lower) / b.span
