"""Space-filling designs on the unit hypercube.

Latin hypercube designs (jittered or midpoint) and a maximin selection over
a pool of independently seeded candidates.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .errors import InputError

__all__ = [
    "Design",
    "as_points",
    "latin_hypercube",
    "maximin_lhs",
    "min_intersite_distance",
    "design_to_csv",
]

# keeps jittered coordinates strictly inside their stratum after rounding
_JITTER_GUARD = 1e-9


@dataclass(frozen=True)
class Design:
    """An ``n x d`` matrix of input sites in ``[0, 1]^d``.

    The array is copied and marked read-only on construction.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InputError(f"design must be a non-empty n x d matrix, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InputError("design contains non-finite coordinates")
        if np.any(pts < 0.0) or np.any(pts > 1.0):
            raise InputError("design coordinates must lie in [0, 1]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n


def as_points(design) -> np.ndarray:
    """Return the ``n x d`` float array behind a Design or array-like."""
    if isinstance(design, Design):
        return design.points
    pts = np.asarray(design, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def _check_sizes(n, d):
    if int(n) != n or int(d) != d or n < 1 or d < 1:
        raise InputError(f"need n >= 1 and d >= 1, got n={n}, d={d}")


def _lhs(rng: np.random.Generator, n: int, d: int, midpoint: bool) -> np.ndarray:
    perms = np.column_stack([rng.permutation(n) for _ in range(d)])
    if midpoint:
        u = np.full((n, d), 0.5)
    else:
        u = _JITTER_GUARD + (1.0 - 2.0 * _JITTER_GUARD) * rng.random((n, d))
    return (perms + u) / n


def latin_hypercube(n: int, d: int, seed=None, midpoint: bool = False) -> Design:
    """Random Latin hypercube design.

    Each column places exactly one point in each of the ``n`` strata
    ``[k/n, (k+1)/n)``. Points are jittered uniformly inside their stratum
    unless ``midpoint`` is set.

    Parameters
    ----------
    n, d : int
        Number of points and input dimension.
    seed : int, sequence of int or numpy Generator, optional
        Anything accepted by :func:`numpy.random.default_rng`.
    midpoint : bool
        Place points at stratum centres (deterministic apart from the
        permutations).
    """
    _check_sizes(n, d)
    rng = np.random.default_rng(seed)
    return Design(_lhs(rng, int(n), int(d), midpoint))


def min_intersite_distance(design) -> float:
    """Smallest Euclidean distance between two distinct sites.

    Raises
    ------
    InputError
        If the design has fewer than two points.
    """
    pts = as_points(design)
    if pts.shape[0] < 2:
        raise InputError("minimum inter-site distance needs at least two points")
    return float(pdist(pts).min())


def _maximin_score(pts: np.ndarray) -> float:
    if pts.shape[0] < 2:
        return np.inf
    return float(pdist(pts).min())


def maximin_lhs(n: int, d: int, n_candidates: int = 100, seed=0, midpoint: bool = False) -> Design:
    """Best of ``n_candidates`` Latin hypercubes under the maximin criterion.

    Candidate ``k`` is drawn from its own stream ``default_rng([seed, k])`` so
    the result does not depend on evaluation order. Ties go to the earliest
    candidate. A single-point design scores ``+inf`` (no pairs).
    """
    _check_sizes(n, d)
    if int(n_candidates) != n_candidates or n_candidates < 1:
        raise InputError(f"n_candidates must be a positive integer, got {n_candidates}")
    base = _seed_entropy(seed)
    best, best_score = None, -np.inf
    for k in range(int(n_candidates)):
        rng = np.random.default_rng(base + [k])
        pts = _lhs(rng, int(n), int(d), midpoint)
        score = _maximin_score(pts)
        if best is None or score > best_score:
            best, best_score = pts, score
    return Design(best)


def _seed_entropy(seed) -> list:
    """Normalise a seed into a list of non-negative ints for SeedSequence."""
    if seed is None:
        return [int(np.random.SeedSequence().entropy)]
    if isinstance(seed, (list, tuple)):
        return [int(s) for s in seed]
    if isinstance(seed, np.random.Generator):
        return [int(seed.integers(2**63))]
    return [int(seed)]


def design_to_csv(design, header: bool = False) -> str:
    """Serialise a design as CSV, one row per point, no header by default."""
    pts = as_points(design)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow([f"x{k + 1}" for k in range(pts.shape[1])])
    for row in pts:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
