"""Nugget lower bound and iterative (von Neumann) regularization.

A near-singular ``R`` is never inverted directly. Instead ``R + delta I`` is
factorized once and ``R^{-1} w`` is approximated by the truncated series

    t_M = sum_{k=1}^{M} delta^(k-1) (R + delta I)^(-k) w,

computed with the recursion ``(R + delta I) s_i = delta s_{i-1}``,
``t_i = t_{i-1} + s_i / delta``. The nugget is the smallest ``delta`` that
brings ``log kappa(R + delta I)`` down to the threshold ``a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import InputError
from .kernel import NEGATIVE_EIG_TOL, ConditioningReport

__all__ = [
    "RegularizedSolver",
    "delta_lower_bound",
    "choose_delta",
    "iter_solve",
    "iter_solve_path",
    "log_det_inv_approx",
]

_EPS = np.finfo(float).eps
_TINY_LAMBDA = 1e-300


def delta_lower_bound(lambda_max: float, kappa: float, a: float) -> float:
    """Smallest nugget with ``log kappa(R + delta I) <= a``.

    ``max(lambda_max (kappa - e^a) / (kappa (e^a - 1)), 0)``. ``kappa`` may be
    ``inf`` (singular ``R``), in which case the bound is
    ``lambda_max / (e^a - 1)``.
    """
    for name, v in (("lambda_max", lambda_max), ("a", a)):
        if not math.isfinite(v):
            raise InputError(f"{name} must be finite, got {v}")
    if math.isnan(kappa):
        raise InputError("kappa is NaN")
    if lambda_max <= 0 or kappa < 1 or a <= 0:
        raise InputError(f"need lambda_max > 0, kappa >= 1, a > 0; got {lambda_max}, {kappa}, {a}")
    ea = math.exp(a)
    if kappa <= ea:
        return 0.0
    # divided through by kappa so that kappa near 1e300 cannot overflow
    return max(lambda_max * (1.0 - ea / kappa) / (ea - 1.0), 0.0)


def _delta_from_spectrum(lam_min: float, lam_max: float, a: float) -> float:
    # same bound written as (lambda_max - e^a lambda_min) / (e^a - 1); stays
    # valid when lam_min is zero or slightly negative
    ea = math.exp(a)
    return max((lam_max - ea * lam_min) / (ea - 1.0), 0.0)


def choose_delta(report: ConditioningReport, delta_floor: float = 0.0) -> float:
    """Nugget to use for a matrix with the given conditioning report.

    Zero for a well-conditioned matrix. Otherwise the lower bound evaluated
    with ``lambda_min`` lowered by the symmetric eigensolver's error bound
    ``n * eps * lambda_max``, so that the shifted matrix still meets the
    threshold once its own eigenvalues are recomputed. ``delta_floor`` only
    ever raises the result.
    """
    if not report.near_singular:
        return max(0.0, float(delta_floor))
    lam_min = report.lambda_min - report.n * _EPS * report.lambda_max
    delta = _delta_from_spectrum(lam_min, report.lambda_max, report.threshold_a)
    return max(delta, float(delta_floor))


@dataclass(frozen=True)
class RegularizedSolver:
    """Cholesky factor of ``R + delta I`` plus the truncation order ``M``.

    With ``delta == 0`` the factor is that of ``R`` itself and every
    ``M`` gives the exact solve.
    """

    factor: np.ndarray = field(repr=False)
    delta: float
    order_m: int
    log_det_r_delta: float
    eigenvalues: np.ndarray = field(default=None, repr=False)

    @classmethod
    def from_matrix(cls, R, delta: float, order_m: int = 1, eigenvalues=None) -> "RegularizedSolver":
        """Factorize ``R + delta I``.

        Raises
        ------
        numpy.linalg.LinAlgError
            If the shifted matrix is not numerically positive definite.
        """
        if not (0.0 <= delta < 1.0):
            raise InputError(f"delta must lie in [0, 1), got {delta}")
        if int(order_m) != order_m or order_m < 1:
            raise InputError(f"order_m must be a positive integer, got {order_m}")
        R = np.asarray(R, dtype=float)
        A = R + delta * np.eye(R.shape[0]) if delta > 0 else R
        L = sla.cholesky(A, lower=True, check_finite=False)
        L.setflags(write=False)
        log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
        if eigenvalues is not None:
            eigenvalues = np.asarray(eigenvalues, dtype=float)
        return cls(L, float(delta), int(order_m), log_det, eigenvalues)

    @property
    def n(self) -> int:
        return self.factor.shape[0]

    def with_order(self, order_m: int) -> "RegularizedSolver":
        return RegularizedSolver(self.factor, self.delta, int(order_m), self.log_det_r_delta, self.eigenvalues)

    def solve_shifted(self, b) -> np.ndarray:
        """One solve with ``R + delta I`` (forward and back substitution)."""
        return sla.cho_solve((self.factor, True), b, check_finite=False)


def _check_rhs(solver, w):
    w = np.asarray(w, dtype=float)
    if w.shape[0] != solver.n:
        raise InputError(f"right-hand side has length {w.shape[0]}, expected {solver.n}")
    if not np.all(np.isfinite(w)):
        raise InputError("right-hand side has non-finite entries")
    return w


def iter_solve_path(solver: RegularizedSolver, w, m: int = None) -> np.ndarray:
    """All iterates ``t_1, ..., t_M`` stacked along a new leading axis.

    ``w`` may be an n-vector or an ``n x k`` block of right-hand sides.
    """
    m = solver.order_m if m is None else int(m)
    if m < 1:
        raise InputError(f"order must be >= 1, got {m}")
    w = _check_rhs(solver, w)
    out = np.empty((m,) + w.shape)
    if solver.delta == 0.0:
        out[:] = solver.solve_shifted(w)
        return out
    u = solver.solve_shifted(w)
    t = u
    out[0] = t
    for i in range(1, m):
        u = solver.delta * solver.solve_shifted(u)
        t = t + u
        out[i] = t
    return out


def iter_solve(solver: RegularizedSolver, w, m: int = None) -> np.ndarray:
    """Approximate ``R^{-1} w`` with ``M`` von Neumann terms.

    Uses the stored factorization only; ``M`` substitutions in total. For
    ``delta == 0`` this is a single direct solve.
    """
    m = solver.order_m if m is None else int(m)
    if m < 1:
        raise InputError(f"order must be >= 1, got {m}")
    w = _check_rhs(solver, w)
    if solver.delta == 0.0:
        return solver.solve_shifted(w)
    # u_i = s_i / delta: same recursion, t_1 is then one plain solve
    u = solver.solve_shifted(w)
    t = u
    for _ in range(m - 1):
        u = solver.delta * solver.solve_shifted(u)
        t = t + u
    return t


def log_det_inv_approx(solver: RegularizedSolver, eigenvalues=None, m: int = None) -> float:
    """``log |R^{-1}_{delta,M}|`` from the spectrum of ``R``.

    Each eigenvalue ``lam`` of ``R`` maps to
    ``sum_{k=1}^{M} delta^(k-1) / (lam + delta)^k = (1 - q^M) / lam`` with
    ``q = delta / (lam + delta)``; ``1 - q^M`` is formed with ``expm1`` and
    ``log1p`` so that ``lam << delta`` keeps full precision, and the
    ``lam -> 0`` limit ``M / delta`` is used below ``1e-300``. For ``M = 1``
    and no explicit ``eigenvalues``, the value is ``-log |R + delta I|``
    taken from the Cholesky factor instead.
    """
    m = solver.order_m if m is None else int(m)
    if m == 1 and eigenvalues is None:
        return -solver.log_det_r_delta
    lam = solver.eigenvalues if eigenvalues is None else np.asarray(eigenvalues, dtype=float)
    if lam is None:
        raise InputError("eigenvalues of R are required for M > 1")
    if lam.shape[0] != solver.n:
        raise InputError(f"got {lam.shape[0]} eigenvalues for an {solver.n} x {solver.n} system")
    if np.any(lam < -NEGATIVE_EIG_TOL):
        raise InputError("R has a negative eigenvalue below roundoff level")
    delta = solver.delta
    if delta == 0.0:
        if np.any(lam <= 0):
            raise InputError("singular R with zero nugget")
        return float(-np.sum(np.log(lam)))
    tiny = np.abs(lam) < _TINY_LAMBDA
    safe = np.where(tiny, 1.0, lam)
    one_minus_qm = -np.expm1(-m * np.log1p(safe / delta))
    per_eig = np.where(tiny, m / delta, one_minus_qm / safe)
    return float(np.sum(np.log(per_eig)))
