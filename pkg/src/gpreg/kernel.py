"""Power-exponential correlation matrices and conditioning diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .design import as_points
from .errors import InputError

__all__ = [
    "CorrelationSpec",
    "ConditioningReport",
    "DEFAULT_THRESHOLD",
    "corr_matrix",
    "cross_corr",
    "eigen_extremes",
    "condition_report",
    "cholesky_ok",
]

DEFAULT_THRESHOLD = 25.0

# roundoff-negative eigenvalues tolerated before the input is rejected
NEGATIVE_EIG_TOL = 1e-10
LAMBDA_CLAMP = 1e-300
_SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class CorrelationSpec:
    """Hyperparameters of the power-exponential correlation family.

    ``R_ij = prod_k exp(-theta_k |x_ik - x_jk|^p_k)``. ``delta`` is the nugget
    and ``order_m`` the number of von Neumann terms used when inverting
    ``R + delta I``.
    """

    theta: np.ndarray
    powers: np.ndarray = None
    delta: float = 0.0
    order_m: int = 1

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float)).copy()
        if theta.ndim != 1:
            raise InputError("theta must be a vector")
        if not np.all(np.isfinite(theta)) or np.any(theta <= 0):
            raise InputError(f"theta must be finite and positive, got {theta}")
        if self.powers is None:
            powers = np.full(theta.shape, 2.0)
        else:
            powers = np.broadcast_to(np.asarray(self.powers, dtype=float), theta.shape).copy()
        if np.any(powers <= 0) or np.any(powers > 2) or not np.all(np.isfinite(powers)):
            raise InputError(f"powers must lie in (0, 2], got {powers}")
        if not (0.0 <= self.delta < 1.0):
            raise InputError(f"delta must lie in [0, 1), got {self.delta}")
        if int(self.order_m) != self.order_m or self.order_m < 1:
            raise InputError(f"order_m must be a positive integer, got {self.order_m}")
        theta.setflags(write=False)
        powers.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "powers", powers)
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "order_m", int(self.order_m))

    @property
    def d(self) -> int:
        return self.theta.size


def _scaled_distance(A: np.ndarray, B: np.ndarray, theta, powers) -> np.ndarray:
    """sum_k theta_k |a_k - b_k|^p_k for every row pair of A and B."""
    out = np.zeros((A.shape[0], B.shape[0]))
    for k in range(A.shape[1]):
        diff = np.abs(A[:, k, None] - B[None, :, k])
        p = powers[k]
        if p == 2.0:
            term = diff * diff
        else:
            # 0**p is exactly 0 for p > 0
            term = np.power(diff, p)
        out += theta[k] * term
    return out


def _check_inputs(pts, spec):
    if pts.shape[1] != spec.d:
        raise InputError(f"design has d={pts.shape[1]} but theta has {spec.d} entries")
    if not np.all(np.isfinite(pts)):
        raise InputError("non-finite coordinates")


def corr_matrix(design, spec: CorrelationSpec) -> np.ndarray:
    """Correlation matrix ``R`` of a design; symmetric with unit diagonal."""
    pts = as_points(design)
    _check_inputs(pts, spec)
    return np.exp(-_scaled_distance(pts, pts, spec.theta, spec.powers))


def cross_corr(design, x_star, spec: CorrelationSpec) -> np.ndarray:
    """Correlations between query site(s) and the design points.

    A single d-vector gives an n-vector; a ``q x d`` array gives ``q x n``.
    """
    pts = as_points(design)
    xs = np.asarray(x_star, dtype=float)
    single = xs.ndim == 1
    xs = np.atleast_2d(xs)
    if xs.shape[1] != pts.shape[1]:
        raise InputError(f"query has d={xs.shape[1]}, design has d={pts.shape[1]}")
    _check_inputs(pts, spec)
    if not np.all(np.isfinite(xs)):
        raise InputError("non-finite query coordinates")
    # same operand order as corr_matrix so training sites reproduce R exactly
    r = np.exp(-_scaled_distance(xs, pts, spec.theta, spec.powers))
    return r[0] if single else r


def _check_symmetric(R):
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise InputError(f"expected a square matrix, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise InputError("matrix has non-finite entries")
    scale = max(np.abs(R).max(), np.finfo(float).tiny)
    if np.abs(R - R.T).max() > _SYMMETRY_RTOL * scale:
        raise InputError("matrix is not symmetric")
    return R


def eigenvalues(R) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix."""
    return np.linalg.eigvalsh(_check_symmetric(R))


def eigen_extremes(R) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix, as computed."""
    lam = eigenvalues(R)
    return float(lam[0]), float(lam[-1])


def cholesky_ok(A) -> bool:
    """True if a working-precision Cholesky factorization of ``A`` succeeds."""
    try:
        sla.cholesky(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return False
    return True


@dataclass(frozen=True)
class ConditioningReport:
    """Spectral summary of a correlation matrix.

    ``near_singular`` is set when Cholesky fails or ``log_kappa`` exceeds
    ``threshold_a``; both causes are kept separately in ``cholesky_failed``
    and ``exceeds_threshold``.
    """

    lambda_min: float
    lambda_max: float
    kappa: float
    log_kappa: float
    near_singular: bool
    threshold_a: float
    cholesky_failed: bool
    exceeds_threshold: bool
    n: int
    eigenvalues: np.ndarray = field(repr=False, compare=False, default=None)


def condition_report(R, a: float = DEFAULT_THRESHOLD, eigvals=None) -> ConditioningReport:
    """Diagnose near-singularity of a correlation matrix.

    ``kappa = lambda_max / lambda_min`` in the 2-norm, from a full symmetric
    eigendecomposition. Eigenvalues in ``[-1e-10, 0]`` are treated as
    roundoff: ``lambda_min`` is clamped to ``1e-300`` for the ratio and the
    matrix is flagged. More negative eigenvalues raise ``InputError``.

    Parameters
    ----------
    R : (n, n) array
        Symmetric correlation matrix.
    a : float
        Threshold on ``log(kappa)``.
    eigvals : array, optional
        Precomputed ascending eigenvalues of ``R``.
    """
    if not a > 0:
        raise InputError(f"threshold a must be positive, got {a}")
    R = _check_symmetric(R)
    lam = np.linalg.eigvalsh(R) if eigvals is None else np.asarray(eigvals, dtype=float)
    lam_min, lam_max = float(lam[0]), float(lam[-1])
    if lam_min < -NEGATIVE_EIG_TOL:
        raise InputError(f"smallest eigenvalue {lam_min:.3e} is negative; not a correlation matrix")
    clamped = lam_min <= 0.0
    kappa = lam_max / (LAMBDA_CLAMP if clamped else lam_min)
    log_kappa = math.log(kappa)
    chol_failed = not cholesky_ok(R)
    exceeds = log_kappa > a
    return ConditioningReport(
        lambda_min=lam_min,
        lambda_max=lam_max,
        kappa=kappa,
        log_kappa=log_kappa,
        near_singular=bool(chol_failed or exceeds or clamped),
        threshold_a=float(a),
        cholesky_failed=chol_failed,
        exceeds_threshold=exceeds,
        n=R.shape[0],
        eigenvalues=lam,
    )
