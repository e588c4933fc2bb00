"""GP emulator fitting and prediction.

Three predictor variants share one code path:

* ``exact``        nugget is zero, plain BLUP with ``R^{-1}``;
* ``popular``      nugget estimated jointly with theta above a fixed floor,
                   predictor built from ``(R + delta I)^{-1}``;
* ``regularized``  nugget set to the lower bound at theta, ``R^{-1}``
                   replaced by the M-term von Neumann approximation.

All of them use the constant-mean model with closed-form ``mu`` and
``sigma^2`` profiled out of the likelihood.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from .design import Design, as_points, maximin_lhs
from .errors import InputError, NumericalError
from .kernel import DEFAULT_THRESHOLD, CorrelationSpec, condition_report, corr_matrix, cross_corr
from .regularize import RegularizedSolver, choose_delta, iter_solve, iter_solve_path, log_det_inv_approx

__all__ = [
    "TrainingData",
    "FittedModel",
    "Prediction",
    "StopResult",
    "MODEL_FORMAT",
    "THETA_BOUNDS",
    "profile_neg2_loglik",
    "fixed_model",
    "predictor_weights",
    "fit",
    "fit_popular",
    "predict",
    "training_predictions",
    "xi_zero",
    "xi_step",
    "xi_profile",
    "stop_order",
]

MODEL_FORMAT = "gpreg-model/1"
THETA_BOUNDS = (1e-3, 1e3)
XI_FLOOR = -16.0
XI_CLAMP_BELOW = -15.65
MSE_NEG_TOL = 1e-8
# n * log(tiny) stands in for -inf when the residual vanishes
_DEGENERATE_Q = np.finfo(float).tiny
_DELTA_MAX = 1.0 - 1e-9


@dataclass(frozen=True)
class TrainingData:
    """Design sites and the simulator responses observed there."""

    design: Design
    responses: np.ndarray

    def __post_init__(self):
        design = self.design if isinstance(self.design, Design) else Design(self.design)
        y = np.array(self.responses, dtype=float, copy=True).reshape(-1)
        if y.shape[0] != design.n:
            raise InputError(f"{design.n} design rows but {y.shape[0]} responses")
        if not np.all(np.isfinite(y)):
            raise InputError("responses must be finite")
        y.setflags(write=False)
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "responses", y)

    @property
    def X(self) -> np.ndarray:
        return self.design.points

    @property
    def y(self) -> np.ndarray:
        return self.responses

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def d(self) -> int:
        return self.design.d

    def duplicate_rows(self) -> list[list[int]]:
        """Groups of row indices (0-based) that hold identical sites."""
        _, inverse, counts = np.unique(self.X, axis=0, return_inverse=True, return_counts=True)
        inverse = np.asarray(inverse).reshape(-1)
        groups = []
        for g in np.flatnonzero(counts > 1):
            groups.append([int(i) for i in np.flatnonzero(inverse == g)])
        return sorted(groups)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X).tobytes())
        h.update(np.ascontiguousarray(self.y).tobytes())
        return h.hexdigest()


class _LikEval(NamedTuple):
    value: float
    delta: float
    mu: float
    sigma2: float
    degenerate: bool
    solver: RegularizedSolver
    R: np.ndarray
    log_kappa: float


def _failed(delta=math.nan) -> _LikEval:
    return _LikEval(math.inf, delta, math.nan, math.nan, False, None, None, math.nan)


def _evaluate(X, y, theta, powers, a=DEFAULT_THRESHOLD, m=1, delta=None, delta_floor=0.0) -> _LikEval:
    """-2 log profile likelihood (up to a constant) and its by-products.

    ``delta=None`` picks the nugget from the lower bound at ``theta`` (raised
    to ``delta_floor`` if smaller); a number fixes it.
    """
    spec = CorrelationSpec(theta, powers)
    R = corr_matrix(X, spec)
    n = R.shape[0]
    log_kappa = math.nan
    lam = None
    if delta is None:
        lam = np.linalg.eigvalsh(R)
        try:
            report = condition_report(R, a, eigvals=lam)
        except InputError:
            return _failed()
        delta = choose_delta(report, delta_floor)
        log_kappa = report.log_kappa
        if delta >= 1.0:
            return _failed(delta)
    elif m > 1:
        lam = np.linalg.eigvalsh(R)
    try:
        solver = RegularizedSolver.from_matrix(R, delta, m, eigenvalues=lam)
    except np.linalg.LinAlgError:
        return _failed(delta)
    T = iter_solve(solver, np.column_stack([y, np.ones(n)]), m)
    a_y, a_1 = T[:, 0], T[:, 1]
    s1 = a_1.sum()
    if not s1 > 0:
        return _failed(delta)
    mu = a_y.sum() / s1
    resid = y - mu
    Q = float(resid @ (a_y - mu * a_1))
    scale = max(np.abs(y).max(), 1.0)
    degenerate = Q <= 0 or np.abs(resid).max() <= 64 * np.finfo(float).eps * scale
    if degenerate:
        Q = _DEGENERATE_Q
    logdet_inv = log_det_inv_approx(solver, m=m)
    value = -logdet_inv + n * math.log(Q)
    sigma2 = 0.0 if degenerate else Q / n
    return _LikEval(value, delta, mu, sigma2, degenerate, solver, R, log_kappa)


def _as_data(data, y=None) -> TrainingData:
    if isinstance(data, TrainingData):
        return data
    return TrainingData(Design(data), y)


def _powers_for(d, powers):
    if powers is None:
        return np.full(d, 2.0)
    return np.broadcast_to(np.asarray(powers, dtype=float), (d,)).copy()


def profile_neg2_loglik(data, theta, powers=None, a: float = DEFAULT_THRESHOLD, m: int = 1,
                        delta=None, delta_floor: float = 0.0) -> float:
    """Profile ``-2 log L`` at ``theta`` with ``R^{-1}`` replaced by ``R^{-1}_{delta,M}``.

    ``-log|R^{-1}_{delta,M}| + n log[(Y - mu 1)' R^{-1}_{delta,M} (Y - mu 1)]``.
    The nugget is the lower bound at ``theta`` unless ``delta`` is given.
    Returns ``+inf`` if ``R + delta I`` cannot be factorized. When the
    residual vanishes the quadratic form is replaced by the smallest normal
    double, giving a large negative but finite value.
    """
    data = _as_data(data)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    return _evaluate(data.X, data.y, theta, _powers_for(data.d, powers), a, m, delta, delta_floor).value


@dataclass(frozen=True)
class Prediction:
    """Posterior mean and MSE at one or more query sites."""

    mean: np.ndarray
    mse: np.ndarray
    variant: str
    order_m: int


class StopResult(NamedTuple):
    order: int
    converged: bool


@dataclass(frozen=True)
class FittedModel:
    """A fitted emulator.

    ``mu_hat`` and ``sigma2_hat`` are the closed-form estimates at
    ``theta_hat`` with the one-term inverse ``(R + delta I)^{-1}``. ``method``
    is ``"lb"`` (nugget from the lower bound) or ``"popular"`` (nugget
    estimated).
    """

    data: TrainingData
    theta_hat: np.ndarray
    powers: np.ndarray
    mu_hat: float
    sigma2_hat: float
    delta: float
    solver: RegularizedSolver = field(repr=False)
    R: np.ndarray = field(repr=False)
    method: str = "lb"
    threshold_a: float = DEFAULT_THRESHOLD
    delta_floor: float = 0.0
    log_kappa: float = math.nan
    fit_meta: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def spec(self) -> CorrelationSpec:
        return CorrelationSpec(self.theta_hat, self.powers, self.delta, self.solver.order_m)

    @property
    def variant(self) -> str:
        if self.method == "popular":
            return "popular"
        return "exact" if self.delta == 0.0 else "regularized"

    def predict(self, x_star, m: int = 1) -> Prediction:
        return predict(self, x_star, m)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "method": self.method,
            "theta": [float(v) for v in self.theta_hat],
            "powers": [float(v) for v in self.powers],
            "delta": float(self.delta),
            "order_m": int(self.solver.order_m),
            "mu": float(self.mu_hat),
            "sigma2": float(self.sigma2_hat),
            "threshold_a": float(self.threshold_a),
            "delta_floor": float(self.delta_floor),
            "log_kappa": None if math.isnan(self.log_kappa) else float(self.log_kappa),
            "data": {
                "digest": self.data.digest(),
                "design": self.data.X.tolist(),
                "responses": self.data.y.tolist(),
            },
            "trace": self.fit_meta,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> "FittedModel":
        if doc.get("format") != MODEL_FORMAT:
            raise InputError(f"unsupported model format {doc.get('format')!r}")
        data = TrainingData(Design(np.asarray(doc["data"]["design"], dtype=float)), doc["data"]["responses"])
        if doc["data"].get("digest") not in (None, data.digest()):
            raise InputError("training data digest does not match the stored data")
        model = _assemble(
            data, np.asarray(doc["theta"]), np.asarray(doc["powers"]), float(doc["delta"]),
            method=doc["method"], a=doc["threshold_a"], delta_floor=doc.get("delta_floor", 0.0),
            fit_meta=doc.get("trace", {}),
        )
        # stored estimates win over recomputed ones so the file is authoritative
        lk = doc.get("log_kappa")
        object.__setattr__(model, "mu_hat", float(doc["mu"]))
        object.__setattr__(model, "sigma2_hat", float(doc["sigma2"]))
        object.__setattr__(model, "log_kappa", math.nan if lk is None else float(lk))
        return model

    @classmethod
    def from_json(cls, text: str) -> "FittedModel":
        return cls.from_dict(json.loads(text))


def _assemble(data, theta, powers, delta, method="lb", a=DEFAULT_THRESHOLD, delta_floor=0.0,
              fit_meta=None, log_kappa=math.nan) -> FittedModel:
    ev = _evaluate(data.X, data.y, theta, powers, a, 1, delta=delta)
    if ev.solver is None:
        raise NumericalError(f"R + delta I is not positive definite at theta={theta}, delta={delta}")
    theta = np.array(theta, dtype=float)
    powers = np.array(powers, dtype=float)
    theta.setflags(write=False)
    powers.setflags(write=False)
    return FittedModel(
        data=data, theta_hat=theta, powers=powers, mu_hat=float(ev.mu), sigma2_hat=float(ev.sigma2),
        delta=float(delta), solver=ev.solver, R=ev.R, method=method, threshold_a=float(a),
        delta_floor=float(delta_floor), log_kappa=log_kappa, fit_meta=dict(fit_meta or {}),
    )


def fixed_model(data, theta, powers=None, a: float = DEFAULT_THRESHOLD, delta=None,
                delta_floor: float = 0.0, method: str = None) -> FittedModel:
    """Model at a given ``theta`` without any likelihood optimization.

    With ``delta=None`` the nugget is the lower bound at ``theta`` (at least
    ``delta_floor``); otherwise exactly ``delta`` is used and the model is
    labelled ``popular`` unless ``method`` says otherwise.
    """
    data = _as_data(data)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    powers = _powers_for(data.d, powers)
    log_kappa = math.nan
    if delta is None:
        R = corr_matrix(data.X, CorrelationSpec(theta, powers))
        report = condition_report(R, a)
        delta = choose_delta(report, delta_floor)
        log_kappa = report.log_kappa
        method = method or "lb"
    else:
        method = method or "popular"
    return _assemble(data, theta, powers, float(delta), method, a, delta_floor, log_kappa=log_kappa)


def _check_fit_inputs(data: TrainingData):
    if data.n < 2:
        raise InputError("fitting needs at least two design points")
    dups = data.duplicate_rows()
    if dups:
        pretty = "; ".join(",".join(str(i + 1) for i in g) for g in dups)
        raise InputError(f"duplicate design rows (1-based): {pretty}")


def _multistart(objective, lo, hi, n_restarts, seed, maxfev, xatol, fatol):
    """Nelder-Mead from maximin-LHS starts inside the box ``[lo, hi]``."""
    dim = lo.size
    starts = lo + (hi - lo) * maximin_lhs(n_restarts, dim, n_candidates=50, seed=seed).points
    runs = []
    for idx, x0 in enumerate(starts):
        step = 0.1 * (hi - lo)
        simplex = np.vstack([x0] + [x0 + np.where(x0 + step * e <= hi, step * e, -step * e)
                                    for e in np.eye(dim)])
        res = minimize(objective, x0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                       options={"initial_simplex": simplex, "maxfev": maxfev,
                                "xatol": xatol, "fatol": fatol})
        runs.append({"restart": idx, "start": [float(v) for v in x0], "x": [float(v) for v in res.x],
                     "value": float(res.fun), "nfev": int(res.nfev), "success": bool(res.success)})
    finite = [r for r in runs if math.isfinite(r["value"])]
    if not finite:
        raise NumericalError("likelihood could not be evaluated on any restart", trace={"restarts": runs})
    best = min(finite, key=lambda r: (r["value"], r["restart"]))
    return best, runs


def _trace(best, runs, lo, hi, extra):
    x = np.asarray(best["x"])
    hits = [int(k) for k in np.flatnonzero((x <= lo[: x.size] + 1e-6) | (x >= hi[: x.size] - 1e-6))]
    return {
        "neg2_loglik": best["value"],
        "best_restart": best["restart"],
        "n_restarts": len(runs),
        "n_failed": sum(not math.isfinite(r["value"]) for r in runs),
        "n_evaluations": sum(r["nfev"] for r in runs),
        "boundary_hits": hits,
        **extra,
    }


def fit(data, powers=None, a: float = DEFAULT_THRESHOLD, n_restarts: int = 8, seed=0,
        m: int = 1, delta_floor: float = 0.0, theta_bounds=THETA_BOUNDS, maxfev: int = None,
        xatol: float = 1e-4, fatol: float = 1e-6) -> FittedModel:
    """Maximum-likelihood fit with the nugget tied to its lower bound.

    Minimizes :func:`profile_neg2_loglik` over ``log theta`` inside
    ``theta_bounds`` with multi-start Nelder-Mead. ``m`` is the series order
    used inside the likelihood (1 is recommended and the default; prediction
    order is chosen later). The nugget, ``mu`` and ``sigma^2`` are then
    recomputed at the optimum.

    Raises
    ------
    InputError
        Fewer than two points or duplicated design rows.
    NumericalError
        Every restart failed; ``exc.trace`` holds the per-restart record.
    """
    data = _as_data(data)
    _check_fit_inputs(data)
    d = data.d
    powers = _powers_for(d, powers)
    lo = np.full(d, math.log(theta_bounds[0]))
    hi = np.full(d, math.log(theta_bounds[1]))
    X, y = data.X, data.y
    degenerate = []

    def objective(z):
        ev = _evaluate(X, y, np.exp(np.clip(z, lo, hi)), powers, a, m, None, delta_floor)
        if ev.degenerate:
            degenerate.append(True)
        return ev.value

    best, runs = _multistart(objective, lo, hi, n_restarts, seed,
                             maxfev or 250 * d + 250, xatol, fatol)
    theta = np.exp(np.asarray(best["x"]))
    R = corr_matrix(X, CorrelationSpec(theta, powers))
    report = condition_report(R, a)
    delta = choose_delta(report, delta_floor)
    meta = _trace(best, runs, lo, hi, {"method": "lb", "likelihood_order": int(m), "seed": _jsonable(seed),
                                       "degenerate": bool(degenerate)})
    return _assemble(data, theta, powers, delta, "lb", a, delta_floor, meta, report.log_kappa)


def fit_popular(data, powers=None, delta_floor: float = 1e-5, n_restarts: int = 8, seed=0,
                theta_bounds=THETA_BOUNDS, maxfev: int = None, xatol: float = 1e-4,
                fatol: float = 1e-6) -> FittedModel:
    """Joint maximum-likelihood fit of ``theta`` and the nugget.

    The nugget is searched in ``[delta_floor, 1)`` on a log scale; the
    likelihood uses ``R + delta I`` directly and any candidate whose
    Cholesky factorization fails scores ``+inf``.
    """
    data = _as_data(data)
    _check_fit_inputs(data)
    if not (0.0 < delta_floor < 1.0):
        raise InputError(f"delta_floor must lie in (0, 1), got {delta_floor}")
    d = data.d
    powers = _powers_for(d, powers)
    lo = np.r_[np.full(d, math.log(theta_bounds[0])), math.log(delta_floor)]
    hi = np.r_[np.full(d, math.log(theta_bounds[1])), math.log(_DELTA_MAX)]
    X, y = data.X, data.y

    def objective(z):
        z = np.clip(z, lo, hi)
        return _evaluate(X, y, np.exp(z[:d]), powers, DEFAULT_THRESHOLD, 1, float(np.exp(z[d]))).value

    best, runs = _multistart(objective, lo, hi, n_restarts, seed,
                             maxfev or 250 * (d + 1) + 250, xatol, fatol)
    z = np.clip(np.asarray(best["x"]), lo, hi)
    theta, delta = np.exp(z[:d]), float(np.exp(z[d]))
    meta = _trace(best, runs, lo, hi, {"method": "popular", "delta_floor": float(delta_floor),
                                       "seed": _jsonable(seed)})
    return _assemble(data, theta, powers, delta, "popular", DEFAULT_THRESHOLD, delta_floor, meta)


def _jsonable(seed):
    if isinstance(seed, (list, tuple)):
        return [int(s) for s in seed]
    return None if seed is None else int(seed)


def _weights_basis(model: FittedModel, m: int):
    T = iter_solve(model.solver, np.column_stack([model.data.y, np.ones(model.data.n)]), m)
    a_y, a_1 = T[:, 0], T[:, 1]
    mu = a_y.sum() / a_1.sum()
    return a_1, a_y - mu * a_1, mu


def _weights(model: FittedModel, xs: np.ndarray, m: int):
    r = cross_corr(model.data.X, xs, CorrelationSpec(model.theta_hat, model.powers))  # q x n
    a_1, a_resid, mu = _weights_basis(model, m)
    A_r = iter_solve(model.solver, r.T, m)  # n x q
    C = A_r + np.outer(a_1, (1.0 - A_r.sum(axis=0)) / a_1.sum())
    return r, C, mu, a_resid


def predictor_weights(model: FittedModel, x_star, m: int = 1) -> np.ndarray:
    """Weight vectors ``C`` with ``mean = C'Y``, one column per query site.

    ``C = A r + A 1 (1 - 1'A r) / 1'A 1`` with ``A = R^{-1}_{delta,M}``, so
    ``C'1 = 1`` for every variant. A single d-vector query gives an n-vector.
    """
    if int(m) != m or m < 1:
        raise InputError(f"order m must be a positive integer, got {m}")
    xs = np.asarray(x_star, dtype=float)
    C = _weights(model, np.atleast_2d(xs), int(m))[1]
    return C[:, 0] if xs.ndim == 1 else C


def predict(model: FittedModel, x_star, m: int = 1) -> Prediction:
    """Posterior mean and MSE of the order-``m`` predictor.

    ``mean = mu_M + r' R^{-1}_{delta,M} (Y - mu_M 1)`` with
    ``mu_M = 1'R^{-1}_{delta,M}Y / 1'R^{-1}_{delta,M}1``, and
    ``mse = sigma^2 (1 - 2 C'r + C'RC)`` where ``C`` is the weight vector
    with ``mean = C'Y``. With a zero nugget this is the plain BLUP for every
    ``m``. A single d-vector query returns scalar-shaped arrays.

    Query sites outside the unit cube trigger a warning, not an error.
    MSE values slightly below zero (above ``-1e-8 sigma^2``) are set to 0.
    """
    if int(m) != m or m < 1:
        raise InputError(f"order m must be a positive integer, got {m}")
    m = int(m)
    xs = np.asarray(x_star, dtype=float)
    single = xs.ndim == 1
    xs = np.atleast_2d(xs)
    if np.any(xs < 0) or np.any(xs > 1):
        warnings.warn("prediction outside [0, 1]^d is extrapolation", RuntimeWarning, stacklevel=2)
    r, C, mu, a_resid = _weights(model, xs, m)
    mean = mu + r @ a_resid
    # 1 - 2C'r + C'RC regrouped as (1 - C'r) - C'(r - RC): fewer digits lost
    # when s^2 is small next to sigma^2
    cr = np.einsum("iq,qi->q", C, r)
    resid = r.T - model.R @ C
    mse = model.sigma2_hat * ((1.0 - cr) - np.einsum("iq,iq->q", C, resid))
    mse = _clamp_mse(mse, model.sigma2_hat)
    if single:
        return Prediction(mean[0], mse[0], model.variant, m)
    return Prediction(mean, mse, model.variant, m)


def _clamp_mse(mse, sigma2):
    floor = -MSE_NEG_TOL * sigma2
    if np.any(mse < floor):
        raise NumericalError(f"MSE {mse.min():.3e} is below the roundoff allowance {floor:.3e}")
    return np.where(mse < 0, 0.0, mse)


def training_predictions(model: FittedModel, m_max: int) -> np.ndarray:
    """Predictor means at the training sites for orders ``1..m_max``.

    Returns an ``m_max x n`` array; row ``k-1`` holds the order-``k`` means.
    One factorization and ``m_max`` substitutions in total.
    """
    y = model.data.y
    n = model.data.n
    T = iter_solve_path(model.solver, np.column_stack([y, np.ones(n)]), m_max)
    out = np.empty((m_max, n))
    for k in range(m_max):
        a_y, a_1 = T[k, :, 0], T[k, :, 1]
        mu = a_y.sum() / a_1.sum()
        out[k] = mu + model.R @ (a_y - mu * a_1)
    return out


def _log10_ratio(num: float, den: float) -> float:
    if num == 0.0:
        return XI_FLOOR
    v = math.log10(num / den)
    return XI_FLOOR if v < XI_CLAMP_BELOW else v


def xi_zero(model: FittedModel, m: int = 1) -> float:
    """log10 relative L1 training error of the order-``m`` predictor.

    Clamped to -16 below -15.65 (double-precision floor).
    """
    y = model.data.y
    den = np.abs(y).sum()
    if den == 0:
        raise InputError("all responses are zero; relative error is undefined")
    yhat = training_predictions(model, m)[-1]
    return _log10_ratio(float(np.abs(yhat - y).sum()), float(den))


def xi_step(model: FittedModel, k: int) -> float:
    """log10 relative change at the training sites between orders k-1 and k."""
    if int(k) != k or k < 2:
        raise InputError(f"xi_step needs k >= 2, got {k}")
    if np.abs(model.data.y).sum() == 0:
        raise InputError("all responses are zero; relative error is undefined")
    path = training_predictions(model, int(k))
    den = float(np.abs(path[-2]).sum())
    if den == 0:
        raise InputError("order k-1 predictions are all zero")
    return _log10_ratio(float(np.abs(path[-1] - path[-2]).sum()), den)


def xi_profile(model: FittedModel, m_max: int) -> tuple[np.ndarray, np.ndarray]:
    """``xi0[k-1]`` and ``xi[k-1]`` for k = 1..m_max from one solve path.

    ``xi[0]`` is NaN (undefined at k=1) unless the nugget is zero, in which
    case all orders coincide and every step value is -16.
    """
    y = model.data.y
    den = float(np.abs(y).sum())
    if den == 0:
        raise InputError("all responses are zero; relative error is undefined")
    path = training_predictions(model, m_max)
    xi0 = np.array([_log10_ratio(float(np.abs(p - y).sum()), den) for p in path])
    xi = np.full(m_max, math.nan)
    if model.delta == 0.0:
        xi[:] = XI_FLOOR
    for k in range(1, m_max):
        xi[k] = _log10_ratio(float(np.abs(path[k] - path[k - 1]).sum()), float(np.abs(path[k - 1]).sum()))
    return xi0, xi


def stop_order(model: FittedModel, tol_xi: float = -8.0, m_max: int = 20) -> StopResult:
    """Smallest order whose step diagnostic ``xi_k`` reaches ``tol_xi``.

    A zero nugget gives order 1 immediately. If no order up to ``m_max``
    qualifies, ``m_max`` is returned with ``converged=False``.
    """
    if not tol_xi < 0:
        raise InputError(f"tol_xi must be negative, got {tol_xi}")
    if int(m_max) != m_max or m_max < 1:
        raise InputError(f"m_max must be a positive integer, got {m_max}")
    if model.delta == 0.0:
        return StopResult(1, True)
    if m_max == 1:
        return StopResult(1, False)
    _, xi = xi_profile(model, int(m_max))
    for k in range(2, int(m_max) + 1):
        if xi[k - 1] <= tol_xi:
            return StopResult(k, True)
    return StopResult(int(m_max), False)
