"""Benchmark simulators, conditioning calibration study and fit campaigns."""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .design import maximin_lhs
from .errors import GPRegError, InputError
from .gp import TrainingData, fit, fit_popular, xi_profile
from .kernel import DEFAULT_THRESHOLD, CorrelationSpec, condition_report, corr_matrix
from .regularize import choose_delta

__all__ = [
    "BenchmarkFunction",
    "BENCHMARKS",
    "METHODS",
    "goldprice",
    "goldstein_price",
    "perm",
    "borehole",
    "get_benchmark",
    "CalibrationRow",
    "calibrate_threshold",
    "CampaignReport",
    "run_campaign",
    "run_campaigns",
    "default_jobs",
]

DEFAULT_BETA = 0.5
CALIBRATION_THETA_RANGE = (0.01, 100.0)
# log(kappa) cannot be resolved past 1/eps in double precision
LOG_KAPPA_CEILING = -math.log(np.finfo(float).eps)

BOREHOLE_RANGES = np.array([
    [0.05, 0.15],        # r_w   borehole radius
    [100.0, 50000.0],    # r     radius of influence
    [63070.0, 115600.0], # T_u   upper aquifer transmissivity
    [63.1, 116.0],       # T_l   lower aquifer transmissivity
    [990.0, 1110.0],     # H_u   upper potentiometric head
    [700.0, 820.0],      # H_l   lower potentiometric head
    [1120.0, 1680.0],    # L     borehole length
    [9855.0, 12045.0],   # K_w   hydraulic conductivity
])


def _rows(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != dim:
        raise InputError(f"expected {dim} inputs per point, got {x.shape[-1]}")
    if np.any(x < 0) or np.any(x > 1):
        warnings.warn("benchmark evaluated outside [0, 1]^d", RuntimeWarning, stacklevel=3)
    return x


def goldprice(x) -> np.ndarray:
    """GoldPrice test function on ``[0, 1]^2`` as a two-factor product.

    Accepts a 2-vector or an ``(..., 2)`` array.
    """
    x = _rows(x, 2)
    x1, x2 = x[..., 0], x[..., 1]
    a1 = x1 / 4 + 0.5
    a2 = x2 / 4 + 0.5
    first = 1 + (x1 / 4 + 2 + x2 / 4) ** 2 * (
        5 - 7 * x1 / 2 + 3 * a1 ** 2 - 7 * x2 / 2 + (3 * x1 / 2 + 3) * a2 + 3 * a2 ** 2
    )
    second = 30 + (x1 / 2 - 0.5 - 3 * x2 / 4) ** 2 * (
        26 - 8 * x1 + 12 * a1 ** 2 + 12 * x2 - (9 * x1 + 18) * a2 + 27 * a2 ** 2
    )
    return first * second


def goldstein_price(x) -> np.ndarray:
    """Goldstein-Price function on ``[-2, 2]^2``, inputs rescaled to ``[0, 1]^2``.

    :func:`goldprice` is this same function restricted to the sub-square
    ``[0.5, 0.75]^2`` of the original coordinates (``[0.625, 0.6875]^2``
    after rescaling). This full-domain version spans five orders of
    magnitude (3 at the minimum, about 1e6 at the corners).
    """
    x = _rows(x, 2)
    a = 4.0 * x[..., 0] - 2.0
    b = 4.0 * x[..., 1] - 2.0
    first = 1 + (a + b + 1) ** 2 * (19 - 14 * a + 3 * a ** 2 - 14 * b + 6 * a * b + 3 * b ** 2)
    second = 30 + (2 * a - 3 * b) ** 2 * (18 - 32 * a + 12 * a ** 2 + 48 * b - 36 * a * b + 27 * b ** 2)
    return first * second


def perm(x, beta: float = DEFAULT_BETA) -> np.ndarray:
    """Perm function with inputs rescaled from ``[-3, 3]^3`` to ``[0, 1]^3``."""
    x = _rows(x, 3)
    u = -3.0 + 6.0 * x
    total = 0.0
    for k in (1, 2, 3):
        inner = 0.0
        for i in (1, 2, 3):
            inner = inner + (i ** k + beta) * ((u[..., i - 1] / i) ** k - 1.0)
        total = total + inner ** 2
    return total


def borehole(x) -> np.ndarray:
    """Borehole flow rate with the eight inputs rescaled to ``[0, 1]``."""
    x = _rows(x, 8)
    lo, hi = BOREHOLE_RANGES[:, 0], BOREHOLE_RANGES[:, 1]
    p = lo + x * (hi - lo)
    rw, r, tu, tl, hu, hl, length, kw = (p[..., k] for k in range(8))
    log_ratio = np.log(r / rw)
    return 2 * np.pi * tu * (hu - hl) / (
        log_ratio * (1 + 2 * length * tu / (log_ratio * rw ** 2 * kw) + tu / tl)
    )


@dataclass(frozen=True)
class BenchmarkFunction:
    """A named deterministic simulator on the unit cube."""

    name: str
    dim: int
    domain: tuple
    params: dict = field(default_factory=dict)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.name == "goldprice":
            return goldprice(x)
        if self.name == "goldstein_price":
            return goldstein_price(x)
        if self.name == "perm":
            return perm(x, **self.params)
        if self.name == "borehole":
            return borehole(x)
        raise InputError(f"unknown benchmark {self.name!r}")


BENCHMARKS = {
    "goldprice": BenchmarkFunction("goldprice", 2, ((0.0, 1.0),) * 2),
    "goldstein_price": BenchmarkFunction("goldstein_price", 2, ((-2.0, 2.0),) * 2),
    "perm": BenchmarkFunction("perm", 3, ((-3.0, 3.0),) * 3, {"beta": DEFAULT_BETA}),
    "borehole": BenchmarkFunction("borehole", 8, tuple(map(tuple, BOREHOLE_RANGES))),
}


def get_benchmark(name: str, beta: float = None) -> BenchmarkFunction:
    try:
        func = BENCHMARKS[name]
    except KeyError:
        raise InputError(f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}") from None
    if beta is not None and name == "perm":
        func = BenchmarkFunction(func.name, func.dim, func.domain, {"beta": float(beta)})
    return func


def default_jobs() -> int:
    """Worker count from ``GPREG_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("GPREG_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# conditioning calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationRow:
    n: int
    d: int
    reps: int
    prop_singular: float
    mean_log_kappa: float
    prop_flagged: float
    n_flagged: int
    max_shifted_log_kappa: float

    CSV_COLUMNS = ("n", "d", "prop_singular", "mean_log_kappa")


def _calibration_cell(n, d, reps, seed, a, theta_range, n_candidates):
    log_lo, log_hi = math.log(theta_range[0]), math.log(theta_range[1])
    chol_fail = flagged = 0
    log_kappas = np.empty(reps)
    worst = -math.inf
    for rep in range(reps):
        rng = np.random.default_rng([seed, n, d, rep])
        design = maximin_lhs(n, d, n_candidates, seed=[seed, n, d, rep])
        theta = np.exp(rng.uniform(log_lo, log_hi, size=d))
        R = corr_matrix(design, CorrelationSpec(theta))
        report = condition_report(R, a)
        chol_fail += report.cholesky_failed
        log_kappas[rep] = min(report.log_kappa, LOG_KAPPA_CEILING)
        if report.near_singular:
            flagged += 1
            delta = choose_delta(report)
            lam = np.linalg.eigvalsh(R + delta * np.eye(n))
            worst = max(worst, math.log(lam[-1] / lam[0]))
    return CalibrationRow(n, d, reps, chol_fail / reps, float(log_kappas.mean()),
                          flagged / reps, flagged, worst)


def calibrate_threshold(grid, reps: int = 500, seed=0, a: float = DEFAULT_THRESHOLD,
                        theta_range=CALIBRATION_THETA_RANGE, n_candidates: int = 100,
                        n_jobs: int = 1) -> list[CalibrationRow]:
    """Near-singularity frequency of random correlation matrices.

    For each ``(n, d)`` cell draw ``reps`` maximin LHS designs and
    log-uniform ``theta`` in ``theta_range``; record the Cholesky-failure
    proportion and the mean ``log kappa`` (capped at ``log(1/eps)``). For
    every matrix flagged near-singular, the shifted matrix ``R + delta_lb I``
    is re-examined and the worst ``log kappa`` kept in
    ``max_shifted_log_kappa``.
    """
    if int(reps) != reps or reps < 1:
        raise InputError(f"reps must be a positive integer, got {reps}")
    cells = [(int(n), int(d)) for n, d in grid]
    args = [(n, d, int(reps), seed, a, theta_range, n_candidates) for n, d in cells]
    if n_jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(_calibration_cell, *zip(*args)))
    return [_calibration_cell(*arg) for arg in args]


# ---------------------------------------------------------------------------
# fit campaigns
# ---------------------------------------------------------------------------

# method label -> (fitter, likelihood floor / popular floor, prediction order)
METHODS = {
    "popular_1e5": ("popular", 1e-5, 1),
    "popular_1e10": ("popular", 1e-10, 1),
    "lb_M1": ("lb", 0.0, 1),
    "lb_M5": ("lb", 0.0, 5),
    "lb_M20": ("lb", 0.0, 20),
}


def percentiles(values) -> tuple[float, float, float]:
    """(P5, P50, P95) with linear interpolation between order statistics."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return (math.nan, math.nan, math.nan)
    p5, p50, p95 = np.percentile(v, [5, 50, 95], method="linear")
    return float(p5), float(p50), float(p95)


@dataclass
class CampaignReport:
    """Distribution of the training-error diagnostic over replicate fits."""

    method: str
    func: str
    n: int
    replicates: int
    xi0_values: list
    percentiles: tuple
    seeds: dict
    params: dict = field(default_factory=dict)
    n_failed: int = 0
    failures: list = field(default_factory=list)
    deltas: list = field(default_factory=list)
    thetas: list = field(default_factory=list)

    @property
    def median(self) -> float:
        return self.percentiles[1]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["percentiles"] = {"P5": self.percentiles[0], "P50": self.percentiles[1], "P95": self.percentiles[2]}
        return out

    def summary_row(self) -> dict:
        p5, p50, p95 = self.percentiles
        return {"func": self.func, "n": self.n, "method": self.method, "replicates": self.replicates,
                "failed": self.n_failed, "P50": p50, "P5": p5, "P95": p95,
                "table_entry": f"{p50:.2f} ({p5:.2f}, {p95:.2f})"}


def _replicate(func: BenchmarkFunction, n, methods, seed, index, n_restarts, n_candidates):
    """Fit one fresh design with each requested fitter; lb fits are shared."""
    design = maximin_lhs(n, func.dim, n_candidates, seed=[seed, index])
    data = TrainingData(design, func(design.points))
    fit_seed = [seed, index, 1]
    out = {}
    cache = {}
    for method in methods:
        kind, floor, order = METHODS[method]
        key = (kind, floor)
        try:
            if key not in cache:
                if kind == "lb":
                    cache[key] = fit(data, n_restarts=n_restarts, seed=fit_seed)
                else:
                    cache[key] = fit_popular(data, delta_floor=floor, n_restarts=n_restarts, seed=fit_seed)
            model = cache[key]
            if isinstance(model, Exception):
                raise model
            xi0, _ = xi_profile(model, order)
            out[method] = {"xi0": float(xi0[-1]), "delta": float(model.delta),
                           "theta": [float(t) for t in model.theta_hat]}
        except (GPRegError, np.linalg.LinAlgError, FloatingPointError) as exc:
            cache.setdefault(key, exc)
            out[method] = {"error": f"{type(exc).__name__}: {exc}"}
    return index, out


def run_campaigns(func, n: int, methods, replicates: int = 50, seed=0, n_restarts: int = 8,
                  n_candidates: int = 100, n_jobs: int = None) -> dict[str, CampaignReport]:
    """Several methods on the same replicate designs.

    Replicate ``i`` uses the design ``maximin_lhs(n, d, seed=[seed, i])`` for
    every method, so the comparison is paired; lb-based methods share one fit
    and differ only in the prediction order.
    """
    if isinstance(func, str):
        func = get_benchmark(func)
    methods = list(methods)
    for m in methods:
        if m not in METHODS:
            raise InputError(f"unknown method {m!r}; choose from {sorted(METHODS)}")
    if int(replicates) != replicates or replicates < 1:
        raise InputError(f"replicates must be a positive integer, got {replicates}")
    n_jobs = default_jobs() if n_jobs is None else max(1, int(n_jobs))
    args = [(func, int(n), methods, seed, i, n_restarts, n_candidates) for i in range(int(replicates))]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_replicate, *zip(*args)))
    else:
        results = [_replicate(*arg) for arg in args]
    results.sort(key=lambda item: item[0])
    reports = {}
    for method in methods:
        values, failures, deltas, thetas = [], [], [], []
        for index, out in results:
            rec = out[method]
            if "error" in rec:
                failures.append({"replicate": index, "error": rec["error"]})
                continue
            values.append(rec["xi0"])
            deltas.append(rec["delta"])
            thetas.append(rec["theta"])
        reports[method] = CampaignReport(
            method=method, func=func.name, n=int(n), replicates=len(values), xi0_values=values,
            percentiles=percentiles(values),
            seeds={"campaign": seed, "design": "[seed, replicate]", "fit": "[seed, replicate, 1]"},
            params=dict(func.params), n_failed=len(failures), failures=failures,
            deltas=deltas, thetas=thetas,
        )
    return reports


def run_campaign(func, n: int, method: str, replicates: int = 50, seed=0, n_restarts: int = 8,
                 n_candidates: int = 100, n_jobs: int = None) -> CampaignReport:
    """Replicated fits of one method; see :func:`run_campaigns`."""
    return run_campaigns(func, n, [method], replicates, seed, n_restarts, n_candidates, n_jobs)[method]
