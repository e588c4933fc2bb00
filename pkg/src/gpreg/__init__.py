"""Gaussian-process emulators for deterministic computer simulators.

Near-singular correlation matrices are handled with the smallest nugget that
restores a target condition number, followed by an iterative (von Neumann)
correction that recovers the interpolating predictor.
"""

from .design import Design, latin_hypercube, maximin_lhs, min_intersite_distance
from .errors import GPRegError, InputError, NumericalError
from .gp import (
    FittedModel,
    Prediction,
    TrainingData,
    fit,
    fit_popular,
    fixed_model,
    predict,
    predictor_weights,
    profile_neg2_loglik,
    stop_order,
    xi_profile,
    xi_step,
    xi_zero,
)
from .kernel import ConditioningReport, CorrelationSpec, condition_report, corr_matrix, cross_corr, eigen_extremes
from .regularize import RegularizedSolver, choose_delta, delta_lower_bound, iter_solve, log_det_inv_approx

__version__ = "0.1.0"
