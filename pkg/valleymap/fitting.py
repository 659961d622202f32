"""Damped Gauss-Newton least squares and maximum-likelihood estimation."""

import warnings
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy import optimize

from .models import ErrorCode, FitProblem, FitReport, ValleyMapError

logger = structlog.get_logger(__name__)

INITIAL_DAMPING = 1e-3
DAMPING_DECREASE = 3.0
DAMPING_INCREASE = 2.0
MAX_DAMPING = 1e16
REGULARIZATION = 1e-12
RELATIVE_STEP = 1e-6
STEP_NORM_TOL = 1e-12


def numeric_jacobian(
    fun: Callable[[np.ndarray], np.ndarray],
    params: np.ndarray,
    x_scale: Optional[np.ndarray] = None,
    lower: Optional[np.ndarray] = None,
    upper: Optional[np.ndarray] = None,
    f0: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Central-difference Jacobian with per-parameter relative step.

    Falls back to a one-sided difference when the central stencil would leave
    the bounds.

    Args:
        fun: Residual function.
        params: Evaluation point.
        x_scale: Typical parameter magnitudes; step floor for parameters near zero.
        lower: Lower bounds.
        upper: Upper bounds.
        f0: fun(params) if already known.

    Returns:
        Jacobian of shape (n_residuals, n_params).
    """
    p = np.asarray(params, dtype=float)
    n = p.size
    scale = np.ones(n) if x_scale is None else np.asarray(x_scale, dtype=float)
    lo = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    hi = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    if f0 is None:
        f0 = np.asarray(fun(p), dtype=float)
    jac = np.empty((f0.size, n))
    for j in range(n):
        h = RELATIVE_STEP * max(abs(p[j]), scale[j])
        forward = p.copy()
        backward = p.copy()
        forward[j] += h
        backward[j] -= h
        if forward[j] <= hi[j] and backward[j] >= lo[j]:
            jac[:, j] = (np.asarray(fun(forward)) - np.asarray(fun(backward))) / (2 * h)
        elif forward[j] <= hi[j]:
            jac[:, j] = (np.asarray(fun(forward)) - f0) / h
        else:
            jac[:, j] = (f0 - np.asarray(fun(backward))) / h
    return jac


def _covariance(jac: np.ndarray, scale: np.ndarray) -> np.ndarray:
    js = jac * scale
    cov_scaled = np.linalg.pinv(js.T @ js)
    return cov_scaled * np.outer(scale, scale)


def least_squares(problem: FitProblem) -> FitReport:
    """Minimize half the squared residual norm with Levenberg damping and bound projection.

    Damping acts in coordinates scaled by ``problem.x_scale``. Rejected steps
    count toward the iteration budget. An exhausted budget is reported through
    ``converged=False``; it is not an error.
    """
    fun = problem.residual
    lo, hi = problem.lower, problem.upper
    scale = problem.x_scale
    names = problem.names
    assert lo is not None and hi is not None and scale is not None and names is not None

    p = np.clip(problem.initial.astype(float), lo, hi)
    r = np.asarray(fun(p), dtype=float)
    if r.ndim != 1 or not np.all(np.isfinite(r)):
        raise ValleyMapError(
            ErrorCode.NUMERICAL_FAILURE,
            "Residuals are not finite at the initial parameters",
            {"initial": p.tolist()},
        )
    cost = 0.5 * float(r @ r)
    history = [cost]
    damping = INITIAL_DAMPING
    n = p.size
    jac = numeric_jacobian(fun, p, scale, lo, hi, r)
    iterations = 0
    converged = False
    message = "iteration budget exhausted"

    while iterations < problem.max_iterations:
        if cost == 0.0:
            converged, message = True, "zero cost"
            break
        iterations += 1
        js = jac * scale
        normal = js.T @ js + REGULARIZATION * np.eye(n)
        gradient = js.T @ r
        step_scaled = np.linalg.solve(normal + damping * np.eye(n), -gradient)
        trial = np.clip(p + step_scaled * scale, lo, hi)
        step = trial - p
        if np.linalg.norm(step / scale) < STEP_NORM_TOL:
            converged, message = True, "step norm below tolerance"
            break
        r_trial = np.asarray(fun(trial), dtype=float)
        cost_trial = 0.5 * float(r_trial @ r_trial) if np.all(np.isfinite(r_trial)) else np.inf
        if cost_trial < cost:
            decrease = (cost - cost_trial) / cost
            p, r, cost = trial, r_trial, cost_trial
            history.append(cost)
            damping /= DAMPING_DECREASE
            if decrease < problem.tolerance:
                converged, message = True, "relative cost decrease below tolerance"
                break
            jac = numeric_jacobian(fun, p, scale, lo, hi, r)
        else:
            damping *= DAMPING_INCREASE
            if damping > MAX_DAMPING:
                converged, message = True, "no descent direction at current damping"
                break

    m = r.size
    cov = _covariance(numeric_jacobian(fun, p, scale, lo, hi, r), scale)
    if not problem.absolute_sigma and m > n:
        cov = cov * (2.0 * cost / (m - n))
    sigmas = np.sqrt(np.abs(np.diag(cov)))

    if not converged:
        logger.warning("Least squares did not converge", iterations=iterations, cost=cost)
    else:
        logger.debug("Least squares converged", iterations=iterations, cost=cost, reason=message)

    return FitReport(
        estimates={name: float(value) for name, value in zip(names, p)},
        uncertainties={name: float(s) for name, s in zip(names, sigmas)},
        cost=cost,
        iterations=iterations,
        converged=converged,
        message=message,
        cost_history=history,
        n_observations=m,
    )


def _observed_information(
    objective: Callable[[np.ndarray], float],
    theta: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
) -> np.ndarray:
    """Central-difference Hessian, with the stencil shifted inside active bounds."""
    n = theta.size
    h = 1e-4 * np.maximum(np.abs(theta), 1.0)
    center = theta.copy()
    for i in range(n):
        if np.isfinite(lower[i]) and center[i] - 2 * h[i] < lower[i]:
            center[i] = lower[i] + 2 * h[i]
        if np.isfinite(upper[i]) and center[i] + 2 * h[i] > upper[i]:
            center[i] = upper[i] - 2 * h[i]
    f0 = objective(center)
    hess = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        hess[i, i] = (objective(center + 2 * ei) - 2 * f0 + objective(center - 2 * ei)) / (4 * h[i] ** 2)
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            value = (
                objective(center + ei + ej)
                - objective(center + ei - ej)
                - objective(center - ei + ej)
                + objective(center - ei - ej)
            ) / (4 * h[i] * h[j])
            hess[i, j] = hess[j, i] = value
    return hess


def mle_fit(
    log_density: Callable[[np.ndarray, np.ndarray], np.ndarray],
    samples: Sequence[float],
    initial: Sequence[float],
    lower: Optional[Sequence[float]] = None,
    upper: Optional[Sequence[float]] = None,
    names: Optional[Sequence[str]] = None,
    support: Tuple[float, float] = (-np.inf, np.inf),
) -> FitReport:
    """Maximize Σ log f(x_i | θ) with bounded L-BFGS-B.

    Uncertainties come from the inverse observed information. ``cost`` holds
    the squared norm of the final score, a stationarity measure; the total
    log-likelihood is reported separately.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "No samples to fit")
    if np.any(~np.isfinite(x)) or np.any(x < support[0]) or np.any(x > support[1]):
        raise ValleyMapError(
            ErrorCode.INVALID_INPUT,
            "Samples lie outside the density support",
            {"support": list(support)},
        )
    theta0 = np.asarray(initial, dtype=float)
    n = theta0.size
    lo = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    hi = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    labels = list(names) if names is not None else [f"p{i}" for i in range(n)]
    theta0 = np.clip(theta0, lo, hi)

    def mean_nll(theta: np.ndarray) -> float:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            value = -float(np.mean(log_density(x, theta)))
        return value if np.isfinite(value) else 1e300

    if not np.isfinite(mean_nll(theta0)) or mean_nll(theta0) >= 1e300:
        raise ValleyMapError(ErrorCode.NUMERICAL_FAILURE, "Log-likelihood is not finite at the initial parameters")

    bounds = [
        (None if not np.isfinite(a) else a, None if not np.isfinite(b) else b)
        for a, b in zip(lo, hi)
    ]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        result = optimize.minimize(
            mean_nll,
            theta0,
            method="L-BFGS-B",
            bounds=bounds,
            options={"ftol": 1e-15, "gtol": 1e-10, "maxiter": 2000},
        )
    theta = np.clip(result.x, lo, hi)
    info = _observed_information(mean_nll, theta, lo, hi) * x.size
    cov = np.linalg.pinv(info)
    sigmas = np.sqrt(np.abs(np.diag(cov)))
    score = np.asarray(getattr(result, "jac", np.zeros(n)), dtype=float) * x.size
    log_likelihood = -mean_nll(theta) * x.size

    # L-BFGS-B reports ABNORMAL when the line search stalls at machine precision
    converged = bool(result.success) or "ABNORMAL" in str(result.message)
    if not converged:
        logger.warning("Maximum-likelihood fit did not converge", message=str(result.message))

    return FitReport(
        estimates={name: float(v) for name, v in zip(labels, theta)},
        uncertainties={name: float(s) for name, s in zip(labels, sigmas)},
        cost=float(score @ score),
        iterations=int(result.nit),
        converged=converged,
        message=str(result.message),
        log_likelihood=log_likelihood,
        n_observations=int(x.size),
    )
