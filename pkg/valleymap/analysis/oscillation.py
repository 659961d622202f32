"""Decaying-cosine fits of singlet-probability traces."""

import math
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
import structlog

from ..fitting import least_squares
from ..models import ErrorCode, FitProblem, OscillationFit, ProbabilityMap, ValleyMapError

logger = structlog.get_logger(__name__)

MIN_SAMPLES = 8
ZERO_PADDING = 8
NOISE_FLOOR_FACTOR = 2.0
GRID_POINTS = 400
PARAM_NAMES = ["a", "nu", "phi", "T2_star", "c"]


class FrequencyTable(NamedTuple):
    """Per-field precession frequencies with 1σ uncertainties."""

    B: np.ndarray
    nu: np.ndarray
    nu_sigma: np.ndarray


def oscillation_model(tau: np.ndarray, a: float, nu: float, phi: float, T2_star: float, c: float) -> np.ndarray:
    """a·exp(-(τ/T2*)²)·cos(2πντ + φ) + c."""
    return a * np.exp(-((tau / T2_star) ** 2)) * np.cos(2 * np.pi * nu * tau + phi) + c


def _grid_search(tau: np.ndarray, y: np.ndarray, nu_max: float) -> float:
    """Frequency whose best linear sinusoid leaves the smallest residual."""
    span = tau[-1] - tau[0]
    candidates = np.linspace(0.5 / span, nu_max, GRID_POINTS)
    best, best_residual = candidates[0], np.inf
    for nu in candidates:
        basis = np.column_stack([np.cos(2 * np.pi * nu * tau), np.sin(2 * np.pi * nu * tau), np.ones_like(tau)])
        coef = np.linalg.lstsq(basis, y, rcond=None)[0]
        value = float(np.sum((basis @ coef - y) ** 2))
        if value < best_residual:
            best, best_residual = nu, value
    return float(best)


def initial_frequency(tau: np.ndarray, y: np.ndarray) -> float:
    """Dominant non-zero frequency of a mean-subtracted trace, Hz."""
    dt = float(np.median(np.diff(tau)))
    n_fft = ZERO_PADDING * tau.size
    power = np.abs(np.fft.rfft(y, n=n_fft)) ** 2
    freqs = np.fft.rfftfreq(n_fft, dt)
    peak = 1 + int(np.argmax(power[1:]))
    floor = float(np.median(power[1:]))
    if not power[peak] > NOISE_FLOOR_FACTOR * floor:
        logger.debug("Periodogram peak below noise floor, using grid search", peak=float(power[peak]), floor=floor)
        return _grid_search(tau, y, float(freqs[-1]))
    return float(freqs[peak])


def _wrap(phi: float) -> float:
    wrapped = math.remainder(phi, 2 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def fit_oscillation(tau: Sequence[float], trace: Sequence[float], max_iterations: int = 200) -> OscillationFit:
    """Fit a decaying cosine to P_S(τ) at fixed field.

    The trace is mean-subtracted before fitting; the reported offset adds the
    mean back. Amplitudes below twice the residual RMS set ``low_visibility``.
    """
    t = np.asarray(tau, dtype=float)
    p = np.asarray(trace, dtype=float)
    if t.ndim != 1 or t.shape != p.shape:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "tau and trace must be 1D arrays of equal length")
    if t.size < MIN_SAMPLES:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, f"At least {MIN_SAMPLES} samples are required", {"samples": int(t.size)})
    if np.any(np.diff(t) <= 0) or not np.all(np.isfinite(p)):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "tau must increase strictly and the trace must be finite")

    mean = float(p.mean())
    y = p - mean
    span = float(t[-1] - t[0])
    nyquist = 0.5 / float(np.median(np.diff(t)))

    nu0 = initial_frequency(t, y)
    carrier = 2 * np.pi * nu0 * t
    in_phase, quadrature = float(y @ np.cos(carrier)), float(y @ np.sin(carrier))
    phi0 = math.atan2(-quadrature, in_phase)
    a0 = min(2 * math.hypot(in_phase, quadrature) / t.size, 1.0)

    def residual(params: np.ndarray) -> np.ndarray:
        return oscillation_model(t, *params) - y

    problem = FitProblem(
        residual=residual,
        initial=[a0, nu0, phi0, span, 0.0],
        lower=[0.0, 0.0, -4 * math.pi, 0.05 * span, -1.0],
        upper=[1.0, 2 * nyquist, 4 * math.pi, 1e3 * span, 1.0],
        names=PARAM_NAMES,
        x_scale=[1.0, 1e6, 1.0, 1e-6, 1.0],
        max_iterations=max_iterations,
    )
    report = least_squares(problem)
    a, nu, phi, T2, c = (report.value(name) for name in PARAM_NAMES)
    rms = math.sqrt(2 * report.cost / t.size)
    low_visibility = a < max(2 * rms, 1e-6)
    if low_visibility:
        logger.warning("Oscillation amplitude below noise floor", amplitude=a, residual_rms=rms)

    return OscillationFit(
        a=a,
        nu=nu,
        phi=_wrap(phi),
        T2_star=T2,
        c=c + mean,
        nu_sigma=report.sigma("nu"),
        low_visibility=low_visibility,
        report=report,
    )


def extract_frequencies(scan: ProbabilityMap, skip_low_visibility: bool = True) -> FrequencyTable:
    """Fit every field column of a P_S(τ, B) map and tabulate ν(B)."""
    if scan.axis1_name not in ("tau", "tau_w"):
        raise ValleyMapError(
            ErrorCode.INVALID_INPUT,
            "Frequency extraction needs a time-resolved map",
            {"axis1": scan.axis1_name},
        )
    rows: List[Optional[OscillationFit]] = []
    for j in range(scan.axis2.size):
        fit = fit_oscillation(scan.axis1, scan.P[:, j])
        rows.append(None if (fit.low_visibility and skip_low_visibility) else fit)
    keep = [j for j, fit in enumerate(rows) if fit is not None]
    if not keep:
        raise ValleyMapError(ErrorCode.NO_RESULT, "No column shows a resolvable oscillation")
    logger.info("Frequencies extracted", columns=scan.axis2.size, kept=len(keep))
    return FrequencyTable(
        B=scan.axis2[keep].copy(),
        nu=np.array([rows[j].nu for j in keep]),  # type: ignore[union-attr]
        nu_sigma=np.array([rows[j].nu_sigma for j in keep]),  # type: ignore[union-attr]
    )
