"""Anticrossing-spectrum fits of ν(B) with the spin-valley Hamiltonian."""

from typing import List, Optional, Sequence

import numpy as np
import structlog

from ..fitting import least_squares
from ..models import ErrorCode, FitProblem, FitReport, SpectrumFit, SpinValleyParams, ValleyMapError
from ..physics import CONSTANTS, precession_frequency_array

logger = structlog.get_logger(__name__)

PARAM_NAMES = ["delta_g", "E_l", "E_r", "v_l", "v_r"]
LOWER = [-0.099, 0.0, 0.0, 0.0, 0.0]
UPPER = [0.099, 1000.0, 1000.0, 5.0, 5.0]
X_SCALE = [1e-4, 1.0, 1.0, 0.01, 0.01]
INITIAL_COUPLING = 0.05
MIN_DIP_SEPARATION = 0.02  # T
LABEL_NOTE = (
    "Dot labels are interchangeable: swapping (E_l, v_l) with (E_r, v_r) and negating "
    "delta_g gives the same spectrum; results are reported with delta_g >= 0"
)


def find_dips(B: np.ndarray, nu: np.ndarray, slope: float, max_dips: int = 2) -> List[float]:
    """Fields of the strongest significant drops of ν below the Δg baseline."""
    residual = nu - slope * B
    noise = 1.4826 * float(np.median(np.abs(residual - np.median(residual))))
    candidates = np.argsort(residual)
    dips: List[float] = []
    for index in candidates:
        if residual[index] >= -3 * noise or residual[index] >= 0:
            break
        if all(abs(B[index] - other) > MIN_DIP_SEPARATION for other in dips):
            dips.append(float(B[index]))
        if len(dips) == max_dips:
            break
    return sorted(dips)


def _canonical(params: SpinValleyParams) -> SpinValleyParams:
    return params.swapped() if params.delta_g < 0 else params


def fit_anticrossing_spectrum(
    B: Sequence[float],
    nu: Sequence[float],
    nu_sigma: Optional[Sequence[float]] = None,
    g_base: float = 2.0,
    max_iterations: int = 300,
) -> SpectrumFit:
    """Weighted least-squares fit of precession_frequency to measured ν(B).

    Starts are seeded from the dip fields (E = g·µ_B·B_dip) and the median
    off-resonant slope (Δg); both label assignments and ±1 grid-step offsets are
    tried and the lowest cost wins.
    """
    fields = np.asarray(B, dtype=float)
    freqs = np.asarray(nu, dtype=float)
    if fields.ndim != 1 or fields.shape != freqs.shape or fields.size < 6:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Need at least 6 (B, nu) points of equal length")
    if np.any(fields <= 0) or not np.all(np.isfinite(freqs)):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Fields must be positive and frequencies finite")
    order = np.argsort(fields)
    fields, freqs = fields[order], freqs[order]
    absolute_sigma = nu_sigma is not None
    if nu_sigma is None:
        sigma = np.ones_like(freqs)
    else:
        sigma = np.asarray(nu_sigma, dtype=float)[order]
        sigma = np.where(sigma > 0, sigma, 1.0)

    slope = float(np.median(freqs / fields))
    delta_g0 = slope * CONSTANTS.h / CONSTANTS.mu_B
    dips = find_dips(fields, freqs, slope)
    underdetermined = len(dips) < 2
    notes = [LABEL_NOTE]
    if underdetermined:
        notes.append(f"Only {len(dips)} anticrossing dip(s) found for five free parameters")
        logger.warning("Spectrum fit under-determined", dips=len(dips))
    span = fields[-1] - fields[0]
    while len(dips) < 2:
        dips.append(float(fields[-1] + 0.1 * span * len(dips) + 0.05 * span))
    step = float(np.median(np.diff(fields)))
    energy = g_base * CONSTANTS.mu_B

    def residual(params: np.ndarray) -> np.ndarray:
        model = precession_frequency_array(
            params[0], params[1], params[2], params[3], params[4], g_base, fields
        )
        return (model - freqs) / sigma

    best: Optional[FitReport] = None
    labelings = ((dips[0], dips[1]), (dips[1], dips[0]))
    starts = [(low, high, shift) for low, high in labelings for shift in (0.0, -step, step)]
    for low, high, shift in starts:
        initial = np.clip(
            [delta_g0, energy * (high + shift), energy * (low + shift), INITIAL_COUPLING, INITIAL_COUPLING],
            LOWER,
            UPPER,
        )
        report = least_squares(
            FitProblem(
                residual=residual,
                initial=initial,
                lower=LOWER,
                upper=UPPER,
                names=PARAM_NAMES,
                x_scale=X_SCALE,
                max_iterations=max_iterations,
                absolute_sigma=absolute_sigma,
            )
        )
        logger.debug("Spectrum start finished", E_l0=initial[1], E_r0=initial[2], cost=report.cost)
        if best is None or report.cost < best.cost:
            best = report
    assert best is not None

    params = _canonical(
        SpinValleyParams(
            delta_g=best.value("delta_g"),
            E_l=best.value("E_l"),
            E_r=best.value("E_r"),
            v_l=best.value("v_l"),
            v_r=best.value("v_r"),
            g_base=g_base,
        )
    )
    if best.value("delta_g") < 0:
        swap = {"delta_g": "delta_g", "E_l": "E_r", "E_r": "E_l", "v_l": "v_r", "v_r": "v_l"}
        best = best.model_copy(
            update={
                "estimates": {name: getattr(params, name) for name in PARAM_NAMES},
                "uncertainties": {name: best.sigma(swap[name]) for name in PARAM_NAMES},
            }
        )
    logger.info(
        "Anticrossing spectrum fitted",
        E_l=params.E_l,
        E_r=params.E_r,
        delta_g=params.delta_g,
        cost=best.cost,
        converged=best.converged,
    )
    return SpectrumFit(params=params, report=best, underdetermined=underdetermined, notes=notes)
