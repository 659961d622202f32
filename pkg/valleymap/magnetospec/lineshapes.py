"""Thermal lineshapes of the 01 and 12 charge transitions versus field, and their fits.

Voltages are in V, energies in µeV and the lever arm in eV/V, so an energy E
shifts a transition by E / (alpha·1e6) volts.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy.special import logsumexp

from ..fitting import least_squares
from ..models import (
    ErrorCode,
    ESTFit,
    Fit01Result,
    FitProblem,
    FitReport,
    MagnetospecModel,
    TransitionPosition,
    ValleyMapError,
)
from ..physics import CONSTANTS

logger = structlog.get_logger(__name__)

MICRO = 1e6
MIN_POSITIONS = 5
LINEAR_REGIME_FACTOR = 4.0
ALPHA_BOUNDS = (1e-4, 10.0)
TEMPERATURE_BOUNDS = (1e-3, 10.0)
EST_BOUNDS = (1e-3, 1e3)
DEFAULT_ALPHA = 0.1
DEFAULT_TEMPERATURE = 0.1


def _thermal_energy(temperature: float) -> float:
    return CONSTANTS.k_B * temperature


def _volts_per_energy(alpha: float) -> float:
    return 1.0 / (alpha * MICRO)


def v01_curve(B: np.ndarray, alpha: float, temperature: float, V0: float = 0.0, g: float = 2.0) -> np.ndarray:
    """01 transition voltage: V0 − (kT/2α)·(x + 2·ln(1 + e^{−x})) with x = g·µ_B·B/kT.

    Tends to V0 − ln2·kT/α at zero field and to slope −g·µ_B/(2α) at large field.
    """
    kT = _thermal_energy(temperature)
    x = g * CONSTANTS.mu_B * np.asarray(B, dtype=float) / kT
    return V0 - 0.5 * kT * _volts_per_energy(alpha) * (x + 2 * np.logaddexp(0.0, -x))


def v12_curve(
    B: np.ndarray, alpha: float, temperature: float, E_ST: float, V0: float = 0.0, g: float = 2.0
) -> np.ndarray:
    """12 transition voltage, with ε = e^{x}:

    V0 + (kT/α)·ln[(ε + 1)·ε^{1/2}·e^{E_ST/kT} / (ε·e^{E_ST/kT} + ε² + ε + 1)]

    The field dependence kinks from rising to falling where g·µ_B·B = E_ST.
    """
    kT = _thermal_energy(temperature)
    x = g * CONSTANTS.mu_B * np.asarray(B, dtype=float) / kT
    e = E_ST / kT
    numerator = np.logaddexp(x, 0.0) + 0.5 * x + e
    terms = np.stack(np.broadcast_arrays(x + e, 2 * x, x, np.zeros_like(x)))
    denominator = logsumexp(terms, axis=0)
    return V0 + kT * _volts_per_energy(alpha) * (numerator - denominator)


def _valid_arrays(positions: Sequence[TransitionPosition]) -> Tuple[np.ndarray, np.ndarray]:
    valid = [p for p in positions if p.valid and p.V is not None]
    B = np.array([p.B for p in valid], dtype=float)
    V = np.array([p.V for p in valid], dtype=float)
    return B, V


def _residual_grid(positions: Sequence[TransitionPosition], model: MagnetospecModel) -> Tuple[np.ndarray, np.ndarray]:
    """Field grid of all lines and measured-minus-model voltages, NaN on skipped lines."""
    B = np.array([p.B for p in positions], dtype=float)
    residuals = np.full(B.size, np.nan)
    for k, p in enumerate(positions):
        if p.valid and p.V is not None:
            residuals[k] = p.V - float(v01_curve(p.B, model.alpha, model.temperature, model.V0, model.g))
    return B, residuals


def initial_01_parameters(B: np.ndarray, V: np.ndarray, g: float = 2.0) -> Tuple[float, float, float]:
    """(alpha, T, V0) from the large-field asymptote and the zero-field offset."""
    order = np.argsort(B)
    B, V = B[order], V[order]
    tail = slice(2 * B.size // 3, None)
    slope, intercept = np.polyfit(B[tail], V[tail], 1)
    alpha = -g * CONSTANTS.mu_B / (2 * slope) / MICRO if slope < 0 else DEFAULT_ALPHA
    alpha = float(np.clip(alpha, *ALPHA_BOUNDS))
    head = V[: max(1, B.size // 20)].mean()
    drop = intercept - head
    kT = drop * alpha * MICRO / math.log(2) if drop > 0 else _thermal_energy(DEFAULT_TEMPERATURE)
    temperature = float(np.clip(kT / CONSTANTS.k_B, *TEMPERATURE_BOUNDS))
    return alpha, temperature, float(intercept)


def fit_01_transition(positions: Sequence[TransitionPosition], g: float = 2.0, max_iterations: int = 300) -> Fit01Result:
    """Fit alpha, T and V0 of the 01 lineshape with g fixed.

    Residuals are kept on the full line grid (NaN on skipped lines) for
    correlated-noise subtraction. The result is flagged non-identifiable when
    the field range misses either the thermal plateau or the linear regime.
    """
    B, V = _valid_arrays(positions)
    if B.size < MIN_POSITIONS:
        raise ValleyMapError(
            ErrorCode.NO_RESULT,
            "Too few tracked 01 positions to fit",
            {"valid": int(B.size), "required": MIN_POSITIONS},
        )
    alpha0, temperature0, V0_0 = initial_01_parameters(B, V, g)

    def residual(params: np.ndarray) -> np.ndarray:
        return (v01_curve(B, params[0], params[1], params[2], g) - V) * MICRO

    report = least_squares(
        FitProblem(
            residual=residual,
            initial=[alpha0, temperature0, V0_0],
            lower=[ALPHA_BOUNDS[0], TEMPERATURE_BOUNDS[0], -np.inf],
            upper=[ALPHA_BOUNDS[1], TEMPERATURE_BOUNDS[1], np.inf],
            names=["alpha", "temperature", "V0"],
            x_scale=[alpha0, temperature0, 1e-4],
            max_iterations=max_iterations,
        )
    )
    model = MagnetospecModel(
        alpha=report.value("alpha"), temperature=report.value("temperature"), V0=report.value("V0"), g=g
    )
    kT = _thermal_energy(model.temperature)
    zeeman = g * CONSTANTS.mu_B * B
    identifiable = bool(zeeman.min() <= kT and zeeman.max() >= LINEAR_REGIME_FACTOR * kT)
    identifiable = identifiable and all(math.isfinite(s) for s in report.uncertainties.values())
    if not identifiable:
        logger.warning(
            "Field range does not constrain alpha and T independently",
            B_min=float(B.min()),
            B_max=float(B.max()),
            kT_ueV=kT,
        )
    grid, residuals = _residual_grid(positions, model)
    logger.info(
        "01 transition fitted",
        alpha=model.alpha,
        temperature=model.temperature,
        V0=model.V0,
        converged=report.converged,
    )
    return Fit01Result(model=model, report=report, B=grid, residuals=residuals, identifiable=identifiable)


def fixed_01_result(positions: Sequence[TransitionPosition], model: MagnetospecModel) -> Fit01Result:
    """Residuals of the 01 positions against a given model, without refitting."""
    grid, residuals = _residual_grid(positions, model)
    finite = residuals[np.isfinite(residuals)]
    report = FitReport(
        estimates={"alpha": model.alpha, "temperature": model.temperature, "V0": model.V0},
        uncertainties={"alpha": 0.0, "temperature": 0.0, "V0": 0.0},
        cost=0.5 * float(np.sum((finite * MICRO) ** 2)),
        iterations=0,
        converged=True,
        message="parameters fixed",
        n_observations=int(finite.size),
    )
    return Fit01Result(model=model, report=report, B=grid, residuals=residuals, identifiable=True)


def fit_EST(
    positions: Sequence[TransitionPosition],
    model: MagnetospecModel,
    initial_E_ST: Optional[float] = None,
    max_iterations: int = 300,
) -> ESTFit:
    """Fit E_ST and V0 of the 12 lineshape with alpha, T and g from the 01 fit.

    V0 is refitted rather than inherited. ``kink_in_range`` is False when
    g·µ_B·B_max ≤ E_ST, i.e. the kink lies beyond the sweep.
    """
    B, V = _valid_arrays(positions)
    if B.size < MIN_POSITIONS:
        raise ValleyMapError(
            ErrorCode.NO_RESULT,
            "Too few 12 positions to fit",
            {"valid": int(B.size), "required": MIN_POSITIONS},
        )
    zeeman_max = model.g * CONSTANTS.mu_B * float(B.max())
    if initial_E_ST is None:
        initial_E_ST = model.g * CONSTANTS.mu_B * float(B[np.argmax(V)])
    E0 = float(np.clip(initial_E_ST, EST_BOUNDS[0] * 10, EST_BOUNDS[1] / 2))
    def residual(params: np.ndarray) -> np.ndarray:
        return (v12_curve(B, model.alpha, model.temperature, params[0], params[1], model.g) - V) * MICRO

    starts: List[float] = [E0, 0.5 * E0, min(2.0 * E0, EST_BOUNDS[1] / 2)]
    best: Optional[FitReport] = None
    for start in starts:
        v0 = float(np.mean(V - v12_curve(B, model.alpha, model.temperature, start, 0.0, model.g)))
        report = least_squares(
            FitProblem(
                residual=residual,
                initial=[start, v0],
                lower=[EST_BOUNDS[0], -np.inf],
                upper=[EST_BOUNDS[1], np.inf],
                names=["E_ST", "V0"],
                x_scale=[10.0, 1e-4],
                max_iterations=max_iterations,
            )
        )
        if best is None or report.cost < best.cost:
            best = report
    assert best is not None

    E_ST = best.value("E_ST")
    kink_in_range = bool(E_ST < zeeman_max)
    if not kink_in_range:
        logger.warning("Singlet-triplet kink lies beyond the field sweep", E_ST=E_ST, zeeman_max_ueV=zeeman_max)
    kT = _thermal_energy(model.temperature)
    if E_ST < kT:
        logger.warning("Singlet-triplet splitting below the thermal energy", E_ST=E_ST, kT_ueV=kT)
    logger.info("E_ST fitted", E_ST=E_ST, E_ST_sigma=best.sigma("E_ST"), converged=best.converged)
    return ESTFit(
        E_ST=E_ST,
        E_ST_sigma=best.sigma("E_ST"),
        V0=best.value("V0"),
        report=best,
        kink_in_range=kink_in_range,
    )
