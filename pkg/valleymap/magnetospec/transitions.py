"""Transition tracking, synthetic scans and the magnetospectroscopy pipeline."""

from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog

from ..fitting import least_squares
from ..models import (
    ErrorCode,
    Fit01Result,
    FitProblem,
    MagnetospecModel,
    MagnetospecReport,
    TransitionPosition,
    TransitionScan,
    ValleyMapError,
)
from .filters import filter_scan
from .lineshapes import fit_01_transition, fit_EST, fixed_01_result, v01_curve, v12_curve

logger = structlog.get_logger(__name__)

MAD_TO_SIGMA = 1.4826
DEFAULT_THRESHOLD = 5.0
FIT_HALFWIDTHS = 4.0
MIN_WINDOW_POINTS = 5
GRID_TOLERANCE = 1e-9


def lorentzian(V: np.ndarray, amplitude: float, center: float, gamma: float, offset: float) -> np.ndarray:
    """amplitude·γ²/((V − center)² + γ²) + offset, γ the half width at half maximum."""
    return amplitude * gamma**2 / ((V - center) ** 2 + gamma**2) + offset


def _half_width(row: np.ndarray, peak: int, level: float) -> int:
    """Samples from the peak to the first point below ``level`` on either side, averaged."""
    above = row >= level
    right = peak
    while right + 1 < row.size and above[right + 1]:
        right += 1
    left = peak
    while left > 0 and above[left - 1]:
        left -= 1
    return max(1, (right - left + 1) // 2)


def _fit_line(V: np.ndarray, row: np.ndarray, peak: int, amplitude: float, baseline: float) -> Tuple[float, float]:
    dV = float(np.median(np.diff(V)))
    halfwidth = _half_width(row, peak, baseline + amplitude / 2)
    reach = int(max(FIT_HALFWIDTHS * halfwidth, MIN_WINDOW_POINTS // 2 + 1))
    window = slice(max(0, peak - reach), min(V.size, peak + reach + 1))
    x, y = V[window], row[window]

    def residual(params: np.ndarray) -> np.ndarray:
        return (lorentzian(x, *params) - y) / amplitude

    report = least_squares(
        FitProblem(
            residual=residual,
            initial=[amplitude, V[peak], halfwidth * dV, baseline],
            lower=[0.0, x[0], dV / 4, -np.inf],
            upper=[np.inf, x[-1], V[-1] - V[0], np.inf],
            names=["amplitude", "center", "gamma", "offset"],
            x_scale=[amplitude, dV, halfwidth * dV, amplitude],
        )
    )
    return report.value("center"), report.sigma("center")


def track_transition(
    filtered: TransitionScan,
    threshold: float = DEFAULT_THRESHOLD,
    polarity: Optional[int] = None,
) -> List[TransitionPosition]:
    """Lorentzian peak position of every field line of a filtered scan.

    A line whose peak stands less than ``threshold`` robust standard deviations
    above its median, or sits on the voltage-axis edge, is returned with
    ``valid=False``. ``polarity`` defaults to the sign of the strongest pixel.
    """
    signal = filtered.signal
    if signal.shape[1] < MIN_WINDOW_POINTS:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Voltage axis too short to fit a peak", {"points": signal.shape[1]})
    if polarity is None:
        polarity = 1 if signal.max() >= -signal.min() else -1
    V = filtered.V
    positions: List[TransitionPosition] = []
    for i, B in enumerate(filtered.B):
        row = polarity * signal[i]
        baseline = float(np.median(row))
        noise = MAD_TO_SIGMA * float(np.median(np.abs(row - baseline)))
        peak = int(np.argmax(row))
        amplitude = float(row[peak]) - baseline
        if not amplitude > threshold * noise or peak in (0, V.size - 1):
            positions.append(TransitionPosition(B=float(B), valid=False, amplitude=max(amplitude, 0.0)))
            continue
        center, sigma = _fit_line(V, row, peak, amplitude, baseline)
        positions.append(TransitionPosition(B=float(B), V=center, sigma=sigma, amplitude=amplitude))

    skipped = sum(not p.valid for p in positions)
    if skipped:
        logger.warning("Transition lines without a significant peak", label=filtered.label, skipped=skipped, total=len(positions))
    logger.info("Transition tracked", label=filtered.label, valid=len(positions) - skipped)
    return positions


def synthesize_transition_scan(
    B: Sequence[float],
    V: Sequence[float],
    centers: Sequence[float],
    fwhm: float,
    amplitude: float = 1.0,
    background_slope: float = 0.0,
    background_curvature: float = 0.0,
    noise_sigma: float = 0.0,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    label: str = "",
) -> TransitionScan:
    """Charge-sensor arctan steps at the given per-line centers.

    The sensor background is a polynomial in the normalized voltage
    (V − mean)/span, identical on every line; white noise is added per pixel.
    """
    B = np.asarray(B, dtype=float)
    V = np.asarray(V, dtype=float)
    centers = np.asarray(centers, dtype=float)
    if centers.shape != B.shape:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "One transition center per field line is required")
    if not fwhm > 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Transition width must be positive")
    u = (V - V.mean()) / (V[-1] - V[0])
    background = background_slope * u + background_curvature * u**2
    step = amplitude * (np.arctan((V[None, :] - centers[:, None]) / (fwhm / 2)) / np.pi + 0.5)
    signal = step + background[None, :]
    if noise_sigma > 0:
        generator = rng if rng is not None else np.random.default_rng(seed)
        signal = signal + generator.normal(0.0, noise_sigma, signal.shape)
    return TransitionScan(B=B, V=V, signal=signal, label=label)


def magnetospec_positions(
    model: MagnetospecModel,
    B: Sequence[float],
    common_sigma: float = 50e-6,
    drift_amplitude: float = 50e-6,
    drift_period: float = 0.2,
    independent_sigma: float = 5e-6,
    offset_12: float = 0.0,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Noisy 01 and 12 transition voltages on a field grid.

    Both transitions share a common-mode term (white plus a sinusoidal drift
    with random phase) and carry small independent noise.
    """
    if model.E_ST is None:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Model needs E_ST to generate the 12 transition")
    B = np.asarray(B, dtype=float)
    generator = rng if rng is not None else np.random.default_rng(seed)
    phase = generator.uniform(0.0, 2 * np.pi)
    common = generator.normal(0.0, common_sigma, B.size) + drift_amplitude * np.sin(2 * np.pi * B / drift_period + phase)
    V01 = v01_curve(B, model.alpha, model.temperature, model.V0, model.g)
    V12 = v12_curve(B, model.alpha, model.temperature, model.E_ST, model.V0 + offset_12, model.g)
    V01 = V01 + common + generator.normal(0.0, independent_sigma, B.size)
    V12 = V12 + common + generator.normal(0.0, independent_sigma, B.size)
    return V01, V12


def subtract_correlated_noise(fit01: Fit01Result, positions_12: Sequence[TransitionPosition]) -> List[TransitionPosition]:
    """Remove the 01 fit residuals, taken as a noise record, from the 12 positions.

    Lines where either transition was skipped come back invalid.
    """
    B12 = np.array([p.B for p in positions_12], dtype=float)
    if B12.shape != fit01.B.shape or not np.allclose(B12, fit01.B, rtol=0.0, atol=GRID_TOLERANCE):
        raise ValleyMapError(
            ErrorCode.INVALID_INPUT,
            "01 and 12 transitions were measured on different field grids",
            {"lines_01": int(fit01.B.size), "lines_12": int(B12.size)},
        )
    cleaned = []
    for position, residual in zip(positions_12, fit01.residuals):
        if position.valid and position.V is not None and np.isfinite(residual):
            cleaned.append(position.model_copy(update={"V": position.V - float(residual)}))
        else:
            cleaned.append(position.model_copy(update={"V": None, "valid": False}))
    return cleaned


def _samples(width: float, V: np.ndarray) -> int:
    return max(1, int(round(width / float(np.median(np.diff(V))))))


def run_magnetospectroscopy(
    scan_01: TransitionScan,
    scan_12: TransitionScan,
    transition_width: float,
    threshold: float = DEFAULT_THRESHOLD,
    subtract_noise: bool = True,
    fixed_model: Optional[MagnetospecModel] = None,
    E_VS: Optional[float] = None,
    g: float = 2.0,
) -> MagnetospecReport:
    """Filter, track and fit both transitions, returning E_ST.

    Args:
        transition_width: Extent of a transition along V, volts; sets the median kernel.
        subtract_noise: Use the 01 residuals as a noise record for the 12 positions.
        fixed_model: Skip the 01 refit and use this lever arm and temperature.
        E_VS: Valley splitting to annotate E_ST/E_VS, µeV.
    """
    positions_01 = track_transition(filter_scan(scan_01, _samples(transition_width, scan_01.V)), threshold)
    positions_12 = track_transition(filter_scan(scan_12, _samples(transition_width, scan_12.V)), threshold)
    fit01 = fit_01_transition(positions_01, g=g) if fixed_model is None else fixed_01_result(positions_01, fixed_model)
    used_12 = subtract_correlated_noise(fit01, positions_12) if subtract_noise else positions_12
    est = fit_EST(used_12, fit01.model)

    ratio = None
    if E_VS is not None and E_VS > 0:
        ratio = est.E_ST / E_VS
        logger.info("E_ST compared with valley splitting", E_ST=est.E_ST, E_VS=E_VS, ratio=ratio)
    skipped = sum(not p.valid for p in positions_01) + sum(not p.valid for p in positions_12)
    return MagnetospecReport(
        fit01=fit01,
        est=est,
        positions_01=positions_01,
        positions_12=used_12,
        noise_subtracted=subtract_noise,
        skipped_lines=skipped,
        E_VS=E_VS,
        E_ST_over_E_VS=ratio,
    )
