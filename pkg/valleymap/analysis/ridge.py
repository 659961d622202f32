"""Anticrossing ridge extraction from P_S(d, B) maps."""

from typing import List, NamedTuple, Optional, Tuple

import numpy as np
import structlog
from scipy import ndimage

from ..landscape import sample_at
from ..models import ErrorCode, ProbabilityMap, RidgeEntry, RidgeTrace, ValleyLandscape, ValleyMapError
from ..physics import anticrossing_center, valley_splitting_from_field

logger = structlog.get_logger(__name__)

MAD_TO_SIGMA = 1.4826
REFINE_PASSES = 2


class RidgeError(NamedTuple):
    """Deviation of an extracted ridge from the generating landscape."""

    rms_B: float
    deviations: np.ndarray
    n_valid: int


def ridge_contrast(P: np.ndarray, dB: float, background_sigma: float, smoothing: float) -> Tuple[np.ndarray, np.ndarray]:
    """High-passed map and its locally averaged square; P is indexed [d, B]."""
    centered = P - P.mean(axis=0, keepdims=True)
    background = ndimage.gaussian_filter1d(centered, sigma=background_sigma / dB, axis=1, mode="nearest")
    highpass = centered - background
    energy = ndimage.gaussian_filter(highpass**2, sigma=(1.0, smoothing / dB), mode="nearest")
    return highpass, energy


def _column_noise(highpass: np.ndarray) -> np.ndarray:
    deviation = np.abs(highpass - np.median(highpass, axis=1, keepdims=True))
    return MAD_TO_SIGMA * np.median(deviation, axis=1)


def _refine(B: np.ndarray, energy_row: np.ndarray, peak: int, halfwidth: float) -> float:
    """Energy centroid around the peak, recentred REFINE_PASSES times."""
    center = float(B[peak])
    for _ in range(REFINE_PASSES):
        window = np.abs(B - center) <= halfwidth
        weights = energy_row[window] - energy_row[window].min()
        if not weights.sum() > 0:
            break
        center = float(np.sum(weights * B[window]) / weights.sum())
    return center


def extract_ridge(
    scan: ProbabilityMap,
    band_halfwidth: float = 0.03,
    threshold: float = 3.0,
    background_sigma: float = 0.04,
    smoothing: float = 0.006,
    refine_halfwidth: float = 0.02,
    g: float = 2.0,
) -> RidgeTrace:
    """Track the anticrossing ridge along d, starting from the strongest column.

    Each neighbouring column is searched within ±band_halfwidth of the last
    accepted field; missed columns leave that field unchanged.
    A column is invalid when its peak sits on the B-axis edge or its contrast
    is below ``threshold`` times the column noise (MAD of the high-passed signal).
    """
    if scan.P.size == 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Map is empty")
    if scan.axis1_name != "d":
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Ridge extraction needs a P_S(d, B) map", {"axis1": scan.axis1_name})
    if scan.axis2.size < 5:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "At least 5 field points are required")

    d, B, P = scan.axis1, scan.axis2, scan.P
    dB = float(np.median(np.diff(B)))
    highpass, energy = ridge_contrast(P, dB, background_sigma, smoothing)
    contrast = np.sqrt(energy)
    noise = _column_noise(highpass)
    y_offset = float(scan.attributes.get("y_offset", 0.0))

    def accept(i: int, j: int) -> bool:
        return 0 < j < B.size - 1 and contrast[i, j] >= threshold * noise[i]

    seed_i, seed_j = np.unravel_index(int(np.argmax(contrast)), contrast.shape)
    fields: List[Optional[float]] = [None] * d.size
    if accept(seed_i, seed_j):
        seed_field = _refine(B, energy[seed_i], seed_j, refine_halfwidth)
        fields[seed_i] = seed_field
        for direction in (1, -1):
            anchor = seed_field
            i = seed_i + direction
            while 0 <= i < d.size:
                window = np.flatnonzero(np.abs(B - anchor) <= band_halfwidth)
                j = int(window[np.argmax(contrast[i, window])]) if window.size else -1
                if window.size and accept(i, j):
                    anchor = _refine(B, energy[i], j, refine_halfwidth)
                    fields[i] = anchor
                i += direction
    else:
        logger.warning("No significant ridge seed", contrast=float(contrast[seed_i, seed_j]), noise=float(noise[seed_i]))

    entries = []
    for i, field in enumerate(fields):
        if field is None:
            entries.append(RidgeEntry(d=float(d[i]), valid=False, contrast=float(contrast[i].max())))
        else:
            entries.append(
                RidgeEntry(
                    d=float(d[i]),
                    B=field,
                    E_VS=float(valley_splitting_from_field(field, g)),
                    valid=True,
                    contrast=float(np.interp(field, B, contrast[i])),
                )
            )
    n_valid = sum(entry.valid for entry in entries)
    if n_valid < len(entries):
        logger.warning("Ridge has invalid columns", invalid=len(entries) - n_valid, total=len(entries))
    logger.info("Ridge extracted", valid=n_valid, total=len(entries), y_offset=y_offset)
    return RidgeTrace(entries=entries, y_offset=y_offset, g=g)


def ridge_error(trace: RidgeTrace, landscape: ValleyLandscape, y_offset: Optional[float] = None) -> RidgeError:
    """RMS field deviation of the valid ridge entries from the landscape's anticrossing fields."""
    valid = trace.valid_entries
    if not valid:
        raise ValleyMapError(ErrorCode.NO_RESULT, "Ridge has no valid entries")
    y = trace.y_offset if y_offset is None else y_offset
    d = np.array([entry.d for entry in valid])
    truth = anticrossing_center(np.asarray(sample_at(landscape, d, np.full_like(d, y)).E_VS), trace.g)
    deviations = np.array([entry.B for entry in valid]) - truth
    return RidgeError(rms_B=float(np.sqrt(np.mean(deviations**2))), deviations=deviations, n_valid=len(valid))
