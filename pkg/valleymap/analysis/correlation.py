"""Binned Pearson correlation of E_VS samples versus separation, and its Gaussian fit."""

import warnings
from typing import List, Sequence, Tuple

import numpy as np
import structlog
from scipy import stats
from scipy.spatial.distance import pdist

from ..fitting import least_squares
from ..landscape import gaussian_correlation
from ..models import CorrelationCurve, CorrelationFit, CorrelationModel, ErrorCode, FitProblem, ValleyMapError
from ..physics import orbital_energy

logger = structlog.get_logger(__name__)

MODES = ("geometric", "along_d", "along_y")
MIN_PAIRS = 10
A_DOT_BOUNDS = (0.1, 1000.0)
SAME_COORDINATE = 1e-9


def _pairs(points: np.ndarray, mode: str) -> Tuple[np.ndarray, np.ndarray]:
    """Pair distances and a mask of pairs admitted by the distance mode, in pdist order."""
    geometric = pdist(points[:, :2])
    if mode == "geometric":
        return geometric, np.ones(geometric.size, dtype=bool)
    dx = pdist(points[:, :1])
    dy = pdist(points[:, 1:2])
    if mode == "along_d":
        return dx, dy < SAME_COORDINATE
    return dy, dx < SAME_COORDINATE


def binned_correlation(
    points: Sequence[Sequence[float]],
    bin_width: float = 1.4,
    mode: str = "geometric",
    min_pairs: int = MIN_PAIRS,
) -> CorrelationCurve:
    """Pearson coefficient of E_VS over point pairs, binned by separation.

    Args:
        points: Rows of (x, y, E_VS); rows with NaN E_VS are ignored.
        bin_width: Bin width, nm. A pair at distance D falls in bin round(D/bin_width).
        mode: ``geometric`` uses all pairs at Euclidean distance, ``along_d`` only
            pairs on the same trace (same y) and ``along_y`` only pairs at the same d.
        min_pairs: Bins holding fewer pairs are dropped.

    Returns:
        Curve with pair-averaged distances; bins with undefined correlation are dropped.
    """
    if mode not in MODES:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, f"Unknown distance mode '{mode}'", {"modes": list(MODES)})
    if not bin_width > 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Bin width must be positive")
    data = np.asarray(points, dtype=float)
    if data.ndim != 2 or data.shape[1] != 3:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Points must be rows of (x, y, E_VS)")
    data = data[np.isfinite(data[:, 2])]
    if data.shape[0] < 2:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "At least two valid points are required")

    distance, admitted = _pairs(data, mode)
    first, second = np.triu_indices(data.shape[0], k=1)
    distance, first, second = distance[admitted], first[admitted], second[admitted]
    bins = np.rint(distance / bin_width).astype(int)
    order = np.argsort(bins, kind="stable")
    distance, first, second, bins = distance[order], first[order], second[order], bins[order]
    values = data[:, 2]

    D: List[float] = []
    corr: List[float] = []
    counts: List[int] = []
    boundaries = np.flatnonzero(np.diff(bins)) + 1
    start = 0
    for stop in list(boundaries) + [bins.size]:
        if stop - start < min_pairs:
            start = stop
            continue
        a, b = values[first[start:stop]], values[second[start:stop]]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            coefficient = float(stats.pearsonr(a, b)[0])
        if np.isfinite(coefficient):
            D.append(float(distance[start:stop].mean()))
            corr.append(coefficient)
            counts.append(stop - start)
        start = stop

    logger.info("Binned correlation computed", points=int(data.shape[0]), pairs=int(distance.size), bins=len(D), mode=mode)
    return CorrelationCurve(D=D, corr=corr, pairs=counts, mode=mode, bin_width=bin_width)


def fit_correlation_model(curve: CorrelationCurve, D_max: float = 28.0) -> CorrelationFit:
    """Least-squares fit of exp(-D²/((4-π)·a_dot²)) to the bins below D_max.

    Non-decaying data, or an estimate pinned at the upper a_dot bound, yield
    ``converged=False``.
    """
    use = curve.D < D_max
    D, corr = curve.D[use], curve.corr[use]
    if D.size < 3:
        raise ValleyMapError(
            ErrorCode.INVALID_INPUT,
            "At least three correlation bins below D_max are required",
            {"bins": int(D.size), "D_max": D_max},
        )

    below = np.flatnonzero(corr < np.exp(-1))
    a0 = float(D[below[0]] / np.sqrt(4 - np.pi)) if below.size else D_max
    a0 = float(np.clip(a0, *A_DOT_BOUNDS))

    def residual(params: np.ndarray) -> np.ndarray:
        return gaussian_correlation(D, CorrelationModel(a_dot=params[0])) - corr

    report = least_squares(
        FitProblem(
            residual=residual,
            initial=[a0],
            lower=[A_DOT_BOUNDS[0]],
            upper=[A_DOT_BOUNDS[1]],
            names=["a_dot"],
            x_scale=[10.0],
        )
    )
    a_dot = report.value("a_dot")
    decays = bool(corr.min() < 0.5) and a_dot < 0.99 * A_DOT_BOUNDS[1]
    converged = report.converged and decays
    if not decays:
        logger.warning("Correlation does not decay within D_max", a_dot=a_dot, min_corr=float(corr.min()))
    E_orb_meV = orbital_energy(a_dot) * 1e3
    logger.info("Correlation model fitted", a_dot=a_dot, E_orb_meV=E_orb_meV, converged=converged)
    return CorrelationFit(model=CorrelationModel(a_dot=a_dot), report=report, E_orb_meV=E_orb_meV, converged=converged)
