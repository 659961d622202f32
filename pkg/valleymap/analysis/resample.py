"""Equidistant resampling of ridge traces and assembly of the 2D E_VS map."""

from typing import Dict, List, Optional, Sequence, Tuple, Type

import numpy as np
import structlog
from scipy.interpolate import Akima1DInterpolator, CubicSpline, PchipInterpolator

from ..models import ErrorCode, Map2D, ResampledTrace, RidgeTrace, ValleyMapError

logger = structlog.get_logger(__name__)

MIN_SEGMENT_POINTS = 4
SPLINES: Dict[str, Type] = {
    "cubic": CubicSpline,
    "pchip": PchipInterpolator,
    "akima": Akima1DInterpolator,
}


def valid_segments(trace: RidgeTrace) -> List[List[Tuple[float, float]]]:
    """Runs of consecutive valid entries as (d, E_VS) lists."""
    segments: List[List[Tuple[float, float]]] = []
    current: List[Tuple[float, float]] = []
    for entry in sorted(trace.entries, key=lambda e: e.d):
        if entry.valid and entry.E_VS is not None:
            current.append((entry.d, entry.E_VS))
        elif current:
            segments.append(current)
            current = []
    if current:
        segments.append(current)
    return segments


def resample_spline(trace: RidgeTrace, pitch: float = 1.4, method: str = "pchip") -> ResampledTrace:
    """Sample a spline through each valid segment every ``pitch`` nm.

    ``pchip`` keeps monotone runs monotone; ``cubic`` (not-a-knot) and ``akima``
    are smoother on oscillating traces but may overshoot between nodes.

    The grid starts at the first entry's d. Grid points outside every
    resampled segment are NaN; segments with fewer than four points are
    listed in ``unsampled`` instead.
    """
    if not pitch > 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Resampling pitch must be positive")
    if method not in SPLINES:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, f"Unknown spline method '{method}'", {"methods": sorted(SPLINES)})
    if not trace.entries:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Ridge trace has no entries")

    d_all = sorted(entry.d for entry in trace.entries)
    grid = d_all[0] + pitch * np.arange(int(np.floor((d_all[-1] - d_all[0]) / pitch + 1e-9)) + 1)
    values = np.full(grid.size, np.nan)
    unsampled: List[Tuple[float, float]] = []
    tolerance = 1e-9 * pitch

    for segment in valid_segments(trace):
        if len(segment) < MIN_SEGMENT_POINTS:
            unsampled.extend(segment)
            continue
        x, y = (np.array(column) for column in zip(*segment))
        spline = SPLINES[method](x, y)
        inside = (grid >= x[0] - tolerance) & (grid <= x[-1] + tolerance)
        values[inside] = spline(np.clip(grid[inside], x[0], x[-1]))

    if unsampled:
        logger.warning("Short ridge segments left unsampled", points=len(unsampled), y_offset=trace.y_offset)
    return ResampledTrace(
        y_offset=trace.y_offset,
        d=grid,
        E_VS=values,
        pitch=pitch,
        method=method,
        unsampled=unsampled,
    )


def _interpolate_rows(y_nodes: np.ndarray, rows: np.ndarray, y_grid: np.ndarray) -> np.ndarray:
    """Linear interpolation along axis 1 with NaN propagation; rows is [id, iy_node]."""
    k = np.clip(np.searchsorted(y_nodes, y_grid, side="right") - 1, 0, y_nodes.size - 2)
    weight = (y_grid - y_nodes[k]) / (y_nodes[k + 1] - y_nodes[k])
    lower, upper = rows[:, k], rows[:, k + 1]
    with np.errstate(invalid="ignore"):
        blended = (1 - weight) * lower + weight * upper
    blended = np.where(weight == 0, lower, blended)
    return np.where(weight == 1, upper, blended)


def assemble_2d_map(
    traces: Sequence[ResampledTrace],
    y_pitch: float = 1.4,
    y_grid: Optional[Sequence[float]] = None,
) -> Map2D:
    """Interpolate resampled traces linearly across y onto a common (d, y) grid."""
    if not traces:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "No traces to assemble")
    pitch = traces[0].pitch
    if any(abs(trace.pitch - pitch) > 1e-12 for trace in traces):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Traces were resampled with different pitches")

    d_min = min(float(trace.d[0]) for trace in traces)
    d_max = max(float(trace.d[-1]) for trace in traces)
    d = d_min + pitch * np.arange(int(round((d_max - d_min) / pitch)) + 1)
    ordered = sorted(traces, key=lambda trace: trace.y_offset)
    y_nodes = np.array([trace.y_offset for trace in ordered])
    rows = np.full((d.size, len(ordered)), np.nan)
    for column, trace in enumerate(ordered):
        index = np.rint((trace.d - d_min) / pitch).astype(int)
        rows[index, column] = trace.E_VS

    if len(ordered) == 1:
        logger.warning("Single trace, returning a 1D map", y_offset=float(y_nodes[0]))
        return Map2D(d=d, y=y_nodes, E_VS=rows, is_1d=True)
    if np.any(np.diff(y_nodes) <= 0):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Traces must have distinct y offsets", {"y": y_nodes.tolist()})

    if y_grid is None:
        n = int(np.floor((y_nodes[-1] - y_nodes[0]) / y_pitch + 1e-9)) + 1
        ys = y_nodes[0] + y_pitch * np.arange(n)
        if y_nodes[-1] - ys[-1] > 1e-9:
            ys = np.append(ys, y_nodes[-1])
    else:
        ys = np.asarray(y_grid, dtype=float)
        if np.any(ys < y_nodes[0] - 1e-9) or np.any(ys > y_nodes[-1] + 1e-9):
            raise ValleyMapError(ErrorCode.INVALID_INPUT, "Requested y grid extends beyond the traces")

    E_VS = _interpolate_rows(y_nodes, rows, np.clip(ys, y_nodes[0], y_nodes[-1]))
    logger.info("2D map assembled", n_d=d.size, n_y=ys.size, missing=int(np.isnan(E_VS).sum()))
    return Map2D(d=d, y=ys, E_VS=E_VS, is_1d=False)
