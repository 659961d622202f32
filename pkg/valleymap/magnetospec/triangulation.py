"""Dot triangulation from gate cross-capacitance ratios.

The device electrostatics are modelled by one Gaussian lever-arm kernel per
gate: U(x, y) = Σ_g V_g·k_g(x, y). Ratio maps are then formed from finite
differences of U around the operating point exactly as for a full device
simulation.
"""

import math
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, Field, field_validator
from scipy import stats

from ..models import CalibrationFit, CapacitanceRatioMap, ErrorCode, TriangulationResult, ValleyMapError

logger = structlog.get_logger(__name__)

DEFAULT_DELTA_V = 5e-3
DENOMINATOR_FLOOR = 1e-12


class GateKernel(BaseModel):
    """Gaussian lever-arm kernel of one gate."""

    x: float = Field(..., description="Kernel center, nm")
    y: float = Field(..., description="Kernel center, nm")
    width: float = Field(100.0, description="Kernel standard deviation, nm")
    strength: float = Field(1.0, description="Peak potential per volt")

    model_config = {"frozen": True}

    @field_validator("width", "strength")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("kernel width and strength must be positive")
        return v

    def response(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Kernel on the (x, y) grid, indexed [ix, iy]."""
        xx, yy = np.meshgrid(x, y, indexing="ij")
        return self.strength * np.exp(-((xx - self.x) ** 2 + (yy - self.y) ** 2) / (2 * self.width**2))


def _default_gates() -> Dict[str, GateKernel]:
    return {
        "ST": GateKernel(x=0.0, y=100.0),
        "SB": GateKernel(x=0.0, y=-100.0),
        "LB": GateKernel(x=-70.0, y=0.0),
        "RB": GateKernel(x=70.0, y=0.0),
        "P": GateKernel(x=0.0, y=0.0, width=90.0),
    }


class DeviceLayout(BaseModel):
    """Screening gates ST/SB, barriers LB/RB and plunger P with their operating voltages."""

    gates: Dict[str, GateKernel] = Field(default_factory=_default_gates)
    operating_point: Dict[str, float] = Field(
        default_factory=lambda: {"ST": 0.4, "SB": 0.4, "LB": 0.6, "RB": 0.6, "P": 0.9},
        description="Gate voltages at the operating point, V",
    )

    model_config = {"frozen": True}

    def potential(self, x: np.ndarray, y: np.ndarray, voltages: Dict[str, float]) -> np.ndarray:
        total = np.zeros((np.size(x), np.size(y)))
        for name, kernel in self.gates.items():
            total += voltages.get(name, 0.0) * kernel.response(x, y)
        return total


def kernel_ratio(layout: DeviceLayout, gates: Tuple[str, str], x: float, y: float) -> float:
    """Exact lever-arm ratio of two gates at a point, k_g1(x, y)/k_g2(x, y)."""
    point_x, point_y = np.array([x]), np.array([y])
    first, second = (layout.gates[name].response(point_x, point_y)[0, 0] for name in gates)
    return float(first / second)


class GateResponse(NamedTuple):
    """Potential maps with one gate raised and lowered around the operating point."""

    plus: np.ndarray
    minus: np.ndarray


def gate_potential_maps(
    layout: DeviceLayout,
    x: Sequence[float],
    y: Sequence[float],
    delta_V: float = DEFAULT_DELTA_V,
    gates: Optional[Sequence[str]] = None,
) -> Dict[str, GateResponse]:
    """U(V_op ± ΔV_g) for every gate g."""
    if not delta_V > 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Voltage step must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    names = list(layout.gates) if gates is None else list(gates)
    unknown = [name for name in names if name not in layout.gates]
    if unknown:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Unknown gates", {"gates": unknown})
    maps = {}
    for name in names:
        raised = dict(layout.operating_point, **{name: layout.operating_point.get(name, 0.0) + delta_V})
        lowered = dict(layout.operating_point, **{name: layout.operating_point.get(name, 0.0) - delta_V})
        maps[name] = GateResponse(plus=layout.potential(x, y, raised), minus=layout.potential(x, y, lowered))
    return maps


def cross_capacitance_ratio(
    x: Sequence[float],
    y: Sequence[float],
    responses: Dict[str, GateResponse],
    gates: Tuple[str, str],
    measured: Optional[float] = None,
    measured_sigma: Optional[float] = None,
) -> CapacitanceRatioMap:
    """Ratio of the potential changes of two gates per grid cell.

    Cells with a vanishing denominator, or a non-positive ratio, are NaN.
    """
    first, second = gates
    missing = [g for g in gates if g not in responses]
    if missing:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Missing potential maps", {"gates": missing})
    numerator = responses[first].plus - responses[first].minus
    denominator = responses[second].plus - responses[second].minus
    if numerator.shape != denominator.shape or numerator.shape != (len(x), len(y)):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Potential maps are not on a common grid")
    floor = DENOMINATOR_FLOOR * float(np.max(np.abs(denominator)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(np.abs(denominator) > floor, numerator / denominator, np.nan)
    ratio = np.where(ratio > 0, ratio, np.nan)
    masked = int(np.isnan(ratio).sum())
    if masked:
        logger.warning("Ratio cells masked", gates=list(gates), masked=masked)
    return CapacitanceRatioMap(x=x, y=y, ratio=ratio, gates=gates, measured=measured, measured_sigma=measured_sigma)


def measured_ratio(alpha_1: float, sigma_1: float, alpha_2: float, sigma_2: float) -> Tuple[float, float]:
    """Ratio of two measured gate lever arms on the dot and its propagated 1σ."""
    if not (alpha_1 > 0 and alpha_2 > 0):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Lever arms must be positive")
    ratio = alpha_1 / alpha_2
    return ratio, ratio * math.hypot(sigma_1 / alpha_1, sigma_2 / alpha_2)


def band(ratio_map: CapacitanceRatioMap) -> np.ndarray:
    """Cells whose ratio lies within 1σ of the measured value."""
    if ratio_map.measured is None or ratio_map.measured_sigma is None:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Ratio map carries no measured value", {"gates": list(ratio_map.gates)})
    with np.errstate(invalid="ignore"):
        return np.abs(ratio_map.ratio - ratio_map.measured) <= ratio_map.measured_sigma


def triangulate(map_a: CapacitanceRatioMap, map_b: CapacitanceRatioMap) -> TriangulationResult:
    """Centroid and per-axis spread of the cells inside both measured bands."""
    if not (np.array_equal(map_a.x, map_b.x) and np.array_equal(map_a.y, map_b.y)):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Ratio maps are not on a common grid")
    inside = band(map_a) & band(map_b)
    n_cells = int(inside.sum())
    if n_cells == 0:
        logger.warning(
            "Measured ratios do not intersect",
            ratio_a=map_a.measured,
            ratio_b=map_b.measured,
        )
        return TriangulationResult(consistent=False)
    xx, yy = np.meshgrid(map_a.x, map_a.y, indexing="ij")
    xs, ys = xx[inside], yy[inside]
    return TriangulationResult(
        x=float(xs.mean()),
        y=float(ys.mean()),
        sigma_x=float(xs.std()),
        sigma_y=float(ys.std()),
        n_cells=n_cells,
        consistent=True,
    )


def triangulate_batch(
    map_a: CapacitanceRatioMap,
    map_b: CapacitanceRatioMap,
    measurements: Sequence[Tuple[Tuple[float, float], Tuple[float, float]]],
) -> List[TriangulationResult]:
    """Triangulate every ((ratio_a, σ_a), (ratio_b, σ_b)) pair on the same pair of maps."""
    results = []
    for (ratio_a, sigma_a), (ratio_b, sigma_b) in measurements:
        results.append(
            triangulate(
                map_a.model_copy(update={"measured": ratio_a, "measured_sigma": sigma_a}),
                map_b.model_copy(update={"measured": ratio_b, "measured_sigma": sigma_b}),
            )
        )
    consistent = sum(result.consistent for result in results)
    if consistent == 0:
        raise ValleyMapError(ErrorCode.NO_RESULT, "No measurement yields a dot position", {"measurements": len(results)})
    logger.info("Batch triangulated", positions=len(results), consistent=consistent)
    return results


def y_displacement_calibration(points: Sequence[Tuple[float, float]]) -> CalibrationFit:
    """Linear fit of dot y position (nm) against the screening-gate voltage difference (V)."""
    data = np.asarray(points, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Calibration points must be (voltage difference, y) pairs")
    if np.unique(data[:, 0]).size < 2:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "At least two distinct voltage differences are required")
    fit = stats.linregress(data[:, 0], data[:, 1])
    stderr = float(fit.stderr) if data.shape[0] > 2 else 0.0
    logger.info("y displacement calibrated", slope_nm_per_V=float(fit.slope), points=int(data.shape[0]))
    return CalibrationFit(slope=float(fit.slope), slope_stderr=stderr, intercept=float(fit.intercept), n_points=int(data.shape[0]))
