"""magnetospec: E_ST from charge-transition scans and dot triangulation."""

from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import structlog

from ..config import MagnetospecConfig, RunConfig, TriangulationConfig
from ..datasets import read_scan, write_csv, write_json, write_positions, write_ratio_map, write_scan
from ..magnetospec import (
    DeviceLayout,
    cross_capacitance_ratio,
    gate_potential_maps,
    kernel_ratio,
    magnetospec_positions,
    run_magnetospectroscopy,
    synthesize_transition_scan,
    triangulate,
    triangulate_batch,
    y_displacement_calibration,
)
from ..models import ErrorCode, MagnetospecModel, TransitionScan, ValleyMapError
from .results import CommandResult, require_path, require_seed

logger = structlog.get_logger(__name__)

# Ratios measured on the device at the operating point, value and 1σ
MEASURED_SB_ST = (1.25, 0.10)
MEASURED_LB_RB = (0.78, 0.08)


def _voltage_axis(centers: np.ndarray, step: float, margin: float) -> np.ndarray:
    start = float(np.min(centers)) - margin
    count = int(np.ceil((float(np.max(centers)) + margin - start) / step)) + 1
    return start + step * np.arange(count)


def synthesize_scans(opts: MagnetospecConfig, rng: np.random.Generator) -> Tuple[TransitionScan, TransitionScan]:
    """01 and 12 scans with common-mode position noise, rendered as sensor images."""
    model = MagnetospecModel(
        alpha=opts.alpha or 0.1, temperature=opts.temperature or 0.1, V0=opts.V0, E_ST=opts.E_ST
    )
    B = np.asarray(opts.B.values())
    V01, V12 = magnetospec_positions(
        model,
        B,
        common_sigma=opts.common_sigma,
        drift_amplitude=opts.drift_amplitude,
        drift_period=opts.drift_period,
        independent_sigma=opts.independent_sigma,
        rng=rng,
    )
    scans = []
    for label, centers in (("01", V01), ("12", V12)):
        scans.append(
            synthesize_transition_scan(
                B,
                _voltage_axis(centers, opts.V_step, opts.V_margin),
                centers,
                opts.fwhm_V,
                noise_sigma=opts.sensor_noise,
                rng=rng,
                label=label,
            )
        )
    return scans[0], scans[1]


def _triangulation(
    opts: TriangulationConfig, rng: np.random.Generator, output_dir: Path, outputs: List[Path]
) -> Dict[str, Any]:
    """Batch triangulation of planted dot positions and the y-displacement calibration."""
    layout = DeviceLayout()
    grid = np.asarray(opts.grid.values())
    responses = gate_potential_maps(layout, grid, grid, opts.delta_V)
    map_sb_st = cross_capacitance_ratio(grid, grid, responses, ("SB", "ST"))
    map_lb_rb = cross_capacitance_ratio(grid, grid, responses, ("LB", "RB"))
    outputs.append(write_ratio_map(map_sb_st, output_dir / "ratio_SB_ST.csv"))
    outputs.append(write_ratio_map(map_lb_rb, output_dir / "ratio_LB_RB.csv"))

    voltage = rng.uniform(-opts.voltage_span, opts.voltage_span, opts.positions)
    planted_y = opts.y0 + opts.slope_nm_per_V * voltage
    planted_x = opts.x0 + rng.normal(0.0, 3.0, opts.positions)
    measurements = []
    for x, y in zip(planted_x, planted_y):
        ratio_a = kernel_ratio(layout, ("SB", "ST"), x, y) + rng.normal(0.0, opts.ratio_noise)
        ratio_b = kernel_ratio(layout, ("LB", "RB"), x, y) + rng.normal(0.0, opts.ratio_noise)
        measurements.append(((ratio_a, opts.sigma_SB_ST), (ratio_b, opts.sigma_LB_RB)))
    results = triangulate_batch(map_sb_st, map_lb_rb, measurements)

    rows = [
        (k, dv, px, py, r.x, r.y, r.sigma_x, r.sigma_y, r.consistent)
        for k, (dv, px, py, r) in enumerate(zip(voltage, planted_x, planted_y, results))
    ]
    outputs.append(
        write_csv(
            output_dir / "triangulation.csv",
            ["index", "V_ST_minus_V_SB_V", "x_true_nm", "y_true_nm", "x_nm", "y_nm", "sigma_x_nm", "sigma_y_nm", "consistent"],
            rows,
        )
    )
    located = [(dv, r.y) for dv, r in zip(voltage, results) if r.consistent]
    calibration = y_displacement_calibration(located) if len(located) >= 2 else None
    reference = triangulate(
        map_sb_st.model_copy(update={"measured": MEASURED_SB_ST[0], "measured_sigma": MEASURED_SB_ST[1]}),
        map_lb_rb.model_copy(update={"measured": MEASURED_LB_RB[0], "measured_sigma": MEASURED_LB_RB[1]}),
    )
    return {
        "positions": len(results),
        "consistent": len(located),
        "calibration": calibration.model_dump() if calibration is not None else None,
        "reference_position": reference.model_dump(),
    }


def magnetospec(config: RunConfig, output_dir: Path) -> CommandResult:
    """Track, fit and report E_ST; scans are synthesized when no files are given."""
    opts = config.magnetospec
    fixed: Optional[MagnetospecModel] = None
    if not opts.refit_01:
        if opts.alpha is None or opts.temperature is None:
            raise ValleyMapError(ErrorCode.INVALID_INPUT, "Lever arm and temperature are required when the 01 refit is disabled")
        fixed = MagnetospecModel(alpha=opts.alpha, temperature=opts.temperature, V0=opts.V0)
    if (opts.scan_01_path is None) != (opts.scan_12_path is None):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Give both transition scans or neither")

    outputs: List[Path] = []
    inputs: List[Path] = []
    rng: Optional[np.random.Generator] = None
    truth: Optional[float] = None
    if opts.scan_01_path is not None and opts.scan_12_path is not None:
        inputs = [require_path(opts.scan_01_path, "01 scan"), require_path(opts.scan_12_path, "12 scan")]
        scan_01, scan_12 = read_scan(inputs[0], "01"), read_scan(inputs[1], "12")
    else:
        rng = np.random.default_rng(require_seed(config, "synthesize transition scans"))
        scan_01, scan_12 = synthesize_scans(opts, rng)
        truth = opts.E_ST
        outputs += [write_scan(scan_01, output_dir / "scan_01.csv"), write_scan(scan_12, output_dir / "scan_12.csv")]

    result = run_magnetospectroscopy(
        scan_01,
        scan_12,
        opts.transition_width_V,
        threshold=opts.threshold,
        subtract_noise=opts.subtract_noise,
        fixed_model=fixed,
        E_VS=opts.E_VS,
    )
    outputs.append(write_positions(result.positions_01, output_dir / "positions_01.csv"))
    outputs.append(write_positions(result.positions_12, output_dir / "positions_12.csv"))

    fit01 = result.fit01
    report: Dict[str, Any] = {
        "alpha": fit01.model.alpha,
        "alpha_sigma": fit01.report.sigma("alpha"),
        "temperature": fit01.model.temperature,
        "temperature_sigma": fit01.report.sigma("temperature"),
        "V0_01": fit01.model.V0,
        "identifiable": fit01.identifiable,
        "E_ST": result.est.E_ST,
        "E_ST_sigma": result.est.E_ST_sigma,
        "V0_12": result.est.V0,
        "kink_in_range": result.est.kink_in_range,
        "noise_subtracted": result.noise_subtracted,
        "skipped_lines": result.skipped_lines,
        "E_VS": result.E_VS,
        "E_ST_over_E_VS": result.E_ST_over_E_VS,
    }
    if truth is not None:
        report["E_ST_true"] = truth
        report["E_ST_error"] = result.est.E_ST - truth
    if opts.triangulation.enabled:
        if rng is None:
            rng = np.random.default_rng(require_seed(config, "synthesize the triangulation survey"))
        report["triangulation"] = _triangulation(opts.triangulation, rng, output_dir, outputs)

    outputs.append(write_json(output_dir / "magnetospec.json", report))
    return CommandResult(
        outputs=outputs,
        inputs=inputs,
        summary={"E_ST": result.est.E_ST, "E_ST_sigma": result.est.E_ST_sigma, "kink_in_range": result.est.kink_in_range},
    )
