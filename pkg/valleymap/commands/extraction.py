"""extract and fit-anticrossing."""

from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import structlog

from ..analysis import (
    assemble_2d_map,
    binned_correlation,
    compare_to_reference,
    extract_frequencies,
    extract_ridge,
    fit_anticrossing_spectrum,
    fit_correlation_model,
    fit_folded_gaussian,
    fit_rician,
    resample_spline,
    ridge_error,
    summarize_samples,
)
from ..config import RunConfig
from ..datasets import (
    read_frequency_table,
    read_landscape,
    read_map,
    write_correlation,
    write_frequency_table,
    write_json,
    write_map_2d,
    write_resampled,
    write_ridge,
)
from ..models import DistributionFit, ErrorCode, ResampledTrace, SpectrumFit, ValleyLandscape, ValleyMapError
from .results import CommandResult, require_path

logger = structlog.get_logger(__name__)

FREQUENCY_AXES = ("tau", "tau_w")


def _spectrum_report(fit: SpectrumFit) -> Dict[str, Any]:
    return {
        "params": fit.params.model_dump(),
        "uncertainties": fit.report.uncertainties,
        "cost": fit.report.cost,
        "converged": fit.report.converged,
        "underdetermined": fit.underdetermined,
        "notes": fit.notes,
    }


def _distribution_report(fit: DistributionFit, survey: str) -> Dict[str, Any]:
    return {
        "params": fit.params.model_dump(),
        "uncertainties": fit.report.uncertainties,
        "log_likelihood": fit.report.log_likelihood,
        "converged": fit.report.converged,
        "z_vs_reference": compare_to_reference(fit, survey),
    }


def _statistics(traces: List[ResampledTrace], config: RunConfig, output_dir: Path, outputs: List[Path]) -> Dict[str, Any]:
    """Correlation and distribution fits over all resampled E_VS samples."""
    opts = config.extract
    points = np.array(
        [(d, trace.y_offset, e) for trace in traces for d, e in zip(trace.d, trace.E_VS) if np.isfinite(e)]
    )
    if not points.size:
        raise ValleyMapError(
            ErrorCode.NO_RESULT,
            "No resampled E_VS samples to fit",
            {"traces": len(traces), "unsampled": sum(len(trace.unsampled) for trace in traces)},
        )
    samples = points[:, 2]
    report: Dict[str, Any] = {}
    curve = binned_correlation(points, opts.bin_width, opts.correlation_mode, opts.min_pairs)
    outputs.append(write_correlation(curve, output_dir / "correlation.csv"))
    correlation = fit_correlation_model(curve, opts.D_max)
    report["correlation"] = {
        "a_dot": correlation.model.a_dot,
        "a_dot_sigma": correlation.report.sigma("a_dot"),
        "E_orb_meV": correlation.E_orb_meV,
        "converged": correlation.converged,
        "mode": curve.mode,
    }
    positive = samples[samples > 0]
    report["rician"] = _distribution_report(fit_rician(positive), opts.reference_survey)
    report["folded_gaussian"] = _distribution_report(fit_folded_gaussian(samples[samples >= 0]), opts.reference_survey)
    summary = summarize_samples(samples)
    report["samples"] = {
        "count": summary.count,
        "mean": summary.mean,
        "median": summary.median,
        "minimum": summary.minimum,
        "fraction_below_floor": summary.fraction_below_floor,
    }
    return report


def extract(config: RunConfig, output_dir: Path) -> CommandResult:
    """Ridge → resample → 2D map → correlation → distributions, plus ν(B) for τ maps."""
    if not config.map_paths:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "No maps given to extract from")
    opts = config.extract
    inputs = [require_path(path, "map file") for path in config.map_paths]
    truth: Optional[ValleyLandscape] = None
    if config.landscape_path:
        landscape_path = require_path(config.landscape_path, "landscape file")
        inputs.append(landscape_path)
        truth = read_landscape(landscape_path)

    outputs: List[Path] = []
    report: Dict[str, Any] = {"traces": [], "spectra": []}
    resampled: List[ResampledTrace] = []
    for k, path in enumerate(inputs[: len(config.map_paths)]):
        scan = read_map(path)
        if scan.axis1_name in FREQUENCY_AXES:
            table = extract_frequencies(scan)
            outputs.append(write_frequency_table(table, output_dir / f"nu_{k:02d}.csv"))
            fit = fit_anticrossing_spectrum(table.B, table.nu, table.nu_sigma, max_iterations=config.fit.max_iterations)
            report["spectra"].append({"source": path.name, **_spectrum_report(fit)})
            continue

        trace = extract_ridge(
            scan,
            band_halfwidth=opts.band_halfwidth,
            threshold=opts.threshold,
            background_sigma=opts.background_sigma,
            smoothing=opts.smoothing,
            refine_halfwidth=opts.refine_halfwidth,
            g=opts.g,
        )
        outputs.append(write_ridge(trace, output_dir / f"ridge_{k:02d}.csv"))
        entry: Dict[str, Any] = {
            "source": path.name,
            "y_offset": trace.y_offset,
            "valid": len(trace.valid_entries),
            "total": len(trace.entries),
        }
        if trace.valid_entries:
            sampled = resample_spline(trace, opts.resample_pitch, opts.spline)
            outputs.append(write_resampled(sampled, output_dir / f"resampled_{k:02d}.csv"))
            resampled.append(sampled)
            if truth is not None:
                error = ridge_error(trace, truth)
                entry["rms_B_error_T"] = error.rms_B
        report["traces"].append(entry)

    if report["traces"]:
        if not resampled:
            raise ValleyMapError(ErrorCode.NO_RESULT, "No trace has a valid ridge entry", {"traces": len(report["traces"])})
        grid = assemble_2d_map(resampled, opts.y_pitch)
        if not grid.is_1d:
            outputs.append(write_map_2d(grid, output_dir / "map_2d.csv"))
        report["is_1d"] = grid.is_1d
        report.update(_statistics(resampled, config, output_dir, outputs))

    outputs.append(write_json(output_dir / "report.json", report))
    summary = {
        "traces": len(report["traces"]),
        "spectra": len(report["spectra"]),
        "valid_entries": sum(t["valid"] for t in report["traces"]),
    }
    if "correlation" in report:
        summary["a_dot"] = report["correlation"]["a_dot"]
    return CommandResult(outputs=outputs, inputs=inputs, summary=summary)


def fit_anticrossing(config: RunConfig, output_dir: Path) -> CommandResult:
    """Spin-valley parameters from a ν(B) table."""
    path = require_path(config.nu_path, "nu(B) table")
    table = read_frequency_table(path)
    sigma = table.nu_sigma if config.fit.use_uncertainties and np.all(np.isfinite(table.nu_sigma)) else None
    fit = fit_anticrossing_spectrum(
        table.B, table.nu, sigma, g_base=config.fit.g_base, max_iterations=config.fit.max_iterations
    )
    report = _spectrum_report(fit)
    output = write_json(output_dir / "spectrum.json", report)
    return CommandResult(
        outputs=[output],
        inputs=[path],
        summary={"E_l": fit.params.E_l, "E_r": fit.params.E_r, "delta_g": fit.params.delta_g, "underdetermined": fit.underdetermined},
    )
