#!/usr/bin/env python3
"""Demo script to showcase valleymap on a synthetic shuttling campaign."""

from typing import List, Sequence

import numpy as np

from valleymap.analysis import (
    assemble_2d_map,
    binned_correlation,
    compare_to_reference,
    extract_ridge,
    fit_correlation_model,
    fit_rician,
    resample_spline,
    ridge_error,
)
from valleymap.commands.benchmark import MEASURED_LB_RB, MEASURED_SB_ST, synthesize_scans
from valleymap.config import MagnetospecConfig, TimelineConfig
from valleymap.landscape import synthesize_landscape
from valleymap.magnetospec import (
    DeviceLayout,
    cross_capacitance_ratio,
    gate_potential_maps,
    run_magnetospectroscopy,
    triangulate,
)
from valleymap.models import (
    LandscapeSpec,
    NoiseConfig,
    ProbabilityMap,
    ResampledTrace,
    ValleyLandscape,
    ValleyMapError,
)
from valleymap.simulate import simulate_shuttle_map

SEED = 42
Y_OFFSETS = [6.0, 0.0, -6.0, -12.0]


def demo_landscape() -> ValleyLandscape:
    """Demonstrate landscape synthesis."""
    print("🔹 Demo: Landscape Synthesis")
    print("=" * 50)

    landscape = synthesize_landscape(LandscapeSpec(), seed=SEED)
    E_VS = landscape.E_VS_grid
    print(f"✅ Grid: {landscape.shape[0]} x {landscape.shape[1]} points at {landscape.pitch} nm")
    print(f"📊 E_VS mean: {E_VS.mean():.1f} µeV")
    print(f"📊 E_VS range: {E_VS.min():.1f} to {E_VS.max():.1f} µeV")
    print()
    return landscape


def demo_shuttle_maps(landscape: ValleyLandscape) -> List[ProbabilityMap]:
    """Demonstrate shuttle map simulation for several trace offsets."""
    print("🔹 Demo: Shuttle Maps")
    print("=" * 50)

    d = np.linspace(0.0, 84.0, 61)
    B = np.linspace(0.2, 0.62, 61)
    timeline = TimelineConfig().to_timeline()
    maps = []
    for k, y_offset in enumerate(Y_OFFSETS):
        noise = NoiseConfig(shots=1000, seed=SEED + k)
        scan = simulate_shuttle_map(landscape, d, B, timeline, noise, y_offset=y_offset)
        print(f"✅ y = {y_offset:+5.1f} nm: {scan.P.shape[0]} x {scan.P.shape[1]} map, "
              f"P_S in [{scan.P.min():.2f}, {scan.P.max():.2f}]")
        maps.append(scan)
    print()
    return maps


def demo_ridges(maps: Sequence[ProbabilityMap], landscape: ValleyLandscape) -> List[ResampledTrace]:
    """Demonstrate ridge extraction, resampling and the 2D map."""
    print("🔹 Demo: Ridge Extraction")
    print("=" * 50)

    resampled = []
    for scan in maps:
        trace = extract_ridge(scan)
        valid = len(trace.valid_entries)
        print(f"🔍 y = {trace.y_offset:+5.1f} nm: {valid}/{len(trace.entries)} valid entries")
        if not valid:
            continue
        error = ridge_error(trace, landscape)
        print(f"   RMS field error: {error.rms_B * 1e3:.2f} mT")
        resampled.append(resample_spline(trace, pitch=1.4))

    if resampled:
        grid = assemble_2d_map(resampled, y_pitch=1.4)
        print(f"✅ 2D map: {grid.E_VS.shape[0]} x {grid.E_VS.shape[1]} (1D: {grid.is_1d})")
    print()
    return resampled


def demo_statistics(traces: Sequence[ResampledTrace]) -> None:
    """Demonstrate correlation and distribution fits."""
    print("🔹 Demo: Disorder Statistics")
    print("=" * 50)

    points = np.array(
        [(d, trace.y_offset, e) for trace in traces for d, e in zip(trace.d, trace.E_VS) if np.isfinite(e)]
    )
    if points.size == 0:
        print("⚠️ No valid E_VS samples")
        print()
        return
    print(f"📊 Samples: {len(points)}")

    try:
        curve = binned_correlation(points)
        correlation = fit_correlation_model(curve)
        print(f"✅ a_dot: {correlation.model.a_dot:.1f} nm (E_orb {correlation.E_orb_meV:.2f} meV)")
    except ValleyMapError as e:
        print(f"⚠️ Correlation fit: {e}")

    try:
        rician = fit_rician(points[points[:, 2] > 0, 2])
        print(f"✅ Rician: γ = {rician.params.gamma:.1f} µeV, σ = {rician.params.sigma:.1f} µeV")
        scores = compare_to_reference(rician)
        print("   z-scores vs reference: " + ", ".join(f"{k} {v:+.1f}" for k, v in scores.items()))
    except ValleyMapError as e:
        print(f"⚠️ Distribution fit: {e}")
    print()


def demo_magnetospec() -> None:
    """Demonstrate the magnetospectroscopy benchmark on synthetic scans."""
    print("🔹 Demo: Magnetospectroscopy")
    print("=" * 50)

    opts = MagnetospecConfig()
    scan_01, scan_12 = synthesize_scans(opts, np.random.default_rng(SEED))
    report = run_magnetospectroscopy(scan_01, scan_12, opts.transition_width_V, threshold=opts.threshold)
    print(f"✅ Lever arm: {report.fit01.model.alpha:.3f} eV/V")
    print(f"✅ Temperature: {report.fit01.model.temperature * 1e3:.0f} mK")
    print(f"✅ E_ST: {report.est.E_ST:.1f} ± {report.est.E_ST_sigma:.1f} µeV (planted {opts.E_ST:.1f})")
    print()


def demo_triangulation() -> None:
    """Demonstrate dot triangulation from cross-capacitance ratios."""
    print("🔹 Demo: Triangulation")
    print("=" * 50)

    layout = DeviceLayout()
    grid = np.linspace(-60.0, 60.0, 121)
    responses = gate_potential_maps(layout, grid, grid)
    map_sb_st = cross_capacitance_ratio(grid, grid, responses, ("SB", "ST"), *MEASURED_SB_ST)
    map_lb_rb = cross_capacitance_ratio(grid, grid, responses, ("LB", "RB"), *MEASURED_LB_RB)
    result = triangulate(map_sb_st, map_lb_rb)
    if result.consistent:
        print(f"✅ Dot at x = {result.x:.1f} ± {result.sigma_x:.1f} nm, y = {result.y:.1f} ± {result.sigma_y:.1f} nm")
        print(f"   {result.n_cells} grid cells inside both bands")
    else:
        print("⚠️ Measured ratios have no common cell")
    print()


def main():
    """Run the complete demo."""
    print("🌟 valleymap Demo")
    print("🌟 Synthetic Shuttling Campaign")
    print("=" * 50)
    print()

    try:
        landscape = demo_landscape()
        maps = demo_shuttle_maps(landscape)
        traces = demo_ridges(maps, landscape)
        demo_statistics(traces)
        demo_magnetospec()
        demo_triangulation()

        print("🎉 Demo completed successfully!")
        print()
        print("📋 Next Steps:")
        print("1. Run the full pipeline: valleymap synth-landscape --seed 42 -o runs/landscape")
        print("2. Simulate maps: valleymap simulate-map --seed 42 --landscape runs/landscape/landscape.json -o runs/maps")
        print("3. Analyse them: valleymap extract --map runs/maps/map_00.csv -o runs/extract")
    except ValleyMapError as e:
        print(f"❌ Demo failed: {e}")
        raise


if __name__ == "__main__":
    main()
