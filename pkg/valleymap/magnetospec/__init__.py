"""Magnetospectroscopy benchmark: scan filtering, lineshape fits and dot triangulation."""

from .filters import filter_scan, sobel_filter, subtract_background
from .lineshapes import fit_01_transition, fit_EST, v01_curve, v12_curve
from .transitions import (
    magnetospec_positions,
    run_magnetospectroscopy,
    subtract_correlated_noise,
    synthesize_transition_scan,
    track_transition,
)
from .triangulation import (
    DeviceLayout,
    GateKernel,
    cross_capacitance_ratio,
    gate_potential_maps,
    kernel_ratio,
    measured_ratio,
    triangulate,
    triangulate_batch,
    y_displacement_calibration,
)

__all__ = [
    "DeviceLayout",
    "GateKernel",
    "cross_capacitance_ratio",
    "filter_scan",
    "fit_01_transition",
    "fit_EST",
    "gate_potential_maps",
    "kernel_ratio",
    "magnetospec_positions",
    "measured_ratio",
    "run_magnetospectroscopy",
    "sobel_filter",
    "subtract_background",
    "subtract_correlated_noise",
    "synthesize_transition_scan",
    "track_transition",
    "triangulate",
    "triangulate_batch",
    "v01_curve",
    "v12_curve",
    "y_displacement_calibration",
]
