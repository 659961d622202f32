"""Tests for cross-capacitance ratio maps and dot triangulation."""

import numpy as np
import pytest
from pydantic import ValidationError

from valleymap.magnetospec.triangulation import (
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
from valleymap.models import ValleyMapError

GRID = np.linspace(-60.0, 60.0, 121)
LAYOUT = DeviceLayout()


@pytest.fixture(scope="module")
def ratio_maps():
    responses = gate_potential_maps(LAYOUT, GRID, GRID)
    return (
        cross_capacitance_ratio(GRID, GRID, responses, ("SB", "ST")),
        cross_capacitance_ratio(GRID, GRID, responses, ("LB", "RB")),
    )


def locate(maps, ratio_a, sigma_a, ratio_b, sigma_b):
    map_a, map_b = maps
    return triangulate(
        map_a.model_copy(update={"measured": ratio_a, "measured_sigma": sigma_a}),
        map_b.model_copy(update={"measured": ratio_b, "measured_sigma": sigma_b}),
    )


def test_ratio_map_matches_kernel_ratio(ratio_maps):
    """Test finite-difference ratios equal the exact lever-arm ratio."""
    map_sb_st, _ = ratio_maps
    for ix, iy in [(0, 0), (60, 60), (78, 49), (120, 3)]:
        expected = kernel_ratio(LAYOUT, ("SB", "ST"), GRID[ix], GRID[iy])
        assert map_sb_st.ratio[ix, iy] == pytest.approx(expected, rel=1e-9)


def test_identical_gates_give_unit_ratio():
    """Test a gate against itself has ratio one everywhere."""
    responses = gate_potential_maps(LAYOUT, GRID, GRID, gates=["ST"])
    ratio_map = cross_capacitance_ratio(GRID, GRID, responses, ("ST", "ST"))
    assert np.allclose(ratio_map.ratio, 1.0)


def test_planted_position_recovered_within_one_cell(ratio_maps):
    """Test exact ratios of a dot at (18, -11) nm locate it to one grid cell."""
    ratio_a = kernel_ratio(LAYOUT, ("SB", "ST"), 18.0, -11.0)
    ratio_b = kernel_ratio(LAYOUT, ("LB", "RB"), 18.0, -11.0)
    result = locate(ratio_maps, ratio_a, 0.05, ratio_b, 0.05)
    assert result.consistent
    assert abs(result.x - 18.0) <= 1.0
    assert abs(result.y + 11.0) <= 1.0


def test_wider_bands_increase_spread(ratio_maps):
    """Test doubling the ratio uncertainty widens the position spread."""
    ratio_a = kernel_ratio(LAYOUT, ("SB", "ST"), 18.0, -11.0)
    ratio_b = kernel_ratio(LAYOUT, ("LB", "RB"), 18.0, -11.0)
    narrow = locate(ratio_maps, ratio_a, 0.05, ratio_b, 0.05)
    wide = locate(ratio_maps, ratio_a, 0.10, ratio_b, 0.10)
    assert wide.n_cells > narrow.n_cells
    assert wide.sigma_x > narrow.sigma_x
    assert wide.sigma_y > narrow.sigma_y


def test_measured_device_ratios_intersect(ratio_maps):
    """Test the measured ratios 1.25 ± 0.10 and 0.78 ± 0.08 give a position on the grid."""
    result = locate(ratio_maps, 1.25, 0.10, 0.78, 0.08)
    assert result.consistent
    assert result.n_cells > 0
    assert -60.0 <= result.x <= 60.0 and -60.0 <= result.y <= 60.0


def test_disjoint_bands_are_inconsistent(ratio_maps):
    """Test a ratio no grid cell reaches gives no position."""
    result = locate(ratio_maps, 10.0, 0.1, 0.78, 0.08)
    assert not result.consistent
    assert result.x is None and result.n_cells == 0


def test_triangulate_requires_measured_values(ratio_maps):
    """Test bare ratio maps cannot be intersected."""
    with pytest.raises(ValleyMapError, match="no measured value"):
        triangulate(*ratio_maps)


def test_triangulate_batch(ratio_maps):
    """Test a batch keeps its order and fails only when nothing is located."""
    good = ((1.25, 0.10), (0.78, 0.08))
    bad = ((10.0, 0.1), (0.78, 0.08))
    results = triangulate_batch(*ratio_maps, [good, bad, good])
    assert [r.consistent for r in results] == [True, False, True]
    with pytest.raises(ValleyMapError, match="No measurement yields"):
        triangulate_batch(*ratio_maps, [bad])


def test_measured_ratio_propagation():
    """Test relative uncertainties add in quadrature."""
    ratio, sigma = measured_ratio(1.0, 0.1, 0.8, 0.08)
    assert ratio == pytest.approx(1.25)
    assert sigma == pytest.approx(1.25 * np.sqrt(2) * 0.1)
    with pytest.raises(ValleyMapError, match="positive"):
        measured_ratio(0.0, 0.1, 0.8, 0.08)


def test_potential_map_argument_checks():
    """Test voltage step, gate names and kernel parameters are validated."""
    with pytest.raises(ValleyMapError, match="Voltage step"):
        gate_potential_maps(LAYOUT, GRID, GRID, delta_V=0.0)
    with pytest.raises(ValleyMapError, match="Unknown gates"):
        gate_potential_maps(LAYOUT, GRID, GRID, gates=["CB"])
    with pytest.raises(ValidationError):
        GateKernel(x=0.0, y=0.0, width=-1.0)


def test_y_displacement_calibration_slope():
    """Test the fitted slope of exact (ΔV, y) points."""
    voltages = np.linspace(-0.2, 0.2, 9)
    fit = y_displacement_calibration(list(zip(voltages, -11.0 + 60.0 * voltages)))
    assert fit.slope == pytest.approx(60.0)
    assert fit.intercept == pytest.approx(-11.0)
    assert fit.slope_stderr == pytest.approx(0.0, abs=1e-9)
    assert fit.n_points == 9
    with pytest.raises(ValleyMapError, match="two distinct"):
        y_displacement_calibration([(0.1, 1.0), (0.1, 2.0)])
