"""Tests for valleymap data models."""

import numpy as np
import pytest
from pydantic import ValidationError

from valleymap.models import (
    CapacitanceRatioMap,
    ErrorCode,
    FitReport,
    NoiseConfig,
    ProbabilityMap,
    RidgeEntry,
    RidgeTrace,
    TransitionScan,
    ValleyLandscape,
    ValleyMapError,
)


def test_error_codes_map_to_exit_codes():
    """Test every error category has its own exit code."""
    assert ValleyMapError(ErrorCode.INVALID_INPUT, "bad").exit_code == 2
    assert ValleyMapError(ErrorCode.NO_RESULT, "empty").exit_code == 3
    assert ValleyMapError(ErrorCode.NUMERICAL_FAILURE, "nan").exit_code == 4
    assert ValleyMapError("SOMETHING_ELSE", "?").exit_code == 4


def test_error_message_and_details():
    """Test string form and detail payload."""
    error = ValleyMapError(ErrorCode.NO_RESULT, "Ridge has no valid entries", {"traces": 2})
    assert str(error) == "[NO_RESULT] Ridge has no valid entries"
    assert error.code == "NO_RESULT"
    assert error.details == {"traces": 2}
    assert ValleyMapError(ErrorCode.INVALID_INPUT, "x").details == {}


def test_noise_config_validation():
    """Test visibility, offset and shot count rules."""
    assert NoiseConfig(shots=0).shots is None
    assert NoiseConfig(shots=None).shots is None
    with pytest.raises(ValidationError, match="visibility"):
        NoiseConfig(visibility=0.0)
    with pytest.raises(ValidationError, match="within \\[0, 1\\]"):
        NoiseConfig(visibility=0.4, offset=0.8)
    with pytest.raises(ValidationError, match="shots"):
        NoiseConfig(shots=-5)
    with pytest.raises(ValidationError, match="T2_star"):
        NoiseConfig(T2_star=0.0)


def test_probability_map_validation():
    """Test axis ordering, shape and probability range checks."""
    axis1, axis2 = [0.0, 1.0, 2.0], [0.1, 0.2]
    scan = ProbabilityMap(axis1_name="d", axis1_unit="nm", axis1=axis1, axis2=axis2, P=np.full((3, 2), 0.5))
    assert scan.P.shape == (3, 2)
    assert not scan.P.flags.writeable

    with pytest.raises(ValidationError, match="strictly increasing"):
        ProbabilityMap(axis1_name="d", axis1_unit="nm", axis1=[0.0, 0.0, 1.0], axis2=axis2, P=np.zeros((3, 2)))
    with pytest.raises(ValidationError, match="expected \\(3, 2\\)"):
        ProbabilityMap(axis1_name="d", axis1_unit="nm", axis1=axis1, axis2=axis2, P=np.zeros((2, 3)))
    with pytest.raises(ValidationError, match="\\[0, 1\\]"):
        ProbabilityMap(axis1_name="d", axis1_unit="nm", axis1=axis1, axis2=axis2, P=np.full((3, 2), 1.2))


def test_landscape_grid_validation():
    """Test grid shapes follow extent and pitch."""
    grid = np.full((3, 2), 30.0)
    landscape = ValleyLandscape(
        x_extent=2.8, y_extent=1.4, pitch=1.4, y_origin=-0.7,
        E_VS_grid=grid, delta_g_grid=np.zeros((3, 2)), v_grid=np.ones((3, 2)),
    )
    assert landscape.shape == (3, 2)
    assert np.allclose(landscape.x_axis, [0.0, 1.4, 2.8])
    assert np.allclose(landscape.y_axis, [-0.7, 0.7])

    with pytest.raises(ValidationError, match="expected"):
        ValleyLandscape(
            x_extent=4.2, y_extent=1.4, pitch=1.4,
            E_VS_grid=grid, delta_g_grid=np.zeros((3, 2)), v_grid=np.ones((3, 2)),
        )
    with pytest.raises(ValidationError, match="non-negative"):
        ValleyLandscape(
            x_extent=2.8, y_extent=1.4, pitch=1.4,
            E_VS_grid=-grid, delta_g_grid=np.zeros((3, 2)), v_grid=np.ones((3, 2)),
        )


def test_ridge_entry_invariants():
    """Test valid entries carry a field and E_VS, invalid ones carry no E_VS."""
    RidgeEntry(d=1.4, B=0.3, E_VS=34.7, valid=True)
    RidgeEntry(d=1.4, valid=False)
    with pytest.raises(ValidationError, match="need B and E_VS"):
        RidgeEntry(d=1.4, B=0.3, valid=True)
    with pytest.raises(ValidationError, match="carry no E_VS"):
        RidgeEntry(d=1.4, E_VS=30.0, valid=False)


def test_ridge_trace_properties():
    """Test distance and E_VS arrays mark invalid entries with NaN."""
    trace = RidgeTrace(
        entries=[
            RidgeEntry(d=0.0, B=0.3, E_VS=34.7, valid=True),
            RidgeEntry(d=1.4, valid=False),
            RidgeEntry(d=2.8, B=0.31, E_VS=35.9, valid=True),
        ],
        y_offset=6.0,
    )
    assert len(trace.valid_entries) == 2
    assert np.allclose(trace.d, [0.0, 1.4, 2.8])
    assert np.isnan(trace.E_VS[1])
    assert trace.E_VS[2] == 35.9


def test_capacitance_ratio_map_validation():
    """Test ratio maps are positive and match their grid."""
    ratio_map = CapacitanceRatioMap(x=[0.0, 1.0], y=[0.0], ratio=[[1.2], [np.nan]], gates=("SB", "ST"))
    assert ratio_map.measured is None
    with pytest.raises(ValidationError, match="positive"):
        CapacitanceRatioMap(x=[0.0, 1.0], y=[0.0], ratio=[[1.2], [-0.1]], gates=("SB", "ST"))
    with pytest.raises(ValidationError, match="shape"):
        CapacitanceRatioMap(x=[0.0, 1.0], y=[0.0], ratio=[[1.2, 1.0]], gates=("SB", "ST"))


def test_transition_scan_validation():
    """Test scan axes and signal shape checks."""
    TransitionScan(B=[0.0, 0.1], V=[0.0, 1e-5, 2e-5], signal=np.zeros((2, 3)))
    with pytest.raises(ValidationError, match="strictly increasing"):
        TransitionScan(B=[0.1, 0.0], V=[0.0, 1e-5, 2e-5], signal=np.zeros((2, 3)))
    with pytest.raises(ValidationError, match="signal shape"):
        TransitionScan(B=[0.0, 0.1], V=[0.0, 1e-5, 2e-5], signal=np.zeros((3, 2)))


def test_fit_report_accessors():
    """Test estimate and sigma lookups and cost validation."""
    report = FitReport(estimates={"tau": 1.3}, uncertainties={"tau": 0.02}, cost=0.5, iterations=7, converged=True)
    assert report.value("tau") == 1.3
    assert report.sigma("tau") == 0.02
    FitReport(estimates={"tau": 1.3}, uncertainties={"tau": float("nan")}, cost=0.0, iterations=1, converged=False)
    with pytest.raises(ValidationError, match="non-negative"):
        FitReport(estimates={}, uncertainties={}, cost=-1.0, iterations=0, converged=False)
