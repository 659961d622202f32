"""Tests for spline resampling and 2D map assembly."""

import numpy as np
import pytest

from valleymap.analysis.resample import assemble_2d_map, resample_spline, valid_segments
from valleymap.models import ResampledTrace, RidgeEntry, RidgeTrace, ValleyMapError
from valleymap.physics import anticrossing_center


def make_trace(d, E_VS, y_offset=0.0):
    """Ridge trace from (d, E_VS) arrays; NaN marks invalid entries."""
    entries = []
    for position, energy in zip(d, E_VS):
        if np.isnan(energy):
            entries.append(RidgeEntry(d=float(position), valid=False))
        else:
            entries.append(
                RidgeEntry(d=float(position), B=float(anticrossing_center(energy)), E_VS=float(energy), valid=True)
            )
    return RidgeTrace(entries=entries, y_offset=y_offset)


def test_linear_points_resample_exactly():
    """Test a linear E_VS(d) is reproduced on the dense grid."""
    d = np.arange(0, 71, 7.0)
    resampled = resample_spline(make_trace(d, 20 + 0.3 * d))
    assert resampled.d[0] == 0.0
    assert resampled.d[1] == pytest.approx(1.4)
    assert np.allclose(resampled.E_VS, 20 + 0.3 * resampled.d, atol=1e-9)


def test_cubic_reproduced_at_nodes():
    """Test spline samples equal the input at the nodes."""
    d = np.arange(0, 71, 7.0)
    E = 30 + 1e-4 * (d - 35) ** 3
    resampled = resample_spline(make_trace(d, E), pitch=7.0)
    assert np.allclose(resampled.E_VS, E, atol=1e-9)


def test_sinusoid_resample_error_below_two_percent():
    """Test a 60 nm sinusoid sampled every 7 nm is interpolated within 2% of its amplitude."""
    d = np.arange(0, 211, 7.0)
    amplitude = 10.0
    resampled = resample_spline(make_trace(d, 40 + amplitude * np.sin(2 * np.pi * d / 60)), method="cubic")
    truth = 40 + amplitude * np.sin(2 * np.pi * resampled.d / 60)
    assert np.nanmax(np.abs(resampled.E_VS - truth)) < 0.02 * amplitude


def test_monotone_segment_does_not_overshoot():
    """Test the default spline keeps a step-like monotone ridge within its node range."""
    d = np.arange(0, 50, 7.0)
    E = np.array([30.0, 30.0, 30.0, 30.5, 39.5, 40.0, 40.0, 40.0])
    resampled = resample_spline(make_trace(d, E))
    assert resampled.method == "pchip"
    assert np.nanmin(resampled.E_VS) >= 30.0 - 1e-9
    assert np.nanmax(resampled.E_VS) <= 40.0 + 1e-9
    assert np.all(np.diff(resampled.E_VS) >= -1e-9)

    cubic = resample_spline(make_trace(d, E), method="cubic")
    assert np.nanmax(cubic.E_VS) > 40.0 or np.nanmin(cubic.E_VS) < 30.0


def test_invalid_gap_not_bridged():
    """Test grid points between valid segments stay NaN and short segments are listed."""
    d = np.arange(0, 141, 7.0)
    E = 30 + 0.1 * d
    E[6:9] = np.nan
    E[13:15] = np.nan
    trace = make_trace(d, E)
    assert [len(segment) for segment in valid_segments(trace)] == [6, 4, 6]
    resampled = resample_spline(trace)
    gap = (resampled.d > 35.0 + 1e-9) & (resampled.d < 63.0 - 1e-9)
    assert np.all(np.isnan(resampled.E_VS[gap]))
    assert not resampled.unsampled

    E[9:11] = np.nan
    short = resample_spline(make_trace(d, E))
    assert np.allclose(short.unsampled, [(77.0, 37.7), (84.0, 38.4)])


def test_resample_rejects_bad_arguments():
    """Test pitch and method validation."""
    trace = make_trace(np.arange(0, 35, 7.0), np.full(5, 30.0))
    with pytest.raises(ValleyMapError, match="pitch"):
        resample_spline(trace, pitch=0.0)
    with pytest.raises(ValleyMapError, match="Unknown spline"):
        resample_spline(trace, method="quintic")


@pytest.mark.parametrize("method", ["cubic", "pchip", "akima"])
def test_resample_methods_agree_on_smooth_data(method):
    """Test every spline family resamples a gentle curve closely."""
    d = np.arange(0, 141, 7.0)
    E = 35 + 5 * np.tanh((d - 70) / 40)
    resampled = resample_spline(make_trace(d, E), method=method)
    truth = 35 + 5 * np.tanh((resampled.d - 70) / 40)
    assert resampled.method == method
    assert np.max(np.abs(resampled.E_VS - truth)) < 0.05


def test_identical_traces_give_uniform_map():
    """Test two identical traces produce a map constant across y."""
    d = 1.4 * np.arange(20)
    E = 30 + np.sin(d / 5)
    traces = [
        ResampledTrace(y_offset=y, d=d, E_VS=E, pitch=1.4, method="cubic") for y in (-6.0, 0.0)
    ]
    grid = assemble_2d_map(traces)
    assert not grid.is_1d
    assert grid.y[0] == -6.0 and grid.y[-1] == 0.0
    assert np.allclose(grid.E_VS, E[:, None])


def test_map_interpolates_linearly_and_propagates_gaps():
    """Test midpoints are averages and missing cells stay missing."""
    d = 1.4 * np.arange(5)
    lower = np.array([10.0, 10.0, np.nan, 10.0, 10.0])
    upper = np.full(5, 20.0)
    traces = [
        ResampledTrace(y_offset=0.0, d=d, E_VS=lower, pitch=1.4, method="cubic"),
        ResampledTrace(y_offset=6.0, d=d, E_VS=upper, pitch=1.4, method="cubic"),
    ]
    grid = assemble_2d_map(traces, y_grid=[0.0, 3.0, 6.0])
    assert np.allclose(grid.E_VS[0], [10.0, 15.0, 20.0])
    assert np.isnan(grid.E_VS[2, 0]) and np.isnan(grid.E_VS[2, 1])
    assert grid.E_VS[2, 2] == 20.0


def test_single_trace_flagged_1d():
    """Test one trace is returned unchanged as a 1D map."""
    d = 1.4 * np.arange(4)
    grid = assemble_2d_map([ResampledTrace(y_offset=2.0, d=d, E_VS=np.ones(4), pitch=1.4, method="cubic")])
    assert grid.is_1d
    assert grid.E_VS.shape == (4, 1)


def test_assemble_rejects_bad_inputs():
    """Test empty input, mixed pitches and duplicate offsets."""
    d = 1.4 * np.arange(4)
    with pytest.raises(ValleyMapError, match="No traces"):
        assemble_2d_map([])
    with pytest.raises(ValleyMapError, match="different pitches"):
        assemble_2d_map(
            [
                ResampledTrace(y_offset=0.0, d=d, E_VS=np.ones(4), pitch=1.4, method="cubic"),
                ResampledTrace(y_offset=1.0, d=d, E_VS=np.ones(4), pitch=0.7, method="cubic"),
            ]
        )
    with pytest.raises(ValleyMapError, match="distinct"):
        assemble_2d_map([ResampledTrace(y_offset=0.0, d=d, E_VS=np.ones(4), pitch=1.4, method="cubic")] * 2)
