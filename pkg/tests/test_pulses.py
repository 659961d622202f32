"""Tests for the conveyor waveform and pulse timeline."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from valleymap.models import ShuttleWaveform, StageName, StageTimeline, ValleyMapError
from valleymap.pulses import nominal_position, shuttle_duration, trajectory, waveform_voltage

DEFAULT_WAVEFORM = ShuttleWaveform()


@pytest.mark.parametrize("tau_ns", [0, 25, 50, 75, 100])
def test_waveform_voltage_closed_form(tau_ns):
    """Test U_i·sin(2πfτ + φ_i) + C_i on all four gates."""
    tau = tau_ns * 1e-9
    amplitudes = (0.150, 0.192, 0.150, 0.192)
    offsets = (0.7, 0.896, 0.7, 0.896)
    phases = (-math.pi / 2, 0.0, math.pi / 2, math.pi)
    for i in range(1, 5):
        expected = amplitudes[i - 1] * math.sin(2 * math.pi * 1e7 * tau + phases[i - 1]) + offsets[i - 1]
        assert abs(waveform_voltage(DEFAULT_WAVEFORM, i, tau) - expected) <= 1e-12


def test_waveform_opposite_gates_in_antiphase():
    """Test gates 1/3 and 2/4 differ by a phase of π."""
    tau = np.linspace(0, 200e-9, 101)
    for first, second in ((1, 3), (2, 4)):
        k = first - 1
        u1 = (waveform_voltage(DEFAULT_WAVEFORM, first, tau) - DEFAULT_WAVEFORM.offsets[k]) / DEFAULT_WAVEFORM.amplitudes[k]
        u2 = (waveform_voltage(DEFAULT_WAVEFORM, second, tau) - DEFAULT_WAVEFORM.offsets[k]) / DEFAULT_WAVEFORM.amplitudes[k]
        assert np.max(np.abs(u1 + u2)) < 1e-12


def test_waveform_rejects_bad_gate():
    """Test gate index validation."""
    with pytest.raises(ValleyMapError, match="1..4"):
        waveform_voltage(DEFAULT_WAVEFORM, 5, 0.0)


def test_nominal_position_one_period():
    """Test one drive period moves the electron one wavelength."""
    assert nominal_position(100e-9, DEFAULT_WAVEFORM) == 280.0
    assert DEFAULT_WAVEFORM.velocity == pytest.approx(2.8e9)
    with pytest.raises(ValleyMapError, match="non-negative"):
        nominal_position(-1e-9, DEFAULT_WAVEFORM)


@given(a=st.floats(0.0, 1e-6), b=st.floats(0.0, 1e-6))
def test_nominal_position_is_linear(a, b):
    """Test additivity of the nominal position."""
    total = nominal_position(a + b, DEFAULT_WAVEFORM)
    parts = nominal_position(a, DEFAULT_WAVEFORM) + nominal_position(b, DEFAULT_WAVEFORM)
    assert total == pytest.approx(parts, rel=1e-12, abs=1e-9)


def test_waveform_aliases():
    """Test config keys map onto the waveform fields."""
    w = ShuttleWaveform.model_validate({"f_Hz": 2e7, "lambda_nm": 140.0})
    assert w.frequency == 2e7
    assert w.wavelength == 140.0
    with pytest.raises(ValueError, match="positive"):
        ShuttleWaveform.model_validate({"f_Hz": 0.0})


def test_shuttle_duration():
    """Test 280 nm takes 100 ns each way."""
    assert shuttle_duration(280.0, DEFAULT_WAVEFORM) == pytest.approx(100e-9)


def test_trajectory_stage_order_and_separated_time():
    """Test stages and the separated-time bookkeeping."""
    timeline = StageTimeline()
    traj = trajectory(timeline, DEFAULT_WAVEFORM, 140.0)
    names = [stage.name for stage in traj.stages]
    assert names == [
        StageName.I,
        StageName.S,
        StageName.T,
        StageName.SHUTTLE_OUT,
        StageName.WAIT_D,
        StageName.SHUTTLE_BACK,
        StageName.T2,
        StageName.S2,
        StageName.P,
        StageName.F,
    ]
    expected = 2 * 50e-9 + timeline.wait + timeline.dwell
    assert traj.separated_time == pytest.approx(expected, rel=1e-12)


def test_trajectory_without_shuttle():
    """Test zero distance omits the shuttle stages."""
    traj = trajectory(StageTimeline(), DEFAULT_WAVEFORM, 0.0)
    names = {stage.name for stage in traj.stages}
    assert StageName.SHUTTLE_OUT not in names
    assert traj.position(1e-3) == 0.0


def test_trajectory_position_profile():
    """Test the electron reaches the target, waits and returns."""
    timeline = StageTimeline()
    traj = trajectory(timeline, DEFAULT_WAVEFORM, 140.0)
    t_out = timeline.init + timeline.separate + timeline.tunnel
    assert traj.position(t_out) == pytest.approx(0.0)
    assert traj.position(t_out + 25e-9) == pytest.approx(70.0)
    assert traj.position(t_out + 50e-9 + 0.5 * timeline.wait) == pytest.approx(140.0)
    assert traj.position(traj.total_duration) == pytest.approx(0.0)


def test_trajectory_rejects_long_shuttle():
    """Test distances beyond the longest shuttle stage fail."""
    with pytest.raises(ValleyMapError, match="exceeds"):
        trajectory(StageTimeline(), DEFAULT_WAVEFORM, 400.0)


def test_quadrature_weights_sum_to_separated_time():
    """Test quadrature nodes cover all separated stages."""
    traj = trajectory(StageTimeline(), DEFAULT_WAVEFORM, 100.0)
    times, positions, weights = traj.quadrature_nodes(1e-9)
    assert weights.sum() == pytest.approx(traj.separated_time, rel=1e-12)
    assert positions.max() <= 100.0 + 1e-9
    assert np.all(np.diff(times) > 0)


def test_stage_durations_must_be_positive():
    """Test timeline validation."""
    with pytest.raises(ValueError, match="positive"):
        StageTimeline(wait=0.0)
