"""Tests for decaying-cosine fits and per-field frequency extraction."""

import numpy as np
import pytest

from valleymap.analysis.oscillation import extract_frequencies, fit_oscillation, oscillation_model
from valleymap.models import StageTimeline, ValleyMapError
from valleymap.physics import REFERENCE_DQD_PARAMS, precession_frequency
from valleymap.simulate import simulate_dqd_scan, simulate_shuttle_map


def test_fit_oscillation_noiseless_trace():
    """Test a clean 7.37 MHz trace is recovered within 1 kHz."""
    tau = np.linspace(0, 1.5e-6, 100)
    trace = oscillation_model(tau, 0.35, 7.37e6, 0.0, 1e-6, 0.5)
    fit = fit_oscillation(tau, trace)
    assert fit.nu == pytest.approx(7.37e6, abs=1e3)
    assert fit.a == pytest.approx(0.35, abs=1e-3)
    assert fit.T2_star == pytest.approx(1e-6, rel=1e-2)
    assert fit.c == pytest.approx(0.5, abs=1e-3)
    assert not fit.low_visibility


def test_fit_oscillation_constant_trace_flagged():
    """Test a flat trace yields a low-visibility result, not an error."""
    tau = np.linspace(0, 1e-6, 100)
    fit = fit_oscillation(tau, np.full(100, 0.5))
    assert fit.low_visibility
    assert fit.a == pytest.approx(0.0, abs=1e-6)
    assert fit.c == pytest.approx(0.5)


def test_fit_oscillation_shot_noise_uncertainty():
    """Test the frequency uncertainty of a binomially sampled trace is of order 100 kHz."""
    rng = np.random.default_rng(11)
    tau = np.linspace(0, 1.5e-6, 100)
    probability = oscillation_model(tau, 0.35, 5e6, 0.3, 1e-6, 0.5)
    trace = rng.binomial(1000, probability) / 1000
    fit = fit_oscillation(tau, trace)
    assert fit.nu == pytest.approx(5e6, abs=3e5)
    assert 1e3 < fit.nu_sigma < 1e6


def test_fit_oscillation_input_checks():
    """Test short and unordered inputs fail."""
    with pytest.raises(ValleyMapError, match="At least 8"):
        fit_oscillation(np.arange(5.0), np.zeros(5))
    with pytest.raises(ValleyMapError, match="increase strictly"):
        fit_oscillation(np.array([0, 1, 2, 3, 5, 4, 6, 7, 8.0]), np.zeros(9))
    with pytest.raises(ValleyMapError, match="equal length"):
        fit_oscillation(np.arange(10.0), np.zeros(9))


def test_extract_frequencies_from_dqd_scan(reference_params, exact_noise):
    """Test per-field fits reproduce the precession frequency."""
    B = np.array([0.3, 0.35, 0.4])
    tau = np.linspace(0, 1.5e-6, 100)
    table = extract_frequencies(simulate_dqd_scan(reference_params, B, tau, exact_noise))
    assert np.array_equal(table.B, B)
    assert np.allclose(table.nu, precession_frequency(REFERENCE_DQD_PARAMS, B), atol=1e3)
    assert np.all(table.nu_sigma >= 0)


def test_extract_frequencies_needs_time_axis(ramp_landscape, exact_noise):
    """Test a P_S(d, B) map is rejected."""
    scan = simulate_shuttle_map(ramp_landscape, [0.0, 10.0], np.linspace(0.2, 0.3, 4), StageTimeline(), exact_noise)
    with pytest.raises(ValleyMapError, match="time-resolved"):
        extract_frequencies(scan)
