"""Tests for scan filters, transition tracking and the 01/12 lineshape fits."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from valleymap.commands.benchmark import synthesize_scans
from valleymap.config import AxisConfig, MagnetospecConfig
from valleymap.magnetospec import (
    fit_01_transition,
    fit_EST,
    magnetospec_positions,
    run_magnetospectroscopy,
    sobel_filter,
    subtract_background,
    subtract_correlated_noise,
    synthesize_transition_scan,
    track_transition,
    v01_curve,
    v12_curve,
)
from valleymap.magnetospec.filters import background_kernel
from valleymap.magnetospec.lineshapes import fixed_01_result
from valleymap.magnetospec.transitions import lorentzian
from valleymap.models import MagnetospecModel, TransitionPosition, TransitionScan, ValleyMapError
from valleymap.physics import CONSTANTS

MODEL = MagnetospecModel(alpha=0.1, temperature=0.1, V0=0.0, E_ST=50.0)


def positions(B, V):
    return [TransitionPosition(B=float(b), V=float(v)) for b, v in zip(B, V)]


# --- filters -------------------------------------------------------------------


def test_sobel_constant_image_is_zero():
    """Test a flat image has no gradient."""
    assert np.array_equal(sobel_filter(np.full((5, 6), 3.0)), np.zeros((5, 6)))


def test_sobel_step_response():
    """Test a unit step along the sweep gives 4 on the two pixels next to the edge."""
    image = np.zeros((5, 10))
    image[:, 5:] = 1.0
    expected = np.zeros((5, 10))
    expected[:, 4:6] = 4.0
    assert np.array_equal(sobel_filter(image), expected)
    assert np.array_equal(sobel_filter(1.0 - image), -expected)


def test_sobel_ramp_response():
    """Test a ramp of slope s gives 8·s away from the borders."""
    s = 0.25
    image = np.tile(s * np.arange(12.0), (6, 1))
    response = sobel_filter(image)
    assert np.array_equal(response[:, 1:-1], np.full((6, 10), 8 * s))
    assert np.array_equal(response[:, 0], np.full(6, 4 * s))


@settings(max_examples=30, deadline=None)
@given(
    image=arrays(
        np.float64,
        st.tuples(st.integers(3, 8), st.integers(3, 8)),
        elements=st.floats(-10, 10, allow_nan=False),
    )
)
def test_sobel_axes_are_transposes(image):
    """Test filtering along axis 0 equals filtering the transpose along axis 1."""
    assert np.allclose(sobel_filter(image, axis=0), sobel_filter(image.T, axis=1).T)


def test_sobel_rejects_small_images():
    """Test undersized images fail."""
    with pytest.raises(ValleyMapError, match="3x3"):
        sobel_filter(np.zeros((2, 5)))


def test_background_kernel_is_odd():
    """Test three transition widths, rounded up to odd."""
    assert background_kernel(3) == 9
    assert background_kernel(4) == 13
    with pytest.raises(ValleyMapError, match="at least one sample"):
        background_kernel(0)


def test_subtract_background_flat_and_spike():
    """Test a flat line vanishes and a narrow spike survives."""
    line = np.full((1, 50), 2.0)
    assert np.allclose(subtract_background(line, 3), 0.0)
    line[0, 25] = 7.0
    cleaned = subtract_background(line, 3)
    assert cleaned[0, 25] == pytest.approx(5.0)
    assert np.allclose(np.delete(cleaned[0], 25), 0.0)


def test_subtract_background_keeps_lorentzian_amplitude():
    """Test a Lorentzian on a slow sensor background keeps 95% of its amplitude."""
    V = np.linspace(0.0, 1.0, 201)
    line = lorentzian(V, 1.0, 0.5, 0.01, 0.0) + 0.05 * V + 0.03 * V**2
    cleaned = subtract_background(line[None, :], 20)
    assert cleaned[0, 100] == pytest.approx(1.0, rel=0.05)


def test_subtract_background_kernel_too_long():
    """Test a median window longer than the sweep fails."""
    with pytest.raises(ValleyMapError, match="exceeds"):
        subtract_background(np.zeros((2, 50)), 20)


# --- tracking ------------------------------------------------------------------

V_AXIS = np.linspace(0.0, 0.1, 101)
GAMMA = 2e-3


def lorentzian_scan(centers, noise=0.0, seed=0):
    B = np.linspace(0.0, 1.0, len(centers))
    signal = np.array([lorentzian(V_AXIS, 1.0, c, GAMMA, 0.0) for c in centers])
    if noise:
        signal = signal + np.random.default_rng(seed).normal(0.0, noise, signal.shape)
    return TransitionScan(B=B, V=V_AXIS, signal=signal, label="01")


def test_track_noiseless_lines_exact():
    """Test Lorentzian centers are recovered to 1 µV."""
    centers = np.linspace(0.0303, 0.0697, 15)
    tracked = track_transition(lorentzian_scan(centers))
    assert all(p.valid for p in tracked)
    assert np.allclose([p.V for p in tracked], centers, atol=1e-6)


def test_track_noisy_lines_within_tenth_linewidth():
    """Test SNR-10 lines give center errors below a tenth of the linewidth."""
    centers = np.linspace(0.03, 0.07, 20)
    tracked = track_transition(lorentzian_scan(centers, noise=0.1, seed=4))
    errors = np.array([p.V for p in tracked]) - centers
    assert np.sqrt(np.mean(errors**2)) < 2 * GAMMA / 10


def test_track_flags_line_without_peak():
    """Test a line with no significant peak is skipped."""
    scan = lorentzian_scan(np.full(5, 0.05))
    signal = np.array(scan.signal)
    signal[2] = np.random.default_rng(0).normal(0.0, 0.01, V_AXIS.size)
    tracked = track_transition(TransitionScan(B=scan.B, V=scan.V, signal=signal))
    assert [p.valid for p in tracked] == [True, True, False, True, True]
    assert tracked[2].V is None


def test_synthetic_scan_validation():
    """Test scan synthesis input checks."""
    with pytest.raises(ValleyMapError, match="One transition center"):
        synthesize_transition_scan([0.0, 0.1], V_AXIS, [0.05], 1e-3)
    with pytest.raises(ValleyMapError, match="width must be positive"):
        synthesize_transition_scan([0.0], V_AXIS, [0.05], 0.0)
    with pytest.raises(ValleyMapError, match="needs E_ST"):
        magnetospec_positions(MODEL.model_copy(update={"E_ST": None}), [0.0, 0.1], seed=1)


# --- lineshapes ----------------------------------------------------------------


def test_v01_limits():
    """Test the zero-field offset and the large-field slope of the 01 transition."""
    kT = CONSTANTS.k_B * 0.1
    assert v01_curve(0.0, 0.1, 0.1, V0=0.2) == pytest.approx(0.2 - math.log(2) * kT / (0.1 * 1e6), rel=1e-12)
    slope = (v01_curve(2.0, 0.1, 0.1) - v01_curve(1.9, 0.1, 0.1)) / 0.1
    assert slope == pytest.approx(-2 * CONSTANTS.mu_B / (2 * 0.1 * 1e6), rel=1e-6)


def test_v12_zero_field_value():
    """Test the 12 transition at B = 0."""
    kT = CONSTANTS.k_B * 0.1
    e = math.exp(50.0 / kT)
    expected = 0.01 + kT / (0.1 * 1e6) * math.log(2 * e / (e + 3))
    assert v12_curve(0.0, 0.1, 0.1, 50.0, V0=0.01) == pytest.approx(expected, rel=1e-12)


def test_v12_kink_at_singlet_triplet_splitting():
    """Test the 12 maximum sits where g·µ_B·B = E_ST for E_ST ≫ kT."""
    B = np.linspace(0.0, 2.0, 20001)
    V = v12_curve(B, 0.1, 0.05, 100.0)
    kink = 2 * CONSTANTS.mu_B * B[np.argmax(V)]
    assert kink == pytest.approx(100.0, abs=0.5 * CONSTANTS.k_B * 0.05)


def test_fit_01_round_trip():
    """Test α within 1% and T within 5% from exact 01 positions."""
    B = np.linspace(0.0, 1.5, 61)
    fit = fit_01_transition(positions(B, v01_curve(B, 0.1, 0.1)))
    assert fit.identifiable
    assert fit.model.alpha == pytest.approx(0.1, rel=0.01)
    assert fit.model.temperature == pytest.approx(0.1, rel=0.05)
    assert np.nanmax(np.abs(fit.residuals)) < 1e-7


def test_fit_01_flags_narrow_field_range():
    """Test a sweep confined to the linear regime is not identifiable."""
    B = np.linspace(0.5, 1.0, 20)
    fit = fit_01_transition(positions(B, v01_curve(B, 0.1, 0.1)))
    assert not fit.identifiable


def test_fit_01_needs_positions():
    """Test too few valid lines fail."""
    with pytest.raises(ValleyMapError, match="Too few"):
        fit_01_transition([TransitionPosition(B=0.1, valid=False)] * 10)


def test_fit_EST_noiseless_and_noisy():
    """Test E_ST recovery from exact and 10 µV-noised 12 positions."""
    B = np.linspace(0.0, 1.0, 101)
    V = v12_curve(B, 0.1, 0.1, 50.0, V0=2e-4)
    exact = fit_EST(positions(B, V), MODEL)
    assert exact.E_ST == pytest.approx(50.0, abs=1e-3)
    assert exact.V0 == pytest.approx(2e-4, abs=1e-9)
    assert exact.kink_in_range

    noisy = fit_EST(positions(B, V + np.random.default_rng(5).normal(0.0, 10e-6, B.size)), MODEL)
    assert noisy.E_ST == pytest.approx(50.0, abs=2.0)
    assert noisy.E_ST_sigma > 0


def test_fit_EST_kink_beyond_sweep():
    """Test a kink beyond the maximum field is flagged."""
    B = np.linspace(0.0, 1.0, 51)
    fit = fit_EST(positions(B, v12_curve(B, 0.1, 0.1, 200.0)), MODEL)
    assert not fit.kink_in_range


# --- correlated noise ----------------------------------------------------------


def test_common_drift_removed_exactly():
    """Test identical drift on both transitions cancels with a fixed 01 model."""
    B = np.linspace(0.0, 1.0, 41)
    drift = 50e-6 * np.sin(2 * np.pi * B / 0.2)
    fit01 = fixed_01_result(positions(B, v01_curve(B, 0.1, 0.1) + drift), MODEL)
    clean = subtract_correlated_noise(fit01, positions(B, v12_curve(B, 0.1, 0.1, 50.0) + drift))
    assert np.allclose([p.V for p in clean], v12_curve(B, 0.1, 0.1, 50.0), atol=1e-12)


def test_zero_residuals_are_identity():
    """Test a perfect 01 record leaves the 12 positions unchanged."""
    B = np.linspace(0.0, 1.0, 11)
    fit01 = fixed_01_result(positions(B, v01_curve(B, 0.1, 0.1)), MODEL)
    original = positions(B, np.linspace(1e-4, 2e-4, 11))
    assert [p.V for p in subtract_correlated_noise(fit01, original)] == pytest.approx([p.V for p in original])


def test_skipped_lines_and_grid_mismatch():
    """Test a skipped 01 line invalidates the 12 line and grids must match."""
    B = np.linspace(0.0, 1.0, 5)
    lines_01 = positions(B, v01_curve(B, 0.1, 0.1))
    lines_01[1] = TransitionPosition(B=float(B[1]), valid=False)
    fit01 = fixed_01_result(lines_01, MODEL)
    clean = subtract_correlated_noise(fit01, positions(B, np.zeros(5)))
    assert [p.valid for p in clean] == [True, False, True, True, True]
    with pytest.raises(ValleyMapError, match="different field grids"):
        subtract_correlated_noise(fit01, positions(B[:4], np.zeros(4)))


def test_independent_noise_on_12_unchanged():
    """Test independent 12 noise keeps its spread after subtraction."""
    rng = np.random.default_rng(6)
    B = np.linspace(0.0, 1.0, 2001)
    noise = rng.normal(0.0, 5e-6, B.size)
    fit01 = fixed_01_result(positions(B, v01_curve(B, 0.1, 0.1)), MODEL)
    clean = subtract_correlated_noise(fit01, positions(B, noise))
    assert np.std([p.V for p in clean]) == pytest.approx(np.std(noise), rel=1e-9)


# --- pipeline ------------------------------------------------------------------


def test_pipeline_on_quiet_scans():
    """Test the filter, track and fit chain recovers E_ST from scans without position noise."""
    opts = MagnetospecConfig(
        B=AxisConfig(start=0.0, stop=1.0, points=101), common_sigma=0.0, drift_amplitude=0.0, independent_sigma=0.0
    )
    scan_01, scan_12 = synthesize_scans(opts, np.random.default_rng(0))
    report = run_magnetospectroscopy(scan_01, scan_12, transition_width=opts.transition_width_V, E_VS=100.0)
    assert report.est.E_ST == pytest.approx(50.0, abs=1.0)
    assert report.E_ST_over_E_VS == pytest.approx(report.est.E_ST / 100.0)
    assert report.skipped_lines == 0
    assert report.noise_subtracted


@pytest.mark.slow
def test_correlated_noise_subtraction_improves_E_ST():
    """Test E_ST within 2 µeV with noise subtraction and at least twice the error without."""
    opts = MagnetospecConfig()
    with_subtraction, without = [], []
    for seed in range(4):
        scan_01, scan_12 = synthesize_scans(opts, np.random.default_rng(seed))
        on = run_magnetospectroscopy(scan_01, scan_12, transition_width=opts.transition_width_V)
        off = run_magnetospectroscopy(scan_01, scan_12, transition_width=opts.transition_width_V, subtract_noise=False)
        with_subtraction.append(abs(on.est.E_ST - opts.E_ST))
        without.append(abs(off.est.E_ST - opts.E_ST))
    assert np.mean(with_subtraction) <= 2.0
    assert np.mean(without) >= 2 * np.mean(with_subtraction)
