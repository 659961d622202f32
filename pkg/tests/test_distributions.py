"""Tests for the Rician and folded-Gaussian maximum-likelihood fits."""

import numpy as np
import pytest
from scipy import integrate, stats

from valleymap.analysis.distributions import (
    compare_to_reference,
    fit_folded_gaussian,
    fit_rician,
    folded_gaussian_logpdf,
    rician_logpdf,
    summarize_samples,
)
from valleymap.models import ValleyMapError


def rician_samples(gamma, sigma, n, seed):
    rng = np.random.default_rng(seed)
    return np.hypot(gamma + sigma * rng.standard_normal(n), sigma * rng.standard_normal(n))


def test_rician_logpdf_matches_scipy():
    """Test the log-density against scipy's Rice law."""
    x = np.linspace(0.5, 120, 50)
    expected = stats.rice.logpdf(x, 35.4 / 13.6, scale=13.6)
    assert np.allclose(rician_logpdf(x, 35.4, 13.6), expected, atol=1e-9)


@pytest.mark.parametrize(
    "logpdf, params",
    [(rician_logpdf, (35.4, 13.6)), (rician_logpdf, (0.0, 10.0)), (folded_gaussian_logpdf, (38.1, 13.0))],
)
def test_densities_normalized(logpdf, params):
    """Test each density integrates to one."""
    upper = params[0] + 12 * params[1]
    total, _ = integrate.quad(lambda x: np.exp(logpdf(x, *params)), 0.0, upper, epsabs=1e-12, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_fit_rician_recovers_parameters():
    """Test 1e5 Rician samples recover γ and σ within three standard errors."""
    fit = fit_rician(rician_samples(35.4, 13.6, 100_000, seed=8))
    assert fit.family == "rician"
    assert abs(fit.params.gamma - 35.4) < 3 * fit.report.sigma("gamma")
    assert abs(fit.params.sigma - 13.6) < 3 * fit.report.sigma("sigma")
    assert fit.report.converged


def test_fit_rician_rayleigh_limit():
    """Test γ = 0 samples give σ from the closed-form Rayleigh estimate."""
    x = rician_samples(0.0, 10.0, 100_000, seed=9)
    fit = fit_rician(x)
    assert fit.params.sigma == pytest.approx(np.sqrt(np.mean(x**2) / 2), rel=0.01)
    assert fit.params.gamma < 3.0


def test_fit_folded_gaussian_recovers_parameters():
    """Test 1e5 folded-Gaussian samples recover µ and σ̃ within three standard errors."""
    rng = np.random.default_rng(10)
    fit = fit_folded_gaussian(np.abs(rng.normal(38.1, 13.0, 100_000)))
    assert fit.family == "folded_gaussian"
    assert abs(fit.params.mu - 38.1) < 3 * fit.report.sigma("mu")
    assert abs(fit.params.sigma_tilde - 13.0) < 3 * fit.report.sigma("sigma_tilde")


def test_fit_folded_gaussian_half_normal():
    """Test µ = 0 reduces to the half-normal estimate sqrt(mean(x²))."""
    rng = np.random.default_rng(11)
    x = np.abs(rng.normal(0.0, 13.0, 100_000))
    fit = fit_folded_gaussian(x)
    assert fit.params.sigma_tilde == pytest.approx(np.sqrt(np.mean(x**2)), rel=0.01)


def test_sample_validation():
    """Test non-positive samples are rejected."""
    with pytest.raises(ValleyMapError, match="positive"):
        fit_rician([10.0, 0.0, 20.0])
    with pytest.raises(ValleyMapError, match="non-negative"):
        fit_folded_gaussian([10.0, -1.0])
    with pytest.raises(ValleyMapError, match="No samples"):
        fit_rician([])


def test_compare_to_reference():
    """Test a fit of reference-distributed samples scores close to the reference."""
    fit = fit_rician(rician_samples(35.4, 13.6, 20_000, seed=12))
    scores = compare_to_reference(fit, "shuttling")
    assert set(scores) == {"gamma", "sigma"}
    assert all(abs(z) < 3 for z in scores.values())
    with pytest.raises(ValleyMapError, match="Unknown reference survey"):
        compare_to_reference(fit, "transport")


def test_summarize_samples():
    """Test descriptive statistics and the share below the resolvable floor."""
    summary = summarize_samples([5.0, 10.0, 20.0, 40.0, np.nan], floor=12.0, bins=4)
    assert summary.count == 4
    assert summary.mean == pytest.approx(18.75)
    assert summary.median == pytest.approx(15.0)
    assert summary.minimum == 5.0
    assert summary.fraction_below_floor == pytest.approx(0.5)
    assert summary.counts.sum() == 4
    with pytest.raises(ValleyMapError, match="No finite samples"):
        summarize_samples([np.nan])
