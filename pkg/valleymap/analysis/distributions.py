"""Rician and folded-Gaussian fits of valley-splitting samples."""

import math
from typing import Dict, NamedTuple, Sequence, Tuple

import numpy as np
import structlog
from scipy import special

from ..fitting import mle_fit
from ..models import DistributionFit, ErrorCode, FoldedGaussianParams, RicianParams, ValleyMapError

logger = structlog.get_logger(__name__)

SIGMA_FLOOR = 1e-6
RESOLVABLE_FLOOR = 12.0  # µeV

# Histogram fits of the shuttling-based (CS) and magnetospectroscopy-based (MS) surveys,
# value and 1σ per parameter.
REFERENCE_DISTRIBUTIONS: Dict[str, Dict[str, Dict[str, Tuple[float, float]]]] = {
    "shuttling": {
        "rician": {"gamma": (35.4, 0.6), "sigma": (13.6, 0.4)},
        "folded_gaussian": {"mu": (38.1, 0.5), "sigma_tilde": (13.0, 0.3)},
    },
    "magnetospectroscopy": {
        "rician": {"gamma": (29.6, 5.9), "sigma": (14.2, 3.6)},
        "folded_gaussian": {"mu": (33.2, 2.3), "sigma_tilde": (13.1, 1.8)},
    },
}


class SampleSummary(NamedTuple):
    """Descriptive statistics of a valley-splitting sample."""

    count: int
    mean: float
    median: float
    minimum: float
    fraction_below_floor: float
    counts: np.ndarray
    edges: np.ndarray


def rician_logpdf(x: np.ndarray, gamma: float, sigma: float) -> np.ndarray:
    """log f(x | γ, σ) of the Rician law, using log I0(z) = log(i0e(z)) + z."""
    x = np.asarray(x, dtype=float)
    s2 = sigma * sigma
    z = x * gamma / s2
    with np.errstate(divide="ignore"):
        return np.log(x / s2) - (x * x + gamma * gamma) / (2 * s2) + np.log(special.i0e(z)) + z


def folded_gaussian_logpdf(x: np.ndarray, mu: float, sigma_tilde: float) -> np.ndarray:
    """log of the sum of two Gaussians mirrored about zero, for x ≥ 0."""
    x = np.asarray(x, dtype=float)
    s2 = sigma_tilde * sigma_tilde
    return np.logaddexp(-((x - mu) ** 2) / (2 * s2), -((x + mu) ** 2) / (2 * s2)) - 0.5 * np.log(2 * np.pi * s2)


def _samples(samples: Sequence[float], strictly_positive: bool) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "No samples to fit")
    if not np.all(np.isfinite(x)):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Samples must be finite")
    bad = x <= 0 if strictly_positive else x < 0
    if np.any(bad):
        raise ValleyMapError(
            ErrorCode.INVALID_INPUT,
            "Samples must be positive" if strictly_positive else "Samples must be non-negative",
            {"offending": int(bad.sum())},
        )
    return x


def fit_rician(samples: Sequence[float]) -> DistributionFit:
    """Maximum-likelihood Rician fit; γ is bounded at zero."""
    x = _samples(samples, strictly_positive=True)
    mean, var = float(x.mean()), float(x.var())
    gamma0 = math.sqrt(max(mean * mean - var, 0.0))
    sigma0 = math.sqrt(max(float(np.mean(x * x)) - gamma0 * gamma0, SIGMA_FLOOR) / 2)
    report = mle_fit(
        lambda data, theta: rician_logpdf(data, theta[0], theta[1]),
        x,
        initial=[gamma0, sigma0],
        lower=[0.0, SIGMA_FLOOR],
        upper=[np.inf, np.inf],
        names=["gamma", "sigma"],
        support=(0.0, np.inf),
    )
    params = RicianParams(gamma=report.value("gamma"), sigma=report.value("sigma"))
    logger.info("Rician fitted", gamma=params.gamma, sigma=params.sigma, samples=int(x.size))
    return DistributionFit(family="rician", params=params, report=report)


def fit_folded_gaussian(samples: Sequence[float]) -> DistributionFit:
    """Maximum-likelihood folded-Gaussian fit; µ is bounded at zero."""
    x = _samples(samples, strictly_positive=False)
    report = mle_fit(
        lambda data, theta: folded_gaussian_logpdf(data, theta[0], theta[1]),
        x,
        initial=[float(x.mean()), max(float(x.std()), SIGMA_FLOOR)],
        lower=[0.0, SIGMA_FLOOR],
        upper=[np.inf, np.inf],
        names=["mu", "sigma_tilde"],
        support=(0.0, np.inf),
    )
    params = FoldedGaussianParams(mu=report.value("mu"), sigma_tilde=report.value("sigma_tilde"))
    logger.info("Folded Gaussian fitted", mu=params.mu, sigma_tilde=params.sigma_tilde, samples=int(x.size))
    return DistributionFit(family="folded_gaussian", params=params, report=report)


def compare_to_reference(fit: DistributionFit, survey: str = "shuttling") -> Dict[str, float]:
    """z-distance of each fitted parameter from a reference survey."""
    if survey not in REFERENCE_DISTRIBUTIONS:
        raise ValleyMapError(
            ErrorCode.INVALID_INPUT,
            f"Unknown reference survey '{survey}'",
            {"surveys": sorted(REFERENCE_DISTRIBUTIONS)},
        )
    reference = REFERENCE_DISTRIBUTIONS[survey][fit.family]
    scores = {}
    for name, (value, sigma) in reference.items():
        spread = math.hypot(sigma, fit.report.sigma(name))
        scores[name] = (fit.report.value(name) - value) / spread
    return scores


def summarize_samples(samples: Sequence[float], floor: float = RESOLVABLE_FLOOR, bins: int = 20) -> SampleSummary:
    """Mean, median, minimum, share below ``floor`` and a histogram."""
    x = np.asarray(samples, dtype=float).ravel()
    x = x[np.isfinite(x)]
    if x.size == 0:
        raise ValleyMapError(ErrorCode.NO_RESULT, "No finite samples to summarize")
    counts, edges = np.histogram(x, bins=bins)
    return SampleSummary(
        count=int(x.size),
        mean=float(x.mean()),
        median=float(np.median(x)),
        minimum=float(x.min()),
        fraction_below_floor=float(np.mean(x < floor)),
        counts=counts,
        edges=edges,
    )
