"""Inverse pipeline: oscillation and spectrum fits, ridge extraction, resampling, statistics."""

from .correlation import binned_correlation, fit_correlation_model
from .distributions import (
    REFERENCE_DISTRIBUTIONS,
    compare_to_reference,
    fit_folded_gaussian,
    fit_rician,
    summarize_samples,
)
from .oscillation import extract_frequencies, fit_oscillation
from .resample import assemble_2d_map, resample_spline
from .ridge import extract_ridge, ridge_error
from .spectrum import fit_anticrossing_spectrum

__all__ = [
    "REFERENCE_DISTRIBUTIONS",
    "assemble_2d_map",
    "binned_correlation",
    "compare_to_reference",
    "extract_frequencies",
    "extract_ridge",
    "fit_anticrossing_spectrum",
    "fit_correlation_model",
    "fit_folded_gaussian",
    "fit_oscillation",
    "fit_rician",
    "resample_spline",
    "ridge_error",
    "summarize_samples",
]
