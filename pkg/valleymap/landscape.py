"""Spatially correlated valley-splitting landscapes.

Fields are drawn from a Gaussian random field whose covariance is the
Gaussian correlation exp(-D²/((4-π)·a_dot²)). The kernel is separable in x and
y, so the Cholesky factor of the full-grid covariance is the Kronecker product
of the per-axis factors and the field is L_x · Z · L_yᵀ.
"""

from typing import Callable, NamedTuple, Optional, Union

import numpy as np
import structlog
from scipy import linalg
from scipy.interpolate import RegularGridInterpolator

from .models import (
    CorrelationModel,
    ErrorCode,
    LandscapeSpec,
    RicianParams,
    ValleyLandscape,
    ValleyMapError,
    grid_points,
)

logger = structlog.get_logger(__name__)

MAX_GRID_CELLS = 100_000
BASE_JITTER = 1e-10
MAX_JITTER = 1e-6

ArrayLike = Union[float, np.ndarray]


class LocalValley(NamedTuple):
    """Landscape values at a query point."""

    E_VS: ArrayLike
    delta_g: ArrayLike
    v: ArrayLike


def gaussian_correlation(D: ArrayLike, model: CorrelationModel) -> ArrayLike:
    """Correlation coefficient exp(-D²/((4-π)·a_dot²)) at distance D (nm)."""
    distance = np.asarray(D, dtype=float)
    if np.any(distance < 0) or np.any(~np.isfinite(distance)):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Distance must be finite and non-negative")
    value = np.exp(-(distance**2) / ((4.0 - np.pi) * model.a_dot**2))
    return float(value) if value.ndim == 0 else value


def covariance_matrix(coords: np.ndarray, model: CorrelationModel) -> np.ndarray:
    """Correlation matrix of points given as (n,) or (n, k) coordinates."""
    points = np.asarray(coords, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    diff = points[:, None, :] - points[None, :, :]
    return gaussian_correlation(np.sqrt(np.sum(diff**2, axis=-1)), model)


def covariance_factor(coords: np.ndarray, model: CorrelationModel) -> np.ndarray:
    """Lower Cholesky factor of the correlation matrix, with escalating diagonal jitter."""
    cov = covariance_matrix(coords, model)
    n = cov.shape[0]
    jitter = BASE_JITTER
    while jitter <= MAX_JITTER:
        try:
            factor = linalg.cholesky(cov + jitter * np.eye(n), lower=True)
        except linalg.LinAlgError:
            logger.warning("Cholesky failed, increasing jitter", jitter=jitter, size=n)
            jitter *= 10
            continue
        return factor
    raise ValleyMapError(
        ErrorCode.NUMERICAL_FAILURE,
        "Covariance factorization failed",
        {"size": n, "max_jitter": MAX_JITTER},
    )


def _generator(seed: Optional[int], rng: Optional[np.random.Generator]) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(seed)


def synthesize_gaussian_field(
    x_extent: float,
    y_extent: float,
    pitch: float,
    model: CorrelationModel,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Standard-normal field on the grid, correlated per gaussian_correlation.

    Args:
        x_extent: Extent along x, nm.
        y_extent: Extent along y, nm.
        pitch: Grid pitch, nm.
        model: Correlation model.
        seed: Seed for a fresh generator; ignored when ``rng`` is given.
        rng: Generator to draw from.

    Returns:
        Array indexed [ix, iy].
    """
    if not pitch > 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Grid pitch must be positive")
    if x_extent < 0 or y_extent < 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Grid extents must be non-negative")
    nx, ny = grid_points(x_extent, pitch), grid_points(y_extent, pitch)
    if nx * ny > MAX_GRID_CELLS:
        raise ValleyMapError(
            ErrorCode.INVALID_INPUT,
            "Grid too large for dense covariance factorization",
            {"cells": nx * ny, "limit": MAX_GRID_CELLS},
        )
    generator = _generator(seed, rng)
    lx = covariance_factor(pitch * np.arange(nx), model)
    ly = covariance_factor(pitch * np.arange(ny), model)
    z = generator.standard_normal((nx, ny))
    return lx @ z @ ly.T


def sample_correlated_points(
    points: np.ndarray,
    model: CorrelationModel,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Standard-normal values at scattered (n, 2) points; coincident points share one value."""
    coords = np.atleast_2d(np.asarray(points, dtype=float))
    unique, inverse = np.unique(coords, axis=0, return_inverse=True)
    if unique.shape[0] > 5000:
        raise ValleyMapError(
            ErrorCode.INVALID_INPUT,
            "Too many scattered points for dense covariance factorization",
            {"points": int(unique.shape[0])},
        )
    factor = covariance_factor(unique, model)
    values = factor @ _generator(seed, rng).standard_normal(unique.shape[0])
    return values[np.ravel(inverse)]


def rician_field(field_x: np.ndarray, field_y: np.ndarray, params: RicianParams) -> np.ndarray:
    """Valley splitting sqrt((γ + σX)² + (σY)²) from two independent normal fields, µeV."""
    X = np.asarray(field_x, dtype=float)
    Y = np.asarray(field_y, dtype=float)
    if X.shape != Y.shape:
        raise ValleyMapError(
            ErrorCode.INVALID_INPUT,
            "Normal fields must have the same shape",
            {"x_shape": list(X.shape), "y_shape": list(Y.shape)},
        )
    return np.hypot(params.gamma + params.sigma * X, params.sigma * Y)


def synthesize_landscape(spec: LandscapeSpec, seed: int) -> ValleyLandscape:
    """Draw a landscape; each of the three fields uses its own spawned stream."""
    stream_x, stream_y, stream_g = (
        np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(3)
    )
    fields = [
        synthesize_gaussian_field(spec.x_extent, spec.y_extent, spec.pitch, spec.correlation, rng=stream)
        for stream in (stream_x, stream_y, stream_g)
    ]
    E_VS = rician_field(fields[0], fields[1], spec.rician)
    delta_g = spec.delta_g_mean + spec.delta_g_spread * fields[2]
    v = np.full_like(E_VS, spec.v_mean)

    logger.info(
        "Landscape synthesized",
        shape=list(E_VS.shape),
        seed=seed,
        E_VS_mean=float(E_VS.mean()),
        E_VS_min=float(E_VS.min()),
    )
    return ValleyLandscape(
        x_extent=spec.x_extent,
        y_extent=spec.y_extent,
        pitch=spec.pitch,
        x_origin=spec.x_origin,
        y_origin=spec.y_origin,
        E_VS_grid=E_VS,
        delta_g_grid=delta_g,
        v_grid=v,
        seed=seed,
        spec=spec,
    )


def profile_landscape(
    E_VS: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x_extent: float,
    y_extent: float,
    pitch: float = 1.4,
    x_origin: float = 0.0,
    y_origin: float = 0.0,
    delta_g: float = 6.58e-4,
    v: float = 0.08,
) -> ValleyLandscape:
    """Deterministic landscape from a closed-form E_VS(x, y) profile with uniform delta_g and v."""
    nx, ny = grid_points(x_extent, pitch), grid_points(y_extent, pitch)
    xx, yy = np.meshgrid(x_origin + pitch * np.arange(nx), y_origin + pitch * np.arange(ny), indexing="ij")
    grid = np.broadcast_to(np.asarray(E_VS(xx, yy), dtype=float), (nx, ny))
    return ValleyLandscape(
        x_extent=x_extent,
        y_extent=y_extent,
        pitch=pitch,
        x_origin=x_origin,
        y_origin=y_origin,
        E_VS_grid=grid,
        delta_g_grid=np.full((nx, ny), delta_g),
        v_grid=np.full((nx, ny), v),
    )


def _locate(values: np.ndarray, axis: np.ndarray, pitch: float, name: str) -> np.ndarray:
    tolerance = 1e-9 * pitch
    if np.any(values < axis[0] - tolerance) or np.any(values > axis[-1] + tolerance):
        raise ValleyMapError(
            ErrorCode.INVALID_INPUT,
            f"Query {name} outside the landscape",
            {"range": [float(axis[0]), float(axis[-1])]},
        )
    return np.clip(values, axis[0], axis[-1])


def sample_at(landscape: ValleyLandscape, x: ArrayLike, y: ArrayLike) -> LocalValley:
    """Bilinear interpolation of the three landscape fields at (x, y), nm.

    Scalars in, scalars out; arrays broadcast.
    """
    xs, ys = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    scalar = xs.ndim == 0
    xs = _locate(np.atleast_1d(xs), landscape.x_axis, landscape.pitch, "x")
    ys = _locate(np.atleast_1d(ys), landscape.y_axis, landscape.pitch, "y")

    # Axes with a single node carry no interpolation dimension
    axes, coords, keep = [], [], []
    for axis, values in ((landscape.x_axis, xs), (landscape.y_axis, ys)):
        if axis.size > 1:
            axes.append(axis)
            coords.append(values)
            keep.append(slice(None))
        else:
            keep.append(0)

    results = []
    for grid in (landscape.E_VS_grid, landscape.delta_g_grid, landscape.v_grid):
        reduced = grid[tuple(keep)]
        if axes:
            interpolator = RegularGridInterpolator(tuple(axes), reduced, method="linear")
            values = interpolator(np.stack(coords, axis=-1))
        else:
            values = np.full(xs.shape, float(reduced))
        results.append(float(values[0]) if scalar else values)
    return LocalValley(*results)
