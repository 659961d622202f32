"""Four-level spin-valley Hamiltonian, its spectrum and the ST0 precession frequency.

Basis order: |↑↓+−⟩, |↓↑+−⟩, |↓↓++⟩, |↓↓−−⟩. The {0,3} block couples the
antiparallel state to the left-dot valley excitation, the {1,2} block to the
right-dot one.
"""

import math
from typing import Tuple, Union

import numpy as np

from .models import ErrorCode, PhysConstants, SpinValleyParams, ValleyMapError

CONSTANTS = PhysConstants()

# Anticrossing fit of the y = 0 trace
REFERENCE_DQD_PARAMS = SpinValleyParams(
    delta_g=6.58e-4, E_l=66.64, E_r=53.52, v_l=0.058, v_r=0.082, g_base=2.0
)
# Same fit for the trace shifted to y = -6 nm
REFERENCE_DQD_PARAMS_Y_MINUS_6 = SpinValleyParams(
    delta_g=6.46e-4, E_l=66.74, E_r=50.74, v_l=0.068, v_r=0.031, g_base=2.0
)

ArrayLike = Union[float, np.ndarray]


def _check_field(B: ArrayLike) -> np.ndarray:
    field = np.asarray(B, dtype=float)
    if np.any(~np.isfinite(field)) or np.any(field < 0):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Magnetic field must be finite and non-negative")
    return field


def hamiltonian_stack(
    delta_g: ArrayLike,
    E_l: ArrayLike,
    E_r: ArrayLike,
    v_l: ArrayLike,
    v_r: ArrayLike,
    g_base: ArrayLike,
    B: ArrayLike,
    constants: PhysConstants = CONSTANTS,
) -> np.ndarray:
    """Broadcast the Hamiltonian over array arguments, shape (..., 4, 4), µeV."""
    field = _check_field(B)
    dEz = np.asarray(delta_g) * constants.mu_B * field
    Ez = np.asarray(g_base) * constants.mu_B * field
    shape = np.broadcast(dEz, Ez, np.asarray(E_l), np.asarray(E_r), np.asarray(v_l), np.asarray(v_r)).shape
    H = np.zeros(shape + (4, 4))
    H[..., 0, 0] = -dEz / 2
    H[..., 1, 1] = dEz / 2
    H[..., 2, 2] = np.asarray(E_r) - Ez
    H[..., 3, 3] = np.asarray(E_l) - Ez
    H[..., 0, 3] = H[..., 3, 0] = v_l
    H[..., 1, 2] = H[..., 2, 1] = v_r
    return H


def build_hamiltonian(
    params: SpinValleyParams, B: float, constants: PhysConstants = CONSTANTS
) -> np.ndarray:
    """Spin-valley Hamiltonian at field B (T), µeV."""
    return hamiltonian_stack(
        params.delta_g, params.E_l, params.E_r, params.v_l, params.v_r,
        params.g_base, B, constants,
    )


def eigensystem(H: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (columns) of a symmetric 4×4 matrix."""
    H = np.asarray(H, dtype=float)
    if H.shape != (4, 4):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, f"Expected a 4x4 matrix, got {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Hamiltonian contains non-finite entries")
    asymmetry = float(np.max(np.abs(H - H.T)))
    if asymmetry > 1e-12:
        raise ValleyMapError(
            ErrorCode.INVALID_INPUT,
            "Hamiltonian is not symmetric",
            {"max_asymmetry": asymmetry},
        )
    return np.linalg.eigh(0.5 * (H + H.T))


def precession_frequency_array(
    delta_g: ArrayLike,
    E_l: ArrayLike,
    E_r: ArrayLike,
    v_l: ArrayLike,
    v_r: ArrayLike,
    g_base: ArrayLike,
    B: ArrayLike,
    constants: PhysConstants = CONSTANTS,
) -> np.ndarray:
    """Smallest level spacing over h for broadcast parameter arrays, Hz."""
    H = hamiltonian_stack(delta_g, E_l, E_r, v_l, v_r, g_base, B, constants)
    levels = np.linalg.eigvalsh(H)
    # eigvalsh sorts ascending, so the smallest pairwise gap is between neighbours
    gaps = np.diff(levels, axis=-1)
    return np.min(gaps, axis=-1) / constants.h


def precession_frequency(
    params: SpinValleyParams, B: ArrayLike, constants: PhysConstants = CONSTANTS
) -> ArrayLike:
    """ST0 precession frequency ν(B), Hz; vectorized over B."""
    nu = precession_frequency_array(
        params.delta_g, params.E_l, params.E_r, params.v_l, params.v_r,
        params.g_base, B, constants,
    )
    return float(nu) if np.ndim(nu) == 0 else nu


def anticrossing_center(E_VS: ArrayLike, g: float = 2.0, constants: PhysConstants = CONSTANTS) -> ArrayLike:
    """Field at which the Zeeman energy matches the valley splitting, B = E_VS/(g·µ_B)."""
    if g <= 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "g-factor must be positive")
    energy = np.asarray(E_VS, dtype=float)
    if np.any(energy < 0):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Valley splitting must be non-negative")
    field = energy / (g * constants.mu_B)
    return float(field) if field.ndim == 0 else field


def valley_splitting_from_field(B: ArrayLike, g: float = 2.0, constants: PhysConstants = CONSTANTS) -> ArrayLike:
    """Inverse of anticrossing_center, µeV."""
    energy = g * constants.mu_B * np.asarray(B, dtype=float)
    return float(energy) if energy.ndim == 0 else energy


def orbital_energy(a_dot: float, constants: PhysConstants = CONSTANTS) -> float:
    """Orbital energy ħ²/(m_t·a_dot²) for a dot of size a_dot (nm), eV."""
    if not a_dot > 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Dot size must be positive")
    hbar_joule = constants.hbar * constants.e
    mass = constants.m_t_ratio * constants.m_e
    return hbar_joule**2 / (mass * (a_dot * 1e-9) ** 2) / constants.e


def dot_size_from_orbital_energy(E_orb: float, constants: PhysConstants = CONSTANTS) -> float:
    """Dot size (nm) with orbital energy E_orb (eV)."""
    if not E_orb > 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Orbital energy must be positive")
    hbar_joule = constants.hbar * constants.e
    mass = constants.m_t_ratio * constants.m_e
    return math.sqrt(hbar_joule**2 / (mass * E_orb * constants.e)) * 1e9
