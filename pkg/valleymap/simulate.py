"""Forward model of the singlet return probability for DQD and shuttle experiments."""

from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from .landscape import sample_at
from .models import (
    ErrorCode,
    NoiseConfig,
    ProbabilityMap,
    ShuttleWaveform,
    SpinValleyParams,
    StageTimeline,
    ValleyLandscape,
    ValleyMapError,
)
from .physics import REFERENCE_DQD_PARAMS, precession_frequency, precession_frequency_array
from .pulses import Trajectory, trajectory

logger = structlog.get_logger(__name__)

ArrayLike = Union[float, np.ndarray]

DEFAULT_MAX_STEP = 1e-9


class PhaseResult(NamedTuple):
    """Accumulated phase (per field value) and the time it was accumulated over."""

    phase: ArrayLike
    separated_time: float


def singlet_probability(phase: ArrayLike, t_sep: ArrayLike, noise: NoiseConfig) -> ArrayLike:
    """P_S = c + a·exp(-(t_sep/T2*)²)·cos(phase)."""
    t = np.asarray(t_sep, dtype=float)
    if np.any(t < 0):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Separation time must be non-negative")
    p = noise.offset + noise.visibility * np.exp(-((t / noise.T2_star) ** 2)) * np.cos(phase)
    return float(p) if np.ndim(p) == 0 else p


def _axis(values: Sequence[float], name: str) -> np.ndarray:
    axis = np.asarray(values, dtype=float)
    if axis.ndim != 1 or axis.size == 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, f"{name} grid must be a non-empty 1D sequence")
    if np.any(np.diff(axis) <= 0):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, f"{name} grid must be strictly increasing")
    return axis


def apply_shot_noise(P: np.ndarray, noise: NoiseConfig, prefix: Tuple[int, ...] = ()) -> np.ndarray:
    """Replace each probability by a binomial estimate from noise.shots draws.

    Each cell draws from its own generator seeded by (seed, *prefix, i, j), so the
    result does not depend on evaluation order.
    """
    if noise.shots is None:
        return P
    if noise.seed is None:
        base = np.random.SeedSequence().entropy
        logger.debug("Shot noise drawn without a seed", entropy=str(base))
    else:
        base = noise.seed
    clipped = np.clip(P, 0.0, 1.0)
    noisy = np.empty_like(clipped)
    for index in np.ndindex(clipped.shape):
        generator = np.random.default_rng(np.random.SeedSequence([base, *prefix, *index]))
        noisy[index] = generator.binomial(noise.shots, clipped[index]) / noise.shots
    return noisy


def simulate_dqd_scan(
    params: SpinValleyParams,
    B: Sequence[float],
    tau: Sequence[float],
    noise: NoiseConfig,
) -> ProbabilityMap:
    """P_S(τ_DQD, B) for a static double dot."""
    fields = _axis(B, "B")
    times = _axis(tau, "tau")
    if times[0] < 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Evolution times must be non-negative")
    nu = np.atleast_1d(precession_frequency(params, fields))
    phase = 2 * np.pi * times[:, None] * nu[None, :]
    P = singlet_probability(phase, np.broadcast_to(times[:, None], phase.shape), noise)
    P = apply_shot_noise(np.asarray(P), noise)
    logger.info("DQD scan simulated", n_tau=times.size, n_B=fields.size, shots=noise.shots)
    return ProbabilityMap(
        axis1_name="tau",
        axis1_unit="s",
        axis1=times,
        axis2=fields,
        P=P,
        attributes={"kind": "dqd", "params": params.model_dump(), "noise": noise.model_dump()},
    )


def accumulate_phase(
    landscape: ValleyLandscape,
    traj: Trajectory,
    B: ArrayLike,
    y_offset: float,
    static: SpinValleyParams = REFERENCE_DQD_PARAMS,
    max_step: float = DEFAULT_MAX_STEP,
) -> PhaseResult:
    """Phase 2π·∫ν_local dt over the separated stages, for one or many fields.

    The moving dot takes (E_r, delta_g, v_r) from the landscape at its current
    position; the static dot keeps (E_l, v_l) from ``static``.
    """
    _, positions, weights = traj.quadrature_nodes(max_step)
    local = sample_at(landscape, positions, np.full_like(positions, y_offset))
    fields = np.atleast_1d(np.asarray(B, dtype=float))
    nu = precession_frequency_array(
        np.asarray(local.delta_g)[None, :],
        static.E_l,
        np.asarray(local.E_VS)[None, :],
        static.v_l,
        np.asarray(local.v)[None, :],
        static.g_base,
        fields[:, None],
    )
    phase = 2 * np.pi * (nu @ weights)
    return PhaseResult(
        phase=float(phase[0]) if np.ndim(B) == 0 else phase,
        separated_time=traj.separated_time,
    )


def _check_extent(landscape: ValleyLandscape, distances: np.ndarray, y_offset: float) -> None:
    x_axis, y_axis = landscape.x_axis, landscape.y_axis
    slack = 1e-9 * landscape.pitch
    if min(0.0, distances[0]) < x_axis[0] - slack or distances[-1] > x_axis[-1] + slack:
        raise ValleyMapError(
            ErrorCode.INVALID_INPUT,
            "Shuttle distances exceed the landscape",
            {"d_max": float(distances[-1]), "x_range": [float(x_axis[0]), float(x_axis[-1])]},
        )
    if not y_axis[0] - slack <= y_offset <= y_axis[-1] + slack:
        raise ValleyMapError(
            ErrorCode.INVALID_INPUT,
            "Lateral offset outside the landscape",
            {"y_offset": y_offset, "y_range": [float(y_axis[0]), float(y_axis[-1])]},
        )


def simulate_shuttle_map(
    landscape: ValleyLandscape,
    d: Sequence[float],
    B: Sequence[float],
    timeline: StageTimeline,
    noise: NoiseConfig,
    y_offset: float = 0.0,
    static: SpinValleyParams = REFERENCE_DQD_PARAMS,
    waveform: Optional[ShuttleWaveform] = None,
    max_step: float = DEFAULT_MAX_STEP,
) -> ProbabilityMap:
    """P_S(d, B) after shuttling to d, waiting and shuttling back."""
    w = waveform or ShuttleWaveform()
    distances = _axis(d, "d")
    fields = _axis(B, "B")
    if distances[0] < 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Shuttle distances must be non-negative")
    _check_extent(landscape, distances, y_offset)

    P = np.empty((distances.size, fields.size))
    for i, target in enumerate(distances):
        traj = trajectory(timeline, w, float(target))
        result = accumulate_phase(landscape, traj, fields, y_offset, static, max_step)
        P[i] = singlet_probability(result.phase, result.separated_time, noise)
    P = apply_shot_noise(P, noise)

    logger.info(
        "Shuttle map simulated",
        n_d=distances.size,
        n_B=fields.size,
        y_offset=y_offset,
        shots=noise.shots,
    )
    return ProbabilityMap(
        axis1_name="d",
        axis1_unit="nm",
        axis1=distances,
        axis2=fields,
        P=P,
        attributes={
            "kind": "shuttle",
            "y_offset": y_offset,
            "static": static.model_dump(),
            "noise": noise.model_dump(),
            "timeline": timeline.model_dump(),
        },
    )


def simulate_tau_resolved(
    landscape: ValleyLandscape,
    d: Sequence[float],
    tau_w: Sequence[float],
    B: Sequence[float],
    timeline: StageTimeline,
    noise: NoiseConfig,
    y_offset: float = 0.0,
    static: SpinValleyParams = REFERENCE_DQD_PARAMS,
    waveform: Optional[ShuttleWaveform] = None,
    max_step: float = DEFAULT_MAX_STEP,
) -> List[ProbabilityMap]:
    """One P_S(τ_w, B) map per shuttle distance, with the wait time varied.

    The phase is φ_fixed + 2π·ν_wait·τ_w, where φ_fixed collects every separated
    stage except the wait and ν_wait is the local frequency at the target.
    """
    w = waveform or ShuttleWaveform()
    distances = np.asarray(d, dtype=float)
    waits = _axis(tau_w, "tau_w")
    fields = _axis(B, "B")
    if waits[0] < 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Wait times must be non-negative")
    if distances.ndim != 1 or distances.size == 0 or np.any(distances < 0):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Shuttle distances must be a non-empty list of non-negative values")
    _check_extent(landscape, np.sort(distances), y_offset)

    maps: List[ProbabilityMap] = []
    for k, target in enumerate(distances):
        traj = trajectory(timeline, w, float(target))
        reference = accumulate_phase(landscape, traj, fields, y_offset, static, max_step)
        local = sample_at(landscape, float(target), y_offset)
        nu_wait = precession_frequency_array(
            local.delta_g, static.E_l, local.E_VS, static.v_l, local.v, static.g_base, fields
        )
        phi_fixed = np.asarray(reference.phase) - 2 * np.pi * nu_wait * timeline.wait
        t_fixed = reference.separated_time - timeline.wait
        phase = phi_fixed[None, :] + 2 * np.pi * waits[:, None] * nu_wait[None, :]
        t_sep = np.broadcast_to((t_fixed + waits)[:, None], phase.shape)
        P = apply_shot_noise(np.asarray(singlet_probability(phase, t_sep, noise)), noise, (k,))
        maps.append(
            ProbabilityMap(
                axis1_name="tau_w",
                axis1_unit="s",
                axis1=waits,
                axis2=fields,
                P=P,
                attributes={"kind": "tau_resolved", "d": float(target), "y_offset": y_offset},
            )
        )
    logger.info("Wait-resolved maps simulated", n_maps=len(maps), n_tau=waits.size, n_B=fields.size)
    return maps
