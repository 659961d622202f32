"""Conveyor waveform, nominal electron position and the shuttle pulse timeline."""

import math
from typing import List, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from .models import ErrorCode, ShuttleWaveform, Stage, StageName, StageTimeline, ValleyMapError

ArrayLike = Union[float, np.ndarray]

MOVING_STAGES = (StageName.SHUTTLE_OUT, StageName.SHUTTLE_BACK)


def waveform_voltage(w: ShuttleWaveform, i: int, tau_S: ArrayLike) -> ArrayLike:
    """Voltage U_i·sin(2π·f·τ_S + φ_i) + C_i on gate i (1..4), V."""
    if i not in (1, 2, 3, 4):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, f"Gate index must be 1..4, got {i}")
    k = i - 1
    value = w.amplitudes[k] * np.sin(2 * np.pi * w.frequency * np.asarray(tau_S, dtype=float) + w.phases[k]) + w.offsets[k]
    return float(value) if np.ndim(value) == 0 else value


def nominal_position(tau_S: ArrayLike, w: ShuttleWaveform) -> ArrayLike:
    """Nominal shuttle distance λ·f·τ_S, nm."""
    t = np.asarray(tau_S, dtype=float)
    if np.any(t < 0):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Shuttle time must be non-negative")
    d = w.wavelength * (w.frequency * t)
    return float(d) if d.ndim == 0 else d


def shuttle_duration(target_d: float, w: ShuttleWaveform) -> float:
    """Time to cover target_d at the nominal velocity, s."""
    if target_d < 0:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Shuttle distance must be non-negative")
    return target_d / w.velocity


class Trajectory(BaseModel):
    """Piecewise-linear electron position over the full pulse sequence; t = 0 at the start of I."""

    target_d: float = Field(..., description="Shuttle distance, nm")
    velocity: float = Field(..., description="Shuttle velocity, nm/s")
    stages: List[Stage] = Field(..., description="Stage sequence")
    starts: List[float] = Field(..., description="Start time of each stage, s")

    model_config = {"frozen": True}

    @property
    def shuttle_duration(self) -> float:
        return self.target_d / self.velocity

    @property
    def total_duration(self) -> float:
        return self.starts[-1] + self.stages[-1].duration

    @property
    def separated_time(self) -> float:
        """Total time with the electron pair separated, s."""
        return math.fsum(stage.duration for stage in self.stages if stage.separated)

    def _stage_start(self, name: StageName) -> float:
        for stage, start in zip(self.stages, self.starts):
            if stage.name == name:
                return start
        raise KeyError(name)

    def position(self, t: ArrayLike) -> ArrayLike:
        """Electron position at time t, nm."""
        times = np.asarray(t, dtype=float)
        d = np.zeros_like(times)
        if self.target_d > 0:
            t_out = self._stage_start(StageName.SHUTTLE_OUT)
            t_back = self._stage_start(StageName.SHUTTLE_BACK)
            t_end = t_back + self.shuttle_duration
            outbound = np.clip((times - t_out) * self.velocity, 0.0, self.target_d)
            inbound = np.clip((t_end - times) * self.velocity, 0.0, self.target_d)
            d = np.where(times < t_back, outbound, inbound)
        return float(d) if d.ndim == 0 else d

    def quadrature_nodes(self, max_step: float = 1e-9) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Midpoint nodes over the separated stages.

        Stages at constant position get a single node; moving stages are split
        into ceil(duration/max_step) equal sub-intervals.

        Returns:
            (times, positions, weights) with weights summing to separated_time.
        """
        if not max_step > 0:
            raise ValleyMapError(ErrorCode.INVALID_INPUT, "Quadrature step must be positive")
        times: List[np.ndarray] = []
        weights: List[np.ndarray] = []
        for stage, start in zip(self.stages, self.starts):
            if not stage.separated:
                continue
            n = math.ceil(stage.duration / max_step - 1e-9) if stage.name in MOVING_STAGES else 1
            width = stage.duration / n
            times.append(start + width * (np.arange(n) + 0.5))
            weights.append(np.full(n, width))
        t = np.concatenate(times)
        return t, np.asarray(self.position(t), dtype=float), np.concatenate(weights)


def trajectory(timeline: StageTimeline, w: ShuttleWaveform, target_d: float) -> Trajectory:
    """Build the position-versus-time profile for a shuttle to target_d and back."""
    duration = shuttle_duration(target_d, w)
    if duration > timeline.max_shuttle * (1 + 1e-12):
        raise ValleyMapError(
            ErrorCode.INVALID_INPUT,
            "Shuttle distance exceeds the longest allowed shuttle stage",
            {"target_d": target_d, "max_d": w.velocity * timeline.max_shuttle},
        )
    stages = timeline.stages(duration)
    starts = np.concatenate([[0.0], np.cumsum([stage.duration for stage in stages])[:-1]])
    return Trajectory(target_d=target_d, velocity=w.velocity, stages=stages, starts=starts.tolist())
