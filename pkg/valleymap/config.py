"""Configuration management for valleymap runs."""

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator, model_validator

from .models import (
    LandscapeSpec,
    NoiseConfig,
    ShuttleWaveform,
    SpinValleyParams,
    StageTimeline,
)
from .physics import REFERENCE_DQD_PARAMS

NS = 1e-9
VALID_LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


class Settings(BaseModel):
    """Process-wide settings taken from the environment."""

    output_root: str = Field("./runs", description="Default parent directory for run outputs")
    log_level: str = Field("INFO", description="Log level")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level."""
        if v.upper() not in VALID_LOG_LEVELS:
            raise ValueError(f"Log level must be one of {VALID_LOG_LEVELS}")
        return v.upper()


def load_settings(env_file: Optional[str] = None) -> Settings:
    """Load settings from environment variables and a .env file."""
    if env_file:
        load_dotenv(env_file)
    else:
        # Try to find .env file in current directory or parent directories
        current_dir = Path.cwd()
        for parent in [current_dir] + list(current_dir.parents):
            env_path = parent / ".env"
            if env_path.exists():
                load_dotenv(env_path)
                break

    return Settings(
        output_root=os.getenv("VALLEYMAP_OUTPUT_ROOT", "./runs"),
        log_level=os.getenv("LOG_LEVEL", "INFO"),
    )


class TimelineConfig(BaseModel):
    """Fixed stage durations in nanoseconds."""

    init_ns: float = Field(1e6, description="I: load")
    separate_ns: float = Field(30.0, description="S: separation dwell")
    tunnel_ns: float = Field(10.0, description="T: tunnel dwell")
    wait_ns: float = Field(300.0, description="WAIT_D: wait at the target")
    return_tunnel_ns: float = Field(10.0, description="T2: return tunnel dwell")
    return_separate_ns: float = Field(30.0, description="S2: return separation dwell")
    psb_ns: float = Field(500.0, description="P: Pauli spin blockade")
    readout_ns: float = Field(1e6, description="F: readout")
    max_shuttle_ns: float = Field(120.0, description="Upper bound of the outbound shuttle")

    def to_timeline(self) -> StageTimeline:
        return StageTimeline(
            init=self.init_ns * NS,
            separate=self.separate_ns * NS,
            tunnel=self.tunnel_ns * NS,
            wait=self.wait_ns * NS,
            return_tunnel=self.return_tunnel_ns * NS,
            return_separate=self.return_separate_ns * NS,
            psb=self.psb_ns * NS,
            readout=self.readout_ns * NS,
            max_shuttle=self.max_shuttle_ns * NS,
        )


class AxisConfig(BaseModel):
    """Evenly spaced axis."""

    start: float
    stop: float
    points: int = Field(..., description="Number of samples, including both ends")

    @model_validator(mode="after")
    def validate_axis(self) -> "AxisConfig":
        if self.points < 2 or not self.stop > self.start:
            raise ValueError("an axis needs at least two points and stop > start")
        return self

    def values(self) -> List[float]:
        step = (self.stop - self.start) / (self.points - 1)
        return [self.start + k * step for k in range(self.points)]


class SimulateConfig(BaseModel):
    """Forward simulation grid."""

    mode: str = Field("shuttle", description="shuttle, dqd or tau")
    d: AxisConfig = Field(default_factory=lambda: AxisConfig(start=0.0, stop=208.6, points=150))
    B: AxisConfig = Field(default_factory=lambda: AxisConfig(start=0.2, stop=0.62, points=80))
    tau_ns: AxisConfig = Field(
        default_factory=lambda: AxisConfig(start=0.0, stop=200.0, points=101),
        description="Separation times for dqd scans",
    )
    tau_w_ns: List[float] = Field(default_factory=lambda: [0.0, 50.0, 100.0], description="Waits for tau scans")
    y_offsets: List[float] = Field(default_factory=lambda: [0.0], description="Trace offsets across the channel, nm")
    max_step_ns: float = Field(1.0, description="Quadrature step while shuttling")

    @field_validator("mode")
    @classmethod
    def validate_mode(cls, v: str) -> str:
        if v not in ("shuttle", "dqd", "tau"):
            raise ValueError("mode must be shuttle, dqd or tau")
        return v

    @field_validator("y_offsets")
    @classmethod
    def validate_offsets(cls, v: List[float]) -> List[float]:
        if not v or len(set(v)) != len(v):
            raise ValueError("y_offsets must be non-empty and distinct")
        return v


class ExtractConfig(BaseModel):
    """Ridge extraction, resampling and statistics options."""

    band_halfwidth: float = Field(0.03, description="Ridge search band, T")
    threshold: float = Field(3.0, description="Contrast threshold in noise units")
    background_sigma: float = Field(0.04, description="High-pass width along B, T")
    smoothing: float = Field(0.006, description="Contrast smoothing along B, T")
    refine_halfwidth: float = Field(0.02, description="Centroid window, T")
    g: float = Field(2.0, description="g-factor converting B to E_VS")
    resample_pitch: float = Field(1.4, description="nm")
    spline: str = Field("pchip", description="pchip, cubic or akima")
    y_pitch: float = Field(1.4, description="nm")
    bin_width: float = Field(1.4, description="Correlation bin width, nm")
    correlation_mode: str = Field("geometric")
    min_pairs: int = Field(10)
    D_max: float = Field(28.0, description="Fit range of the correlation model, nm")
    reference_survey: str = Field("shuttling")


class FitConfig(BaseModel):
    """Anticrossing-spectrum fit options."""

    max_iterations: int = Field(300)
    g_base: float = Field(2.0)
    use_uncertainties: bool = Field(True, description="Weight by nu_sigma when the table has it")


class TriangulationConfig(BaseModel):
    """Synthetic survey of dot positions triangulated from cross-capacitance ratios."""

    enabled: bool = True
    positions: int = Field(34, description="Number of dot positions")
    grid: AxisConfig = Field(default_factory=lambda: AxisConfig(start=-60.0, stop=60.0, points=121))
    delta_V: float = Field(5e-3, description="Gate voltage step, V")
    x0: float = Field(18.0, description="Mean planted x, nm")
    y0: float = Field(-11.0, description="Planted y at zero voltage difference, nm")
    slope_nm_per_V: float = Field(60.0, description="Planted y displacement per screening-gate voltage")
    voltage_span: float = Field(0.2, description="Half range of V_ST − V_SB, V")
    ratio_noise: float = Field(0.02, description="Standard deviation added to the ratios")
    sigma_SB_ST: float = Field(0.10)
    sigma_LB_RB: float = Field(0.08)


class MagnetospecConfig(BaseModel):
    """Magnetospectroscopy benchmark options and synthetic scan recipe."""

    scan_01_path: Optional[str] = Field(None, description="CSV scan of the 01 transition")
    scan_12_path: Optional[str] = Field(None, description="CSV scan of the 12 transition")
    alpha: Optional[float] = Field(0.1, description="Lever arm, eV/V")
    temperature: Optional[float] = Field(0.1, description="Electron temperature, K")
    E_ST: float = Field(50.0, description="Singlet-triplet splitting of synthetic scans, µeV")
    V0: float = Field(0.0, description="V")
    refit_01: bool = Field(True, description="Fit alpha and T from the 01 transition")
    subtract_noise: bool = True
    transition_width_V: float = Field(1e-4, description="Transition extent for the median kernel, V")
    threshold: float = Field(5.0)
    E_VS: Optional[float] = Field(None, description="Valley splitting for the E_ST/E_VS annotation, µeV")
    B: AxisConfig = Field(default_factory=lambda: AxisConfig(start=0.0, stop=1.0, points=201))
    V_step: float = Field(5e-6, description="V")
    V_margin: float = Field(5e-4, description="Scan margin around the transition, V")
    fwhm_V: float = Field(1e-4, description="Synthetic transition width, V")
    sensor_noise: float = Field(2e-3, description="Sensor white noise, step units")
    common_sigma: float = Field(50e-6, description="V")
    drift_amplitude: float = Field(50e-6, description="V")
    drift_period: float = Field(0.2, description="T")
    independent_sigma: float = Field(5e-6, description="V")
    triangulation: TriangulationConfig = Field(default_factory=TriangulationConfig)


def _default_dqd() -> SpinValleyParams:
    return REFERENCE_DQD_PARAMS


class RunConfig(BaseModel):
    """Single JSON document describing one run."""

    command: Optional[str] = None
    seed: Optional[int] = Field(None, description="Global seed for all stochastic steps")
    output_dir: Optional[str] = None
    landscape_path: Optional[str] = Field(None, description="Landscape JSON for simulation or ground truth")
    map_paths: List[str] = Field(default_factory=list, description="Probability maps for extraction")
    nu_path: Optional[str] = Field(None, description="nu(B) table for fit-anticrossing")
    landscape: LandscapeSpec = Field(default_factory=LandscapeSpec)
    dqd: SpinValleyParams = Field(default_factory=_default_dqd)
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    timeline: TimelineConfig = Field(default_factory=TimelineConfig)
    waveform: ShuttleWaveform = Field(default_factory=ShuttleWaveform)
    simulate: SimulateConfig = Field(default_factory=SimulateConfig)
    extract: ExtractConfig = Field(default_factory=ExtractConfig)
    fit: FitConfig = Field(default_factory=FitConfig)
    magnetospec: MagnetospecConfig = Field(default_factory=MagnetospecConfig)

    def seeded_noise(self) -> NoiseConfig:
        """Noise settings with the run seed filled in."""
        if self.noise.seed is not None or self.seed is None:
            return self.noise
        return self.noise.model_copy(update={"seed": self.seed})

    def echo(self) -> Dict[str, Any]:
        """JSON-ready copy of the configuration for manifests."""
        return self.model_dump(mode="json", by_alias=True)


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(document: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Set ``a.b.c=VALUE`` entries in a nested dict; values are parsed as JSON when possible."""
    for override in overrides:
        key, sep, raw = override.partition("=")
        if not sep or not key:
            raise ValueError(f"Override '{override}' is not of the form KEY=VALUE")
        path = key.strip().split(".")
        node = document
        for part in path[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ValueError(f"Override '{override}' descends into a non-object key '{part}'")
            node = child
        node[path[-1]] = _parse_value(raw)
    return document


def load_run_config(path: Optional[str] = None, overrides: Sequence[str] = ()) -> RunConfig:
    """Read a run configuration file, apply overrides and validate."""
    document: Dict[str, Any] = {}
    if path:
        with open(path, encoding="utf-8") as handle:
            document = json.load(handle)
        if not isinstance(document, dict):
            raise ValueError("Run configuration must be a JSON object")
    return RunConfig.model_validate(apply_overrides(document, overrides))

