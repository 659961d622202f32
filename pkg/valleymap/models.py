"""Data models for valley-splitting simulation, fitting and benchmarking."""

import math
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy import constants as sc

ARRAY_MODEL_CONFIG = {"arbitrary_types_allowed": True, "frozen": True}


def _frozen_array(value: Any) -> np.ndarray:
    """Copy a sequence into a read-only float array."""
    arr = np.array(value, dtype=float)
    arr.setflags(write=False)
    return arr


def _strictly_increasing(axis: np.ndarray) -> bool:
    return axis.ndim == 1 and bool(np.all(np.diff(axis) > 0))


class ErrorCode(str, Enum):
    """Error categories, each mapped to a CLI exit code."""
    INVALID_INPUT = "INVALID_INPUT"
    NO_RESULT = "NO_RESULT"
    NUMERICAL_FAILURE = "NUMERICAL_FAILURE"


EXIT_CODES: Dict[str, int] = {
    ErrorCode.INVALID_INPUT.value: 2,
    ErrorCode.NO_RESULT.value: 3,
    ErrorCode.NUMERICAL_FAILURE.value: 4,
}


class ValleyMapError(Exception):
    """Domain error carrying a code, a message and optional details."""

    def __init__(self, code: str, message: str, details: Optional[Dict[str, Any]] = None):
        self.code = code.value if isinstance(code, ErrorCode) else code
        self.message = message
        self.details = details or {}
        super().__init__(f"[{self.code}] {message}")

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"

    @property
    def exit_code(self) -> int:
        """CLI exit code for this error."""
        return EXIT_CODES.get(self.code, 4)


# --- physics -------------------------------------------------------------------


class PhysConstants(BaseModel):
    """Physical constants in the unit system used throughout the package."""

    mu_B: float = Field(
        sc.physical_constants["Bohr magneton in eV/T"][0] * 1e6,
        description="Bohr magneton, µeV/T",
    )
    h: float = Field(
        sc.physical_constants["Planck constant in eV/Hz"][0] * 1e6,
        description="Planck constant, µeV·s",
    )
    hbar: float = Field(
        sc.physical_constants["reduced Planck constant in eV s"][0],
        description="Reduced Planck constant, eV·s",
    )
    m_t_ratio: float = Field(0.19, description="Transverse effective mass / electron mass")
    k_B: float = Field(
        sc.physical_constants["Boltzmann constant in eV/K"][0] * 1e6,
        description="Boltzmann constant, µeV/K",
    )
    m_e: float = Field(sc.m_e, description="Electron rest mass, kg")
    e: float = Field(sc.e, description="Elementary charge, C")

    model_config = {"frozen": True}


class SpinValleyParams(BaseModel):
    """Five-parameter spin-valley model of a double quantum dot plus baseline g-factor."""

    delta_g: float = Field(..., description="g-factor difference between the dots")
    E_l: float = Field(..., description="Left-dot valley splitting, µeV")
    E_r: float = Field(..., description="Right-dot valley splitting, µeV")
    v_l: float = Field(..., description="Left spin-valley coupling, µeV")
    v_r: float = Field(..., description="Right spin-valley coupling, µeV")
    g_base: float = Field(2.0, description="Baseline g-factor")

    model_config = {"frozen": True}

    @field_validator("E_l", "E_r", "v_l", "v_r")
    @classmethod
    def validate_non_negative(cls, v: float) -> float:
        """Energies and couplings are non-negative."""
        if not math.isfinite(v) or v < 0:
            raise ValueError("Valley splittings and couplings must be finite and non-negative")
        return v

    @field_validator("g_base")
    @classmethod
    def validate_g_base(cls, v: float) -> float:
        """Validate baseline g-factor."""
        if v <= 0:
            raise ValueError("Baseline g-factor must be positive")
        return v

    @field_validator("delta_g")
    @classmethod
    def validate_delta_g(cls, v: float) -> float:
        """Validate g-factor difference magnitude."""
        if not math.isfinite(v) or abs(v) >= 0.1:
            raise ValueError("delta_g magnitude must be below 0.1")
        return v

    def swapped(self) -> "SpinValleyParams":
        """Equivalent parameter set with dot labels exchanged and delta_g negated."""
        return SpinValleyParams(
            delta_g=-self.delta_g,
            E_l=self.E_r,
            E_r=self.E_l,
            v_l=self.v_r,
            v_r=self.v_l,
            g_base=self.g_base,
        )


# --- landscape -----------------------------------------------------------------


class RicianParams(BaseModel):
    """Rician distribution of the valley splitting."""

    gamma: float = Field(..., description="Non-centrality, µeV")
    sigma: float = Field(..., description="Scale, µeV")

    model_config = {"frozen": True}

    @field_validator("gamma")
    @classmethod
    def validate_gamma(cls, v: float) -> float:
        if v < 0:
            raise ValueError("gamma must be non-negative")
        return v

    @field_validator("sigma")
    @classmethod
    def validate_sigma(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("sigma must be positive")
        return v


class FoldedGaussianParams(BaseModel):
    """Folded (modified) Gaussian distribution of the valley splitting."""

    mu: float = Field(..., description="Location, µeV")
    sigma_tilde: float = Field(..., description="Scale, µeV")

    model_config = {"frozen": True}

    @field_validator("mu")
    @classmethod
    def validate_mu(cls, v: float) -> float:
        if v < 0:
            raise ValueError("mu must be non-negative")
        return v

    @field_validator("sigma_tilde")
    @classmethod
    def validate_sigma_tilde(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("sigma_tilde must be positive")
        return v


class CorrelationModel(BaseModel):
    """Gaussian spatial correlation set by the characteristic dot size."""

    a_dot: float = Field(..., description="Characteristic quantum-dot size, nm")

    model_config = {"frozen": True}

    @field_validator("a_dot")
    @classmethod
    def validate_a_dot(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("a_dot must be positive")
        return v


class LandscapeSpec(BaseModel):
    """Recipe for a synthetic valley landscape."""

    x_extent: float = Field(210.0, description="Extent along the shuttle direction, nm")
    y_extent: float = Field(21.0, description="Extent across the channel, nm")
    x_origin: float = Field(0.0, description="Coordinate of the first grid column, nm")
    y_origin: float = Field(-14.0, description="Coordinate of the first grid row, nm")
    pitch: float = Field(1.4, description="Grid pitch, nm")
    rician: RicianParams = Field(
        default_factory=lambda: RicianParams(gamma=35.4, sigma=13.6),
        description="Marginal law of E_VS",
    )
    correlation: CorrelationModel = Field(
        default_factory=lambda: CorrelationModel(a_dot=16.0),
        description="Spatial correlation of all fields",
    )
    delta_g_mean: float = Field(6.58e-4, description="Mean g-factor difference")
    delta_g_spread: float = Field(2e-4, description="Standard deviation of the g-factor difference")
    v_mean: float = Field(0.08, description="Spin-valley coupling, µeV")

    model_config = {"frozen": True}

    @field_validator("pitch")
    @classmethod
    def validate_pitch(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("pitch must be positive")
        return v

    @field_validator("x_extent", "y_extent", "delta_g_spread", "v_mean")
    @classmethod
    def validate_non_negative(cls, v: float) -> float:
        if v < 0:
            raise ValueError("extents, spread and coupling must be non-negative")
        return v


def grid_points(extent: float, pitch: float) -> int:
    """Number of grid nodes along an axis: floor(extent/pitch) + 1."""
    return int(math.floor(extent / pitch + 1e-9)) + 1


class ValleyLandscape(BaseModel):
    """Gridded E_VS, delta_g and v fields; arrays are indexed [ix, iy]."""

    x_extent: float = Field(..., description="Extent along x, nm")
    y_extent: float = Field(..., description="Extent along y, nm")
    pitch: float = Field(..., description="Grid pitch, nm")
    x_origin: float = Field(0.0, description="x of the first node, nm")
    y_origin: float = Field(0.0, description="y of the first node, nm")
    E_VS_grid: np.ndarray = Field(..., description="Valley splitting per node, µeV")
    delta_g_grid: np.ndarray = Field(..., description="g-factor difference per node")
    v_grid: np.ndarray = Field(..., description="Spin-valley coupling per node, µeV")
    seed: Optional[int] = Field(None, description="Seed used for synthesis")
    spec: Optional[LandscapeSpec] = Field(None, description="Recipe used for synthesis")

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("E_VS_grid", "delta_g_grid", "v_grid", mode="before")
    @classmethod
    def coerce_grid(cls, v: Any) -> np.ndarray:
        return _frozen_array(v)

    @model_validator(mode="after")
    def validate_grids(self) -> "ValleyLandscape":
        if self.pitch <= 0:
            raise ValueError("pitch must be positive")
        expected = (grid_points(self.x_extent, self.pitch), grid_points(self.y_extent, self.pitch))
        for name in ("E_VS_grid", "delta_g_grid", "v_grid"):
            grid = getattr(self, name)
            if grid.shape != expected:
                raise ValueError(f"{name} has shape {grid.shape}, expected {expected}")
            if not np.all(np.isfinite(grid)):
                raise ValueError(f"{name} contains non-finite values")
        if np.any(self.E_VS_grid < 0) or np.any(self.v_grid < 0):
            raise ValueError("E_VS and v grids must be non-negative")
        return self

    @property
    def shape(self) -> Tuple[int, int]:
        return self.E_VS_grid.shape  # type: ignore[return-value]

    @property
    def x_axis(self) -> np.ndarray:
        return self.x_origin + self.pitch * np.arange(self.shape[0])

    @property
    def y_axis(self) -> np.ndarray:
        return self.y_origin + self.pitch * np.arange(self.shape[1])


# --- pulse sequence ------------------------------------------------------------


class ShuttleWaveform(BaseModel):
    """Four-phase sinusoidal conveyor drive."""

    amplitudes: Tuple[float, float, float, float] = Field(
        (0.150, 0.192, 0.150, 0.192), alias="amplitudes_V", description="Amplitudes U_i, V"
    )
    offsets: Tuple[float, float, float, float] = Field(
        (0.7, 0.896, 0.7, 0.896), alias="offsets_V", description="Offsets C_i, V"
    )
    phases: Tuple[float, float, float, float] = Field(
        (-math.pi / 2, 0.0, math.pi / 2, math.pi),
        alias="phases_rad",
        description="Phases phi_i, rad",
    )
    frequency: float = Field(1e7, alias="f_Hz", description="Drive frequency, Hz")
    wavelength: float = Field(280.0, alias="lambda_nm", description="Spatial period, nm")

    model_config = {"populate_by_name": True, "frozen": True}

    @field_validator("frequency", "wavelength")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("frequency and wavelength must be positive")
        return v

    @property
    def velocity(self) -> float:
        """Nominal shuttle velocity, nm/s."""
        return self.wavelength * self.frequency


class StageName(str, Enum):
    """Stages of the shuttle experiment."""
    I = "I"  # noqa: E741
    S = "S"
    T = "T"
    SHUTTLE_OUT = "SHUTTLE_OUT"
    WAIT_D = "WAIT_D"
    SHUTTLE_BACK = "SHUTTLE_BACK"
    T2 = "T2"
    S2 = "S2"
    P = "P"
    F = "F"


class Stage(BaseModel):
    """One pulse stage."""

    name: StageName
    duration: float = Field(..., description="Duration, s")
    separated: bool = Field(..., description="Electron pair separated in (3,1)")

    model_config = {"frozen": True}

    @field_validator("duration")
    @classmethod
    def validate_duration(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("stage durations must be positive")
        return v


class StageTimeline(BaseModel):
    """Durations of the fixed stages; shuttle stages follow from the target distance."""

    init: float = Field(1e-3, description="I: load, s")
    separate: float = Field(30e-9, description="S: separation dwell, s")
    tunnel: float = Field(10e-9, description="T: tunnel dwell, s")
    wait: float = Field(300e-9, description="WAIT_D: wait at the target, s")
    return_tunnel: float = Field(10e-9, description="T2: return tunnel dwell, s")
    return_separate: float = Field(30e-9, description="S2: return separation dwell, s")
    psb: float = Field(500e-9, description="P: Pauli spin blockade, s")
    readout: float = Field(1e-3, description="F: readout, s")
    max_shuttle: float = Field(120e-9, description="Upper bound of SHUTTLE_OUT, s")

    model_config = {"frozen": True}

    @field_validator(
        "init", "separate", "tunnel", "wait", "return_tunnel",
        "return_separate", "psb", "readout", "max_shuttle",
    )
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("stage durations must be positive")
        return v

    @property
    def dwell(self) -> float:
        """Combined separated dwell at the static dot (S, T, T2, S2), s."""
        return self.separate + self.tunnel + self.return_tunnel + self.return_separate

    def stages(self, shuttle_duration: float = 0.0) -> List[Stage]:
        """Ordered stage list; shuttle stages are omitted for zero distance."""
        sequence: List[Tuple[StageName, float, bool]] = [
            (StageName.I, self.init, False),
            (StageName.S, self.separate, True),
            (StageName.T, self.tunnel, True),
            (StageName.SHUTTLE_OUT, shuttle_duration, True),
            (StageName.WAIT_D, self.wait, True),
            (StageName.SHUTTLE_BACK, shuttle_duration, True),
            (StageName.T2, self.return_tunnel, True),
            (StageName.S2, self.return_separate, True),
            (StageName.P, self.psb, False),
            (StageName.F, self.readout, False),
        ]
        return [
            Stage(name=name, duration=duration, separated=separated)
            for name, duration, separated in sequence
            if duration > 0
        ]


# --- forward simulation --------------------------------------------------------


class NoiseConfig(BaseModel):
    """Dephasing, visibility, offset and shot-noise settings."""

    T2_star: float = Field(1e-6, description="Ensemble dephasing time, s")
    visibility: float = Field(0.35, description="Oscillation visibility a")
    offset: float = Field(0.5, description="Probability offset c")
    shots: Optional[int] = Field(1000, description="Shots per cell; None disables shot noise")
    seed: Optional[int] = Field(None, description="Global seed for shot noise")

    model_config = {"frozen": True}

    @field_validator("T2_star")
    @classmethod
    def validate_t2(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("T2_star must be positive")
        return v

    @field_validator("visibility")
    @classmethod
    def validate_visibility(cls, v: float) -> float:
        if not 0 < v <= 0.5:
            raise ValueError("visibility must lie in (0, 0.5]")
        return v

    @field_validator("shots")
    @classmethod
    def validate_shots(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 0:
            raise ValueError("shots must be non-negative")
        # zero shots means the exact probability
        return v or None

    @model_validator(mode="after")
    def validate_bounds(self) -> "NoiseConfig":
        if self.offset - self.visibility < 0 or self.offset + self.visibility > 1:
            raise ValueError("offset ± visibility must stay within [0, 1]")
        return self


class ProbabilityMap(BaseModel):
    """Singlet return probability on a (axis1, axis2) grid; P is indexed [i1, i2]."""

    axis1_name: str = Field(..., description="First axis name, e.g. d or tau")
    axis1_unit: str = Field(..., description="First axis unit")
    axis1: np.ndarray = Field(..., description="First axis values")
    axis2_name: str = Field("B", description="Second axis name")
    axis2_unit: str = Field("T", description="Second axis unit")
    axis2: np.ndarray = Field(..., description="Second axis values")
    P: np.ndarray = Field(..., description="Probabilities")
    attributes: Dict[str, Any] = Field(default_factory=dict, description="Provenance")

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("axis1", "axis2", "P", mode="before")
    @classmethod
    def coerce_array(cls, v: Any) -> np.ndarray:
        return _frozen_array(v)

    @model_validator(mode="after")
    def validate_map(self) -> "ProbabilityMap":
        if not (_strictly_increasing(self.axis1) and _strictly_increasing(self.axis2)):
            raise ValueError("axes must be one-dimensional and strictly increasing")
        if self.P.shape != (self.axis1.size, self.axis2.size):
            raise ValueError(
                f"P has shape {self.P.shape}, expected {(self.axis1.size, self.axis2.size)}"
            )
        if np.any(~np.isfinite(self.P)) or np.any(self.P < 0) or np.any(self.P > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        return self


# --- fitting -------------------------------------------------------------------


class FitProblem(BaseModel):
    """Bounded nonlinear least-squares problem."""

    residual: Callable[[np.ndarray], np.ndarray] = Field(..., description="params -> residuals")
    initial: np.ndarray = Field(..., description="Initial parameters")
    lower: Optional[np.ndarray] = Field(None, description="Lower bounds")
    upper: Optional[np.ndarray] = Field(None, description="Upper bounds")
    names: Optional[List[str]] = Field(None, description="Parameter names")
    x_scale: Optional[np.ndarray] = Field(None, description="Typical parameter magnitudes")
    max_iterations: int = Field(200, description="Iteration budget")
    tolerance: float = Field(1e-10, description="Relative cost decrease for convergence")
    absolute_sigma: bool = Field(
        False, description="Residuals are already normalized; skip variance rescaling"
    )

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("initial", "lower", "upper", "x_scale", mode="before")
    @classmethod
    def coerce_vector(cls, v: Any) -> Optional[np.ndarray]:
        if v is None:
            return None
        return np.atleast_1d(np.array(v, dtype=float))

    @model_validator(mode="after")
    def validate_problem(self) -> "FitProblem":
        n = self.initial.size
        lower = self.lower if self.lower is not None else np.full(n, -np.inf)
        upper = self.upper if self.upper is not None else np.full(n, np.inf)
        if lower.shape != (n,) or upper.shape != (n,):
            raise ValueError("bounds must match the parameter vector")
        if np.any(lower > upper):
            raise ValueError("lower bounds must not exceed upper bounds")
        if np.any(self.initial < lower) or np.any(self.initial > upper):
            raise ValueError("initial parameters must lie within bounds")
        if self.names is not None and len(self.names) != n:
            raise ValueError("names must match the parameter vector")
        if self.x_scale is not None and (self.x_scale.shape != (n,) or np.any(self.x_scale <= 0)):
            raise ValueError("x_scale must be positive and match the parameter vector")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.names is None:
            object.__setattr__(self, "names", [f"p{i}" for i in range(n)])
        if self.x_scale is None:
            object.__setattr__(self, "x_scale", np.ones(n))
        return self


class FitReport(BaseModel):
    """Estimates, 1σ uncertainties and convergence record of a fit."""

    estimates: Dict[str, float] = Field(..., description="Parameter estimates")
    uncertainties: Dict[str, float] = Field(..., description="1σ uncertainties")
    cost: float = Field(..., description="Final objective (half the squared residual norm)")
    iterations: int = Field(..., description="Iterations used")
    converged: bool = Field(..., description="Convergence flag")
    message: str = Field("", description="Termination reason")
    cost_history: List[float] = Field(default_factory=list, description="Cost after each accepted step")
    log_likelihood: Optional[float] = Field(None, description="Total log-likelihood for MLE fits")
    n_observations: int = Field(0, description="Residual or sample count")

    model_config = {"frozen": True}

    @field_validator("cost")
    @classmethod
    def validate_cost(cls, v: float) -> float:
        if not v >= 0:
            raise ValueError("cost must be non-negative")
        return v

    @field_validator("uncertainties")
    @classmethod
    def validate_uncertainties(cls, v: Dict[str, float]) -> Dict[str, float]:
        if any(not (s >= 0) and not math.isnan(s) for s in v.values()):
            raise ValueError("uncertainties must be non-negative")
        return v

    def value(self, name: str) -> float:
        return self.estimates[name]

    def sigma(self, name: str) -> float:
        return self.uncertainties[name]


# --- analysis ------------------------------------------------------------------


class OscillationFit(BaseModel):
    """Decaying cosine fit of a singlet-probability trace."""

    a: float = Field(..., description="Visibility")
    nu: float = Field(..., description="Frequency, Hz")
    phi: float = Field(..., description="Phase, rad, wrapped to (-pi, pi]")
    T2_star: float = Field(..., description="Dephasing time, s")
    c: float = Field(..., description="Offset of the mean-subtracted trace plus the removed mean")
    nu_sigma: float = Field(..., description="1σ uncertainty of nu, Hz")
    low_visibility: bool = Field(False, description="Amplitude below the noise floor")
    report: FitReport

    model_config = {"frozen": True}


class SpectrumFit(BaseModel):
    """Anticrossing-spectrum fit result."""

    params: SpinValleyParams
    report: FitReport
    underdetermined: bool = Field(False, description="Fewer than two dips for five free parameters")
    notes: List[str] = Field(default_factory=list)

    model_config = {"frozen": True}


class RidgeEntry(BaseModel):
    """One shuttle distance of an extracted ridge."""

    d: float = Field(..., description="Shuttle distance, nm")
    B: Optional[float] = Field(None, description="Anticrossing field, T")
    E_VS: Optional[float] = Field(None, description="Valley splitting, µeV")
    valid: bool = Field(..., description="Anticrossing observable in this column")
    contrast: float = Field(0.0, description="Peak contrast of the ridge signature")

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def validate_entry(self) -> "RidgeEntry":
        if self.valid and (self.B is None or self.E_VS is None):
            raise ValueError("valid ridge entries need B and E_VS")
        if not self.valid and self.E_VS is not None:
            raise ValueError("invalid ridge entries carry no E_VS")
        return self


class RidgeTrace(BaseModel):
    """Ridge extracted from one P_S(d, B) map."""

    entries: List[RidgeEntry]
    y_offset: float = Field(0.0, description="Lateral position of the trace, nm")
    g: float = Field(2.0, description="g-factor used for the E_VS conversion")

    model_config = {"frozen": True}

    @property
    def valid_entries(self) -> List[RidgeEntry]:
        return [entry for entry in self.entries if entry.valid]

    @property
    def d(self) -> np.ndarray:
        return np.array([entry.d for entry in self.entries])

    @property
    def E_VS(self) -> np.ndarray:
        return np.array([np.nan if entry.E_VS is None else entry.E_VS for entry in self.entries])


class ResampledTrace(BaseModel):
    """E_VS(d) resampled on an equidistant grid; NaN marks missing samples."""

    y_offset: float
    d: np.ndarray
    E_VS: np.ndarray
    pitch: float
    method: str
    unsampled: List[Tuple[float, float]] = Field(
        default_factory=list, description="Points of segments too short to resample"
    )

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("d", "E_VS", mode="before")
    @classmethod
    def coerce_array(cls, v: Any) -> np.ndarray:
        return _frozen_array(v)


class Map2D(BaseModel):
    """E_VS on a (d, y) grid; E_VS is indexed [id, iy]."""

    d: np.ndarray
    y: np.ndarray
    E_VS: np.ndarray
    is_1d: bool = False

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("d", "y", "E_VS", mode="before")
    @classmethod
    def coerce_array(cls, v: Any) -> np.ndarray:
        return _frozen_array(v)


class CorrelationCurve(BaseModel):
    """Binned Pearson correlation versus distance."""

    D: np.ndarray = Field(..., description="Pair-averaged bin distance, nm")
    corr: np.ndarray = Field(..., description="Pearson coefficient per bin")
    pairs: np.ndarray = Field(..., description="Pair count per bin")
    mode: str = Field("geometric", description="Distance definition")
    bin_width: float = Field(1.4, description="Bin width, nm")

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("D", "corr", "pairs", mode="before")
    @classmethod
    def coerce_array(cls, v: Any) -> np.ndarray:
        return _frozen_array(v)


class CorrelationFit(BaseModel):
    """Fitted correlation model with derived orbital energy."""

    model: CorrelationModel
    report: FitReport
    E_orb_meV: float
    converged: bool

    model_config = {"frozen": True}


class DistributionFit(BaseModel):
    """Maximum-likelihood distribution fit."""

    family: str
    params: Union[RicianParams, FoldedGaussianParams]
    report: FitReport

    model_config = {"frozen": True}


# --- magnetospectroscopy -------------------------------------------------------


class TransitionScan(BaseModel):
    """Charge-sensor signal versus field and plunger voltage; signal is indexed [iB, iV]."""

    B: np.ndarray = Field(..., description="Field axis, T")
    V: np.ndarray = Field(..., description="Plunger voltage axis, V")
    signal: np.ndarray = Field(..., description="Sensor signal, arbitrary units")
    label: str = Field("", description="Transition label, e.g. 01 or 12")

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("B", "V", "signal", mode="before")
    @classmethod
    def coerce_array(cls, v: Any) -> np.ndarray:
        return _frozen_array(v)

    @model_validator(mode="after")
    def validate_scan(self) -> "TransitionScan":
        if not (_strictly_increasing(self.B) and _strictly_increasing(self.V)):
            raise ValueError("scan axes must be strictly increasing")
        if self.signal.shape != (self.B.size, self.V.size):
            raise ValueError("signal shape must be (len(B), len(V))")
        return self


class TransitionPosition(BaseModel):
    """Tracked transition voltage on one sweep line."""

    B: float
    V: Optional[float] = None
    sigma: Optional[float] = None
    valid: bool = True
    amplitude: float = 0.0

    model_config = {"frozen": True}


class MagnetospecModel(BaseModel):
    """Lineshape parameters of the 01 and 12 transitions."""

    alpha: float = Field(..., description="Lever arm, eV/V")
    temperature: float = Field(..., description="Electron temperature, K")
    V0: float = Field(0.0, description="Voltage offset, V")
    g: float = Field(2.0, description="g-factor")
    E_ST: Optional[float] = Field(None, description="Singlet-triplet splitting, µeV")

    model_config = {"frozen": True}

    @field_validator("alpha", "temperature")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("alpha and temperature must be positive")
        return v


class Fit01Result(BaseModel):
    """Fit of the 01 transition and its residuals."""

    model: MagnetospecModel
    report: FitReport
    B: np.ndarray
    residuals: np.ndarray = Field(..., description="Measured minus fitted voltage, V")
    identifiable: bool = True

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("B", "residuals", mode="before")
    @classmethod
    def coerce_array(cls, v: Any) -> np.ndarray:
        return _frozen_array(v)


class ESTFit(BaseModel):
    """Singlet-triplet splitting from the 12 transition."""

    E_ST: float = Field(..., description="µeV")
    E_ST_sigma: float = Field(..., description="µeV")
    V0: float = Field(..., description="V")
    report: FitReport
    kink_in_range: bool = True

    model_config = {"frozen": True}


class MagnetospecReport(BaseModel):
    """Outcome of the full magnetospectroscopy pipeline."""

    fit01: Fit01Result
    est: ESTFit
    positions_01: List[TransitionPosition]
    positions_12: List[TransitionPosition] = Field(..., description="12 positions entering the E_ST fit")
    noise_subtracted: bool = True
    skipped_lines: int = 0
    E_VS: Optional[float] = Field(None, description="Valley splitting for comparison, µeV")
    E_ST_over_E_VS: Optional[float] = None

    model_config = {"frozen": True}


class CapacitanceRatioMap(BaseModel):
    """Cross-capacitance ratio of two gates over the device plane; ratio is indexed [ix, iy]."""

    x: np.ndarray
    y: np.ndarray
    ratio: np.ndarray = Field(..., description="NaN marks masked cells")
    gates: Tuple[str, str]
    measured: Optional[float] = None
    measured_sigma: Optional[float] = None

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("x", "y", "ratio", mode="before")
    @classmethod
    def coerce_array(cls, v: Any) -> np.ndarray:
        return _frozen_array(v)

    @model_validator(mode="after")
    def validate_ratio(self) -> "CapacitanceRatioMap":
        if self.ratio.shape != (self.x.size, self.y.size):
            raise ValueError("ratio shape must be (len(x), len(y))")
        finite = self.ratio[np.isfinite(self.ratio)]
        if np.any(finite <= 0):
            raise ValueError("cross-capacitance ratios must be positive")
        return self


class TriangulationResult(BaseModel):
    """Dot position from intersecting ratio bands."""

    x: Optional[float] = None
    y: Optional[float] = None
    sigma_x: Optional[float] = None
    sigma_y: Optional[float] = None
    n_cells: int = 0
    consistent: bool = False

    model_config = {"frozen": True}


class CalibrationFit(BaseModel):
    """Linear y-displacement calibration."""

    slope: float = Field(..., description="nm/V")
    slope_stderr: float = Field(..., description="nm/V")
    intercept: float = Field(..., description="nm")
    n_points: int

    model_config = {"frozen": True}


# --- runs ----------------------------------------------------------------------


class RunManifest(BaseModel):
    """Provenance record written next to every command's outputs."""

    command: str
    tool_version: str
    config: Dict[str, Any]
    started_at: str
    duration_seconds: float
    inputs: Dict[str, str] = Field(default_factory=dict, description="path -> sha256")
    outputs: Dict[str, str] = Field(default_factory=dict, description="path -> sha256")
    summary: Dict[str, Any] = Field(default_factory=dict)
