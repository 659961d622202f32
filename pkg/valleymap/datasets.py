"""CSV and JSON persistence of landscapes, maps, traces and reports.

CSV files are long format with a header row, UTF-8, LF line endings and
floats written with repr so reruns are byte-identical. JSON uses sorted keys
and two-space indentation.
"""

import csv
import hashlib
import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import structlog
from pydantic import BaseModel

from .analysis.oscillation import FrequencyTable
from .models import (
    CapacitanceRatioMap,
    CorrelationCurve,
    ErrorCode,
    LandscapeSpec,
    Map2D,
    ProbabilityMap,
    ResampledTrace,
    RidgeEntry,
    RidgeTrace,
    TransitionPosition,
    TransitionScan,
    ValleyLandscape,
    ValleyMapError,
)

logger = structlog.get_logger(__name__)

PathLike = Union[str, Path]
Cell = Union[float, int, str, bool, None]

AXIS_COLUMNS = {"d": "d_nm", "tau": "tau_s", "tau_w": "tau_w_s"}


def format_cell(value: Cell) -> str:
    """Text of one CSV cell: repr for floats, empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    number = float(value)
    if math.isnan(number):
        return "nan"
    return repr(number)


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Cell]]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(value) for value in row])
    logger.debug("CSV written", path=str(target))
    return target


def read_csv(path: PathLike, required: Sequence[str] = ()) -> List[Dict[str, str]]:
    """Rows of a CSV file as dicts; missing files or columns are input errors."""
    source = Path(path)
    if not source.is_file():
        raise ValleyMapError(ErrorCode.INVALID_INPUT, f"File not found: {source}")
    with open(source, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        missing = [name for name in required if name not in (reader.fieldnames or [])]
        if missing:
            raise ValleyMapError(
                ErrorCode.INVALID_INPUT,
                f"{source.name} lacks required columns",
                {"missing": missing, "columns": reader.fieldnames},
            )
        return list(reader)


def _float(text: str) -> Optional[float]:
    return float(text) if text != "" else None


def _jsonable(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return _jsonable(value.model_dump(mode="python"))
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(item) for item in value.tolist()]
    if isinstance(value, (np.floating, float)):
        number = float(value)
        return number if math.isfinite(number) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Enum):
        return value.value
    return value


def write_json(path: PathLike, payload: Any) -> Path:
    """Serialize with sorted keys; non-finite floats become null."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2, allow_nan=False)
    target.write_text(text + "\n", encoding="utf-8")
    return target


def read_json(path: PathLike) -> Any:
    source = Path(path)
    if not source.is_file():
        raise ValleyMapError(ErrorCode.INVALID_INPUT, f"File not found: {source}")
    try:
        return json.loads(source.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, f"{source.name} is not valid JSON", {"error": str(exc)}) from exc


def file_digest(path: PathLike) -> str:
    """sha256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


# --- landscapes ----------------------------------------------------------------


def write_landscape(landscape: ValleyLandscape, directory: PathLike, stem: str = "landscape") -> List[Path]:
    """Grid CSV (x_nm, y_nm, E_VS_ueV, delta_g, v_ueV) plus a JSON header naming it."""
    folder = Path(directory)
    grid_path = folder / f"{stem}.csv"
    xs, ys = landscape.x_axis, landscape.y_axis
    rows = (
        (xs[i], ys[j], landscape.E_VS_grid[i, j], landscape.delta_g_grid[i, j], landscape.v_grid[i, j])
        for i in range(xs.size)
        for j in range(ys.size)
    )
    write_csv(grid_path, ["x_nm", "y_nm", "E_VS_ueV", "delta_g", "v_ueV"], rows)
    header = {
        "grid_file": grid_path.name,
        "x_extent": landscape.x_extent,
        "y_extent": landscape.y_extent,
        "pitch": landscape.pitch,
        "x_origin": landscape.x_origin,
        "y_origin": landscape.y_origin,
        "seed": landscape.seed,
        "spec": landscape.spec.model_dump() if landscape.spec is not None else None,
    }
    return [grid_path, write_json(folder / f"{stem}.json", header)]


def read_landscape(path: PathLike) -> ValleyLandscape:
    """Landscape from its JSON header and the grid CSV beside it."""
    header = read_json(path)
    rows = read_csv(Path(path).parent / header["grid_file"], ["x_nm", "y_nm", "E_VS_ueV", "delta_g", "v_ueV"])
    xs = sorted({float(row["x_nm"]) for row in rows})
    ys = sorted({float(row["y_nm"]) for row in rows})
    shape = (len(xs), len(ys))
    if len(rows) != shape[0] * shape[1]:
        raise ValleyMapError(ErrorCode.INVALID_INPUT, "Landscape grid is incomplete", {"rows": len(rows)})
    grids = {name: np.empty(shape) for name in ("E_VS_ueV", "delta_g", "v_ueV")}
    x_index = {x: i for i, x in enumerate(xs)}
    y_index = {y: j for j, y in enumerate(ys)}
    for row in rows:
        i, j = x_index[float(row["x_nm"])], y_index[float(row["y_nm"])]
        for name, grid in grids.items():
            grid[i, j] = float(row[name])
    spec = header.get("spec")
    return ValleyLandscape(
        x_extent=header["x_extent"],
        y_extent=header["y_extent"],
        pitch=header["pitch"],
        x_origin=header["x_origin"],
        y_origin=header["y_origin"],
        E_VS_grid=grids["E_VS_ueV"],
        delta_g_grid=grids["delta_g"],
        v_grid=grids["v_ueV"],
        seed=header.get("seed"),
        spec=LandscapeSpec.model_validate(spec) if spec else None,
    )


# --- probability maps ----------------------------------------------------------


def write_map(scan: ProbabilityMap, path: PathLike) -> List[Path]:
    """Long-format P CSV plus a JSON sidecar with axis names and attributes."""
    target = Path(path)
    column = AXIS_COLUMNS.get(scan.axis1_name, f"{scan.axis1_name}_{scan.axis1_unit}")
    rows = ((a, b, scan.P[i, j]) for i, a in enumerate(scan.axis1) for j, b in enumerate(scan.axis2))
    write_csv(target, [column, "B_T", "P"], rows)
    sidecar = {
        "axis1_name": scan.axis1_name,
        "axis1_unit": scan.axis1_unit,
        "axis2_name": scan.axis2_name,
        "axis2_unit": scan.axis2_unit,
        "attributes": scan.attributes,
    }
    return [target, write_json(target.with_suffix(".json"), sidecar)]


def read_map(path: PathLike) -> ProbabilityMap:
    source = Path(path)
    sidecar_path = source.with_suffix(".json")
    sidecar = read_json(sidecar_path) if sidecar_path.is_file() else {"axis1_name": "d", "axis1_unit": "nm"}
    column = AXIS_COLUMNS.get(sidecar["axis1_name"], f"{sidecar['axis1_name']}_{sidecar['axis1_unit']}")
    rows = read_csv(source, [column, "B_T", "P"])
    axis1 = sorted({float(row[column]) for row in rows})
    axis2 = sorted({float(row["B_T"]) for row in rows})
    if len(rows) != len(axis1) * len(axis2):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, f"{source.name} is not a complete grid")
    P = np.empty((len(axis1), len(axis2)))
    index1 = {a: i for i, a in enumerate(axis1)}
    index2 = {b: j for j, b in enumerate(axis2)}
    for row in rows:
        P[index1[float(row[column])], index2[float(row["B_T"])]] = float(row["P"])
    return ProbabilityMap(
        axis1_name=sidecar["axis1_name"],
        axis1_unit=sidecar["axis1_unit"],
        axis1=axis1,
        axis2_name=sidecar.get("axis2_name", "B"),
        axis2_unit=sidecar.get("axis2_unit", "T"),
        axis2=axis2,
        P=P,
        attributes=sidecar.get("attributes", {}),
    )


# --- traces and tables ---------------------------------------------------------


def write_frequency_table(table: FrequencyTable, path: PathLike) -> Path:
    return write_csv(path, ["B_T", "nu_Hz", "nu_sigma_Hz"], zip(table.B, table.nu, table.nu_sigma))


def read_frequency_table(path: PathLike) -> FrequencyTable:
    """(B, ν, σ_ν) table; the σ column is optional and NaN when absent."""
    rows = read_csv(path, ["B_T", "nu_Hz"])
    B = np.array([float(row["B_T"]) for row in rows])
    nu = np.array([float(row["nu_Hz"]) for row in rows])
    sigma = np.array([float(row.get("nu_sigma_Hz") or "nan") for row in rows])
    return FrequencyTable(B=B, nu=nu, nu_sigma=sigma)


def write_ridge(trace: RidgeTrace, path: PathLike) -> Path:
    rows = ((e.d, e.B, e.E_VS, e.valid, e.contrast) for e in trace.entries)
    return write_csv(path, ["d_nm", "B_T", "E_VS_ueV", "valid", "contrast"], rows)


def read_ridge(path: PathLike, y_offset: float = 0.0, g: float = 2.0) -> RidgeTrace:
    rows = read_csv(path, ["d_nm", "B_T", "E_VS_ueV", "valid"])
    entries = [
        RidgeEntry(
            d=float(row["d_nm"]),
            B=_float(row["B_T"]),
            E_VS=_float(row["E_VS_ueV"]),
            valid=row["valid"] == "1",
            contrast=float(row.get("contrast") or 0.0),
        )
        for row in rows
    ]
    return RidgeTrace(entries=entries, y_offset=y_offset, g=g)


def write_resampled(trace: ResampledTrace, path: PathLike) -> Path:
    return write_csv(path, ["d_nm", "E_VS_ueV"], zip(trace.d, trace.E_VS))


def write_map_2d(result: Map2D, path: PathLike) -> Path:
    rows = ((d, y, result.E_VS[i, j]) for i, d in enumerate(result.d) for j, y in enumerate(result.y))
    return write_csv(path, ["d_nm", "y_nm", "E_VS_ueV"], rows)


def write_correlation(curve: CorrelationCurve, path: PathLike) -> Path:
    return write_csv(path, ["D_nm", "corr", "pairs"], zip(curve.D, curve.corr, curve.pairs.astype(int)))


# --- magnetospectroscopy -------------------------------------------------------


def write_scan(scan: TransitionScan, path: PathLike) -> Path:
    rows = ((b, v, scan.signal[i, j]) for i, b in enumerate(scan.B) for j, v in enumerate(scan.V))
    return write_csv(path, ["B_T", "V_V", "signal"], rows)


def read_scan(path: PathLike, label: str = "") -> TransitionScan:
    """Scan from long-format "B_T,V_V,signal" rows covering a full grid."""
    rows = read_csv(path, ["B_T", "V_V", "signal"])
    B = sorted({float(row["B_T"]) for row in rows})
    V = sorted({float(row["V_V"]) for row in rows})
    if len(rows) != len(B) * len(V):
        raise ValleyMapError(ErrorCode.INVALID_INPUT, f"{Path(path).name} is not a complete grid")
    signal = np.empty((len(B), len(V)))
    index_B = {b: i for i, b in enumerate(B)}
    index_V = {v: j for j, v in enumerate(V)}
    for row in rows:
        signal[index_B[float(row["B_T"])], index_V[float(row["V_V"])]] = float(row["signal"])
    return TransitionScan(B=B, V=V, signal=signal, label=label)


def write_positions(positions: Sequence[TransitionPosition], path: PathLike) -> Path:
    rows = ((p.B, p.V, p.sigma, p.valid, p.amplitude) for p in positions)
    return write_csv(path, ["B_T", "V_V", "sigma_V", "valid", "amplitude"], rows)


def write_ratio_map(ratio_map: CapacitanceRatioMap, path: PathLike) -> Path:
    rows = (
        (x, y, ratio_map.ratio[i, j]) for i, x in enumerate(ratio_map.x) for j, y in enumerate(ratio_map.y)
    )
    return write_csv(path, ["x_nm", "y_nm", "ratio"], rows)
