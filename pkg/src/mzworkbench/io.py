"""File formats: CSV series, trajectory tables, generator JSON.

Series CSV is two columns ``t,value`` with 17 significant digits, enough
for exact float64 round trips.  Generators serialize to a flat JSON
object with the matrix row-major.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import CsvFormatError, GridMismatchError, WorkbenchError
from .glesim import TrajectoryEnsemble
from .hilbert import Generator, HilbertSpace
from .series import ScalarSeries, TimeGrid

FLOAT_FMT = "%.17g"
_GRID_REL_TOL = 1e-8


def write_series(path, series: ScalarSeries, value_name: str = "value") -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"t,{value_name}\n")
        for t, v in zip(series.times, series.values):
            fh.write(f"{FLOAT_FMT % t},{FLOAT_FMT % v}\n")


def _parse_float(token: str, path: Path, line_no: int, col: str) -> float:
    try:
        value = float(token)
    except ValueError as exc:
        raise CsvFormatError(f"{path}:{line_no}: column {col!r}: not a number: {token!r}") from exc
    if not np.isfinite(value):
        raise CsvFormatError(f"{path}:{line_no}: column {col!r}: non-finite value {token!r}")
    return value


def _read_table(path) -> tuple[list[str], list[list[float]], Path]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise CsvFormatError(f"{path}: file is empty")
    header = [h.strip() for h in lines[0].split(",")]
    rows = []
    for line_no, line in enumerate(lines[1:], start=2):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(header):
            raise CsvFormatError(
                f"{path}:{line_no}: expected {len(header)} cells, found {len(cells)}"
            )
        rows.append([_parse_float(c, path, line_no, header[i]) for i, c in enumerate(cells)])
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    return header, rows, path


def _grid_from_times(times: np.ndarray, path: Path) -> TimeGrid:
    if len(times) < 2:
        raise CsvFormatError(f"{path}: need at least two rows to infer the time step")
    dt = times[1] - times[0]
    if dt <= 0:
        raise CsvFormatError(f"{path}: time column must be strictly increasing")
    k = np.arange(len(times))
    dev = np.max(np.abs(times - k * dt))
    if dev > _GRID_REL_TOL * max(dt, abs(times[-1])):
        raise GridMismatchError(
            f"{path}: time column is not a uniform grid (max deviation {dev:.3e}); "
            "resample the data before ingesting"
        )
    return TimeGrid(float(dt), len(times) - 1)


def read_series(path, t_col: str = "t", value_col: str = "value") -> ScalarSeries:
    """Read a `t,value` series, validating grid uniformity."""
    header, rows, path = _read_table(path)
    for col in (t_col, value_col):
        if col not in header:
            raise CsvFormatError(f"{path}: missing column {col!r} (have {header})")
    ti, vi = header.index(t_col), header.index(value_col)
    data = np.asarray(rows)
    grid = _grid_from_times(data[:, ti], path)
    return ScalarSeries(grid, data[:, vi])


def write_ensemble_csv(path, ensemble: TrajectoryEnsemble) -> None:
    path = Path(path)
    m = ensemble.n_realizations
    with path.open("w") as fh:
        fh.write("t," + ",".join(f"traj_{i}" for i in range(m)) + "\n")
        for k, t in enumerate(ensemble.grid.times):
            row = ",".join(FLOAT_FMT % v for v in ensemble.data[:, k])
            fh.write(f"{FLOAT_FMT % t},{row}\n")


def write_ensemble_binary(path, ensemble: TrajectoryEnsemble) -> None:
    """Raw float64 dump plus a JSON sidecar describing it.

    Trajectories are contiguous, i.e. the file is the (n_nodes, M) matrix
    in column-major order with one realization per column.
    """
    path = Path(path)
    np.ascontiguousarray(ensemble.data).tofile(path)
    sidecar = {
        "dt": ensemble.grid.dt,
        "n_steps": ensemble.grid.n_steps,
        "M": ensemble.n_realizations,
        "seed": ensemble.seed,
        "method": ensemble.method,
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def read_ensemble_csv(path, t_col: str = "t") -> TrajectoryEnsemble:
    """Ingest a `t,traj_0,...` table into an ensemble (rows = realizations)."""
    header, rows, path = _read_table(path)
    if t_col not in header:
        raise CsvFormatError(f"{path}: missing time column {t_col!r}")
    ti = header.index(t_col)
    traj_cols = [i for i in range(len(header)) if i != ti]
    if not traj_cols:
        raise CsvFormatError(f"{path}: no trajectory columns besides {t_col!r}")
    data = np.asarray(rows)
    grid = _grid_from_times(data[:, ti], path)
    return TrajectoryEnsemble(
        grid=grid, data=data[:, traj_cols].T.copy(), seed=0, method="ingested"
    )


def generator_to_payload(generator: Generator) -> dict:
    payload = {
        "dim": generator.dim,
        "weights": generator.space.weight_vector.tolist(),
        "matrix": generator.matrix.reshape(-1).tolist(),
    }
    if generator.seed is not None:
        payload["seed"] = generator.seed
    if generator.frequencies is not None:
        payload["frequencies"] = list(generator.frequencies)
    return payload


def _float_array_json(values) -> str:
    return "[" + ", ".join(FLOAT_FMT % v for v in values) + "]"


def write_generator(path, generator: Generator) -> None:
    # floats carry 17 significant digits so the matrix survives the trip
    payload = generator_to_payload(generator)
    lines = [
        "{",
        f'  "dim": {payload["dim"]},',
        f'  "weights": {_float_array_json(payload["weights"])},',
        f'  "matrix": {_float_array_json(payload["matrix"])}',
    ]
    if "seed" in payload:
        lines[-1] += ","
        lines.append(f'  "seed": {payload["seed"]}')
    if "frequencies" in payload:
        lines[-1] += ","
        lines.append(f'  "frequencies": {_float_array_json(payload["frequencies"])}')
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n")


def generator_from_payload(payload: dict) -> Generator:
    try:
        dim = int(payload["dim"])
        matrix = np.asarray(payload["matrix"], dtype=float).reshape(dim, dim)
    except (KeyError, TypeError, ValueError) as exc:
        raise WorkbenchError(f"malformed generator payload: {exc}") from exc
    weights = payload.get("weights")
    space = HilbertSpace(dim, weights=None if weights is None else np.asarray(weights))
    freqs = payload.get("frequencies")
    return Generator(
        matrix=matrix,
        space=space,
        seed=payload.get("seed"),
        frequencies=None if freqs is None else tuple(float(f) for f in freqs),
    )


def read_generator(path) -> Generator:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except OSError as exc:
        raise WorkbenchError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise WorkbenchError(f"{path}: invalid JSON: {exc}") from exc
    return generator_from_payload(payload)


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
