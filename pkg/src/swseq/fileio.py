"""Readers and writers for the exchange formats.

Floats are written with ``repr`` so every CSV parses back to the exact
values that were emitted.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .ambiguity import AmbiguityGrid, phi_grid
from .array_model import ArrayModel, from_eadf_coefficients
from .errors import ConfigurationError
from .switching import SwitchingSchedule, Timing

GRID_MAGIC = 5789.0     # 8-value header: magic, n_phi, n_phi, n_nu, nu_up, resolution, 0, 0
OBS_MAGIC = 1329746.0   # 6-value header: magic, M_f, M_R, M_T, T, sigma2


def _f(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------- schedules

def write_schedule_csv(path, schedule: SwitchingSchedule) -> None:
    """One row per TX antenna, one column per snapshot."""
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(schedule.S.tolist())


def read_schedule_csv(path, timing: Timing | None = None, label: str | None = None):
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
        S = np.array([[int(c) for c in r] for r in rows], dtype=np.int64)
    except (ValueError, OSError) as exc:
        raise ConfigurationError(f"cannot parse schedule {path}: {exc}") from None
    if S.ndim != 2 or S.size == 0:
        raise ConfigurationError(f"cannot parse schedule {path}: empty or ragged file")
    if timing is None:
        timing = Timing.back_to_back(M_T=S.shape[0], T=S.shape[1])
    return SwitchingSchedule(S, timing, label if label is not None else Path(path).stem)


# ---------------------------------------------------------------- EADF

def write_eadf_csv(path, model: ArrayModel) -> None:
    """Header ``elements,K``; then per element Re/Im interleaved for k=-K..K."""
    c = model.coefficients
    inter = np.empty((c.shape[0], 2 * c.shape[1]))
    inter[:, 0::2], inter[:, 1::2] = c.real, c.imag
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([model.num_elements, model.mode_order])
        w.writerows([[_f(v) for v in row] for row in inter])


def read_eadf_csv(path) -> ArrayModel:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
        M, K = (int(v) for v in rows[0])
        vals = np.array([[float(v) for v in r] for r in rows[1:]])
    except (ValueError, OSError, IndexError) as exc:
        raise ConfigurationError(f"cannot parse EADF file {path}: {exc}") from None
    if vals.shape != (M, 2 * (2 * K + 1)):
        raise ConfigurationError(
            f"EADF file {path}: expected {M} rows of {2 * (2 * K + 1)} values")
    return from_eadf_coefficients(vals[:, 0::2] + 1j * vals[:, 1::2])


# ---------------------------------------------------------------- ambiguity grids

def write_grid_csv(path, grid: AmbiguityGrid) -> None:
    """Long format: phi_deg, phi2_deg, dnu_hz, magnitude."""
    deg = np.degrees(grid.phi)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["phi_deg", "phi2_deg", "dnu_hz", "magnitude"])
        for i, a in enumerate(deg):
            for j, b in enumerate(deg):
                sa, sb = _f(a), _f(b)
                for k, d in enumerate(grid.dnu):
                    w.writerow([sa, sb, _f(d), _f(grid.values[i, j, k])])


def read_grid_csv(path, resolution: float = float("nan")) -> AmbiguityGrid:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    dnu = np.unique(data[:, 2])
    n_phi = np.unique(data[:, 0]).size
    vals = data[:, 3].reshape(n_phi, n_phi, dnu.size)
    return AmbiguityGrid(phi_grid(n_phi), dnu, vals, float(dnu[-1]), resolution)


def write_grid_binary(path, grid: AmbiguityGrid) -> None:
    n, _, m = grid.values.shape
    header = np.array([GRID_MAGIC, n, n, m, grid.nu_up, grid.resolution, 0, 0], dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(grid.values, dtype="<f8").tobytes())


def read_grid_binary(path) -> AmbiguityGrid:
    raw = np.fromfile(path, dtype="<f8")
    if raw.size < 8 or raw[0] != GRID_MAGIC:
        raise ConfigurationError(f"{path} is not an ambiguity grid dump")
    n, n2, m = (int(v) for v in raw[1:4])
    vals = raw[8:].reshape(n, n2, m)
    return AmbiguityGrid(phi_grid(n), np.linspace(0, raw[4], m), vals, float(raw[4]),
                         float(raw[5]))


# ---------------------------------------------------------------- anneal trace

TRACE_COLUMNS = ["iteration", "temperature", "cost", "accepted", "best"]


def write_trace_csv(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in zip(trace.iteration, trace.temperature, trace.cost, trace.accepted,
                       trace.best):
            w.writerow([row[0], _f(row[1]), _f(row[2]), int(row[3]), _f(row[4])])


def read_trace_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {"iteration": [int(r["iteration"]) for r in rows],
            "temperature": [float(r["temperature"]) for r in rows],
            "cost": [float(r["cost"]) for r in rows],
            "accepted": [bool(int(r["accepted"])) for r in rows],
            "best": [float(r["best"]) for r in rows]}


# ---------------------------------------------------------------- observations

def write_observation(path, y, sigma2: float, timing: Timing) -> None:
    header = np.array([OBS_MAGIC, timing.M_f, timing.M_R, timing.M_T, timing.T, sigma2],
                      dtype="<f8")
    y = np.asarray(y, dtype=complex)
    payload = np.empty(2 * y.size, dtype="<f8")
    payload[0::2], payload[1::2] = y.real, y.imag
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(payload.tobytes())


def read_observation(path):
    """Returns (y, sigma2, (M_f, M_R, M_T, T))."""
    raw = np.fromfile(path, dtype="<f8")
    if raw.size < 6 or raw[0] != OBS_MAGIC:
        raise ConfigurationError(f"{path} is not an observation dump")
    dims = tuple(int(v) for v in raw[1:5])
    y = raw[6::2] + 1j * raw[7::2]
    if y.size != np.prod(dims):
        raise ConfigurationError(f"{path}: payload length disagrees with header")
    return y, float(raw[5]), dims


# ---------------------------------------------------------------- spectra and tables

def write_spectrum_csv(path, sp) -> None:
    """Columns tau_ns, nu_hz, power_db (delay-major)."""
    db = sp.power_db()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau_ns", "nu_hz", "power_db"])
        for i, t in enumerate(sp.tau * 1e9):
            st = _f(t)
            for j, v in enumerate(sp.nu):
                w.writerow([st, _f(v), _f(db[i, j])])


def read_spectrum_csv(path) -> dict:
    """Returns arrays tau_ns, nu_hz and the power_db matrix (n_tau x n_nu)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    tau = np.array([float(r["tau_ns"]) for r in rows])
    nu = np.array([float(r["nu_hz"]) for r in rows])
    pw = np.array([float(r["power_db"]) for r in rows])
    n_nu = np.unique(nu).size
    return {"tau_ns": tau[::n_nu], "nu_hz": nu[:n_nu], "power_db": pw.reshape(-1, n_nu)}


RMSE_COLUMNS = ["schedule_label", "snr_db", "parameter", "rmse", "sqrt_crlb", "n_fail"]


def write_rmse_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RMSE_COLUMNS)
        for r in rows:
            w.writerow([r["schedule_label"], _f(r["snr_db"]), r["parameter"], _f(r["rmse"]),
                        _f(r["sqrt_crlb"]), int(r["n_fail"])])


def read_rmse_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{"schedule_label": r["schedule_label"], "snr_db": float(r["snr_db"]),
                 "parameter": r["parameter"], "rmse": float(r["rmse"]),
                 "sqrt_crlb": float(r["sqrt_crlb"]), "n_fail": int(r["n_fail"])}
                for r in csv.DictReader(fh)]


CRLB_COLUMNS = ["schedule_label", "snr_db", "parameter", "sqrt_crlb"]


def write_crlb_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CRLB_COLUMNS)
        for r in rows:
            w.writerow([r["schedule_label"], _f(r["snr_db"]), r["parameter"],
                        _f(r["sqrt_crlb"])])


def write_json(path, obj) -> None:
    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(type(o).__name__)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=default)
        fh.write("\n")
