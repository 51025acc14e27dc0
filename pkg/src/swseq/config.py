"""JSON run configuration.

Keys carry their units at the boundary (``_s``, ``_hz``, ``_deg``, ``_ns``,
``_wl`` for wavelengths); everything is converted to SI and radians here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ambiguity import CostParams
from .annealer import AnnealConfig
from .array_model import ArrayModel, ula, uca
from .errors import ConfigurationError
from .signal_sim import PathSet, SounderConfig
from .switching import Timing

DEFAULT_SNR_LIST = [-30.0, -25.0, -20.0, -15.0, -10.0, 0.0]


@dataclass
class Scenario:
    paths: PathSet
    snr_db: list
    n_trials: int = 200
    schedules: list = field(default_factory=lambda: ["uniform", "annealed"])


@dataclass
class RunConfig:
    sounder: SounderConfig = field(default_factory=SounderConfig)
    tx: ArrayModel = field(default_factory=ula)
    rx: ArrayModel = field(default_factory=uca)
    anneal: AnnealConfig = field(default_factory=AnnealConfig)
    initial: str = "uniform"
    chains: int = 1
    nsl_dphi: float = np.radians(10.0)
    nsl_dnu: float | None = None
    scenario: Scenario | None = None
    output_dir: Path = Path("out")
    seed: int = 0
    base_dir: Path = Path(".")

    @property
    def timing(self) -> Timing:
        return self.sounder.timing

    def require_scenario(self) -> Scenario:
        if self.scenario is None:
            raise ConfigurationError("configuration has no scenario block")
        return self.scenario


def _array(block: dict | None, default: ArrayModel, base: Path) -> ArrayModel:
    if not block:
        return default
    from .fileio import read_eadf_csv

    kind = block.get("kind", default.kind)
    n = int(block.get("num_elements", default.num_elements))
    q = float(block.get("directivity", 0.0))
    if kind == "ula":
        return ula(n, float(block.get("spacing_wl", 0.5)), q)
    if kind == "uca":
        return uca(n, float(block.get("radius_wl", 0.5)), q)
    if kind == "eadf":
        if "path" not in block:
            raise ConfigurationError("EADF array block needs a 'path'")
        p = base / block["path"]
        if not p.exists():
            raise ConfigurationError(f"EADF file {p} does not exist")
        model = read_eadf_csv(p)
        fov = block.get("field_of_view_deg")
        if fov:
            model = ArrayModel("eadf", model.num_elements, coefficients=model.coefficients,
                               field_of_view=tuple(np.radians(fov)))
        return model
    raise ConfigurationError(f"unknown array kind {kind!r}")


def _timing(block: dict) -> Timing:
    M_T, M_R = int(block.get("M_T", 8)), int(block.get("M_R", 8))
    M_f, T = int(block.get("M_f", 129)), int(block.get("T", 4))
    T0 = float(block.get("T0_s", 620e-6))
    t1 = float(block.get("t1_s", T0 / M_T))
    t0 = float(block.get("t0_s", t1 / M_R))
    return Timing(t0=t0, t1=t1, T0=T0, M_T=M_T, M_R=M_R, M_f=M_f, T=T)


def from_dict(d: dict, base_dir: Path = Path(".")) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigurationError("configuration must be a JSON object")
    snd = d.get("sounder", {})
    timing = _timing(snd)
    sounder = SounderConfig(timing, float(snd.get("delta_f_hz", 390.625e3)),
                            float(snd.get("snr_db", 20.0)))
    tx = _array(d.get("tx_array"), ula(timing.M_T), base_dir)
    rx = _array(d.get("rx_array"), uca(timing.M_R), base_dir)
    if tx.num_elements != timing.M_T:
        raise ConfigurationError(f"TX array has {tx.num_elements} elements but M_T={timing.M_T}")
    if rx.num_elements != timing.M_R:
        raise ConfigurationError(f"RX array has {rx.num_elements} elements but M_R={timing.M_R}")
    cost = d.get("cost", {})
    an = d.get("anneal", {})
    seed = int(d.get("seed", 0))
    p = int(an.get("p", cost.get("p", 6)))
    params = CostParams(p=p, n_phi=int(cost.get("n_phi", 72)), n_nu=int(cost.get("n_nu", 128)),
                        nu_up=cost.get("nu_up_hz"))
    anneal = AnnealConfig(p=p, temp0=float(an.get("temp0", 100.0)),
                          alpha=float(an.get("alpha", 0.97)), k_max=int(an.get("k_max", 500)),
                          epsilon_th=float(an.get("epsilon_th", 0.0)),
                          seed=int(an.get("seed", seed)), cost_params=params)
    scenario = None
    if d.get("scenario") is not None:
        sc = d["scenario"]
        scenario = Scenario(PathSet.from_table(sc.get("paths", [])),
                            [float(v) for v in sc.get("snr_db", DEFAULT_SNR_LIST)],
                            int(sc.get("n_trials", 200)),
                            list(sc.get("schedules", ["uniform", "annealed"])))
    nsl = d.get("nsl", {})
    return RunConfig(sounder, tx, rx, anneal, str(an.get("initial", "uniform")),
                     int(an.get("chains", 1)), np.radians(float(nsl.get("dphi_deg", 10.0))),
                     nsl.get("dnu_hz"), scenario, Path(d.get("output_dir", "out")), seed,
                     base_dir)


def load(path) -> RunConfig:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read configuration {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"configuration {path} is not valid JSON: {exc}") from None
    return from_dict(d, path.parent)


def default_dict() -> dict:
    """The shipped default configuration."""
    return {
        "sounder": {**Timing().to_dict(), "delta_f_hz": 390.625e3, "snr_db": 20.0},
        "tx_array": {"kind": "ula", "num_elements": 8, "spacing_wl": 0.5},
        "rx_array": {"kind": "uca", "num_elements": 8, "radius_wl": 0.5},
        "anneal": {"p": 6, "temp0": 100.0, "alpha": 0.97, "k_max": 500, "epsilon_th": 0.0,
                   "initial": "uniform", "chains": 1},
        "cost": {"n_phi": 72, "n_nu": 128, "nu_up_hz": None},
        "nsl": {"dphi_deg": 10.0, "dnu_hz": None},
        "scenario": {"paths": [dict(tau_ns=601.1, phi_t_deg=11.5, phi_r_deg=59.6, nu_hz=4032.3)],
                     "snr_db": DEFAULT_SNR_LIST, "n_trials": 200,
                     "schedules": ["uniform", "annealed"]},
        "output_dir": "out",
        "seed": 0,
    }
