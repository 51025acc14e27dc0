"""Command-line front end: design, evaluate, spectrum, montecarlo, crlb, simulate."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import fileio
from .ambiguity import AmbiguityEvaluator, CostParams, nsl
from .annealer import anneal, best_of_chains
from .errors import ConfigurationError, FeasibilityError, SwseqError
from .estimation import (MonteCarloSetup, STRUCT, REPORT_UNITS, crlb_table,
                         montecarlo_rmse)
from .signal_sim import delay_doppler_spectrum, simulate
from .switching import dense_schedule, random_schedule, uniform_schedule

log = logging.getLogger("swseq")


def _cost_params(cfg) -> CostParams:
    return cfg.anneal.cost_params


def _metrics(cfg, schedule) -> dict:
    ev = AmbiguityEvaluator(cfg.tx, _cost_params(cfg), schedule.timing)
    grid = ev.grid(schedule.eta)
    p = cfg.anneal.p
    out = {"f_p": ev.cost(schedule.eta, p), "p": p,
           "nsl_db": nsl(grid, cfg.nsl_dphi, cfg.nsl_dnu, "diagonal"),
           "nsl_doppler_db": nsl(grid, cfg.nsl_dphi, cfg.nsl_dnu, "doppler")}
    return out, grid


def _design(cfg, seed, workers=1):
    tm = cfg.timing
    if tm.M_T < 2:
        raise FeasibilityError("M_T < 2: a single TX antenna has no switching freedom")
    initial = (random_schedule(tm, seed) if cfg.initial == "random"
               else uniform_schedule(tm))
    acfg = replace(cfg.anneal, seed=seed)
    if cfg.chains > 1:
        seeds = np.random.SeedSequence(seed).generate_state(cfg.chains)
        best, trace = best_of_chains(initial, cfg.tx, acfg, seeds, workers)
    else:
        best, trace = anneal(initial, cfg.tx, acfg)
    return initial, best, trace


def _resolve_schedule(cfg, name, seed):
    """Schedule from a keyword (uniform, dense, random, annealed) or CSV path."""
    tm = cfg.timing
    if name in (None, "uniform"):
        return uniform_schedule(tm)
    if name == "dense":
        return dense_schedule(tm, 8)
    if name == "random":
        return random_schedule(tm, seed)
    if name == "annealed":
        return _design(cfg, seed)[1]
    p = Path(name)
    if not p.is_absolute() and not p.exists():
        p = cfg.base_dir / p
    if not p.exists():
        raise ConfigurationError(f"schedule file {name} does not exist")
    return fileio.read_schedule_csv(p, tm)


def cmd_design(cfg, args, out: Path) -> dict:
    t = time.perf_counter()
    initial, best, trace = _design(cfg, args.seed, args.workers)
    runtime = time.perf_counter() - t
    m0, _ = _metrics(cfg, initial)
    m1, grid = _metrics(cfg, best)
    fileio.write_schedule_csv(out / "schedule.csv", best)
    fileio.write_trace_csv(out / "trace.csv", trace)
    summary = {"initial_f_p": m0["f_p"], "final_f_p": m1["f_p"], "p": cfg.anneal.p,
               "initial_nsl_db": m0["nsl_db"], "nsl_db": m1["nsl_db"],
               "initial_nsl_doppler_db": m0["nsl_doppler_db"],
               "nsl_doppler_db": m1["nsl_doppler_db"], "iterations": len(trace),
               "runtime_s": runtime, "seed": args.seed}
    fileio.write_json(out / "summary.json", summary)
    if args.plots:
        from . import plotting
        plotting.plot_trace(trace, out / "trace.png")
        plotting.plot_ambiguity(grid, out / "ambiguity.png")
    return summary


def cmd_evaluate(cfg, args, out: Path) -> dict:
    if args.schedule is None:
        raise ConfigurationError("evaluate needs --schedule")
    sch = _resolve_schedule(cfg, args.schedule, args.seed)
    metrics, grid = _metrics(cfg, sch)
    fileio.write_grid_csv(out / "grid.csv", grid)
    fileio.write_grid_binary(out / "grid.bin", grid)
    fileio.write_json(out / "metrics.json", metrics)
    if args.plots:
        from . import plotting
        plotting.plot_ambiguity(grid, out / "ambiguity.png")
    return metrics


def _spectrum_grids(cfg):
    tm = cfg.timing
    taus = np.arange(0.0, cfg.sounder.max_delay, 1 / (2 * cfg.sounder.bandwidth))
    step = 1 / (4 * tm.T * tm.T0)
    half = int(np.floor(tm.M_T / (2 * tm.T0) / step))
    return taus, np.arange(-half, half) * step


def cmd_spectrum(cfg, args, out: Path) -> dict:
    sc = cfg.require_scenario()
    sch = _resolve_schedule(cfg, args.schedule, args.seed)
    obs = simulate(cfg.tx, cfg.rx, cfg.sounder, sch, sc.paths, cfg.sounder.snr_db, args.seed)
    sp = delay_doppler_spectrum(obs, *_spectrum_grids(cfg))
    fileio.write_spectrum_csv(out / "spectrum.csv", sp)
    if args.plots:
        from . import plotting
        plotting.plot_spectrum(sp, out / "spectrum.png")
    i, j = np.unravel_index(int(np.argmax(sp.power)), sp.power.shape)
    return {"schedule": sch.label, "peak_tau_ns": sp.tau[i] * 1e9, "peak_nu_hz": sp.nu[j]}


def _schedules(cfg, seed):
    return [_resolve_schedule(cfg, s, seed) for s in cfg.require_scenario().schedules]


def cmd_montecarlo(cfg, args, out: Path) -> dict:
    sc = cfg.require_scenario()
    if sc.paths.P == 0:
        raise ConfigurationError("scenario has no paths")
    setup = MonteCarloSetup(cfg.tx, cfg.rx, cfg.sounder)
    rows = montecarlo_rmse(sc.paths, _schedules(cfg, args.seed), sc.snr_db, sc.n_trials,
                           args.seed, setup, workers=args.workers)
    fileio.write_rmse_csv(out / "rmse.csv", rows)
    if args.plots:
        from . import plotting
        plotting.plot_rmse(rows, out / "rmse.png")
    return {"rows": len(rows)}


def cmd_crlb(cfg, args, out: Path) -> dict:
    sc = cfg.require_scenario()
    if sc.paths.P == 0:
        raise ConfigurationError("scenario has no paths")
    rows = []
    for sch in _schedules(cfg, args.seed):
        for snr in sc.snr_db:
            obs = simulate(cfg.tx, cfg.rx, cfg.sounder, sch, sc.paths, snr, seed=0)
            bounds = crlb_table(cfg.tx, cfg.rx, cfg.sounder, sch, sc.paths, obs.sigma2)
            for p in range(sc.paths.P):
                for name in STRUCT:
                    label = REPORT_UNITS[name][0]
                    rows.append({"schedule_label": sch.label, "snr_db": snr,
                                 "parameter": label if sc.paths.P == 1 else f"{label}[{p}]",
                                 "sqrt_crlb": float(bounds[label][p])})
    fileio.write_crlb_csv(out / "crlb.csv", rows)
    return {"rows": len(rows)}


def cmd_simulate(cfg, args, out: Path) -> dict:
    sc = cfg.require_scenario()
    sch = _resolve_schedule(cfg, args.schedule, args.seed)
    obs = simulate(cfg.tx, cfg.rx, cfg.sounder, sch, sc.paths, cfg.sounder.snr_db, args.seed)
    fileio.write_observation(out / "observation.bin", obs.y, obs.sigma2, cfg.timing)
    fileio.write_schedule_csv(out / "schedule.csv", sch)
    return {"samples": int(obs.y.size), "sigma2": obs.sigma2}


COMMANDS = {"design": cmd_design, "evaluate": cmd_evaluate, "spectrum": cmd_spectrum,
            "montecarlo": cmd_montecarlo, "crlb": cmd_crlb, "simulate": cmd_simulate}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swseq", description=__doc__)
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="JSON run configuration")
    ap.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
    ap.add_argument("--workers", type=int, default=1, help="cap on worker processes")
    ap.add_argument("--out", type=Path, default=None, help="output directory")
    ap.add_argument("--schedule", default=None,
                    help="schedule CSV or one of uniform, dense, random, annealed")
    ap.add_argument("--no-plots", dest="plots", action="store_false",
                    help="skip rendering figures")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = (config_mod.load(args.config) if args.config
               else config_mod.from_dict(config_mod.default_dict()))
        if args.seed is None:
            args.seed = cfg.seed
        args.workers = max(1, args.workers)
        out = args.out or cfg.output_dir
        out.mkdir(parents=True, exist_ok=True)
        result = COMMANDS[args.command](cfg, args, out)
    except SwseqError as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        print(json.dumps(err), file=sys.stderr)
        return exc.exit_code
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": 4}),
              file=sys.stderr)
        return 4
    print(json.dumps(result, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
