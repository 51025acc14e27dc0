"""Cramer-Rao bounds for the specular path model plus a maximum-likelihood
estimator and the Monte Carlo harness that compares the two."""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .array_model import wrap_angle
from .errors import ConfigurationError, NumericalError
from .signal_sim import BasisModel, Observation, PathSet, SounderConfig, simulate

log = logging.getLogger(__name__)

STRUCT = ("tau", "phi_t", "phi_r", "nu")
FIM_PARAMS = STRUCT + ("gamma_re", "gamma_im")
# per-parameter conversion from internal units to report units (ns, deg, Hz)
REPORT_UNITS = {"tau": ("tau_ns", 1e9), "phi_t": ("phi_t_deg", 180 / np.pi),
                "phi_r": ("phi_r_deg", 180 / np.pi), "nu": ("nu_hz", 1.0)}


# --------------------------------------------------------------------------
# Fisher information

@dataclass(frozen=True, eq=False)
class FisherInformation:
    """Real FIM over (tau, phi_t, phi_r, nu, Re gamma, Im gamma) per path."""

    J: np.ndarray
    sigma2: float
    P: int

    @property
    def names(self) -> list[str]:
        return [f"{n}[{p}]" for p in range(self.P) for n in FIM_PARAMS]


def signal_jacobian(model: BasisModel, paths: PathSet) -> np.ndarray:
    """d s / d theta for all real parameters, shape (N, 6P)."""
    B, dB = model.basis_and_derivatives(paths.mu)
    cols = []
    for p in range(paths.P):
        g = paths.gamma[p]
        cols += [g * dB[n][:, p] for n in STRUCT]
        cols += [B[:, p], 1j * B[:, p]]
    return np.column_stack(cols)


def fim(tx, rx, config: SounderConfig, schedule, paths: PathSet, sigma2: float) -> FisherInformation:
    if sigma2 <= 0:
        raise ConfigurationError("noise variance must be positive")
    D = signal_jacobian(BasisModel(tx, rx, config, schedule), paths)
    J = (2.0 / sigma2) * (D.conj().T @ D).real
    return FisherInformation(J, float(sigma2), paths.P)


def crlb(f: FisherInformation | np.ndarray) -> np.ndarray:
    """Standard-deviation bounds sqrt(diag(J^-1)); inf where J is singular
    along a direction involving that parameter."""
    J = f.J if isinstance(f, FisherInformation) else np.asarray(f, dtype=float)
    scale = np.sqrt(np.abs(np.diag(J)))
    scale[scale == 0] = 1.0
    Jn = J / np.outer(scale, scale)
    w, V = np.linalg.eigh(0.5 * (Jn + Jn.T))
    null = w <= 1e-12 * max(w.max(), 0.0)
    if not null.any():
        cov = (V / w) @ V.T
        return np.sqrt(np.diag(cov)) / scale
    keep = ~null
    cov = (V[:, keep] / w[keep]) @ V[:, keep].T
    out = np.sqrt(np.abs(np.diag(cov))) / scale
    out[(V[:, null] ** 2).sum(axis=1) > 1e-6] = np.inf
    return out


def crlb_table(tx, rx, config, schedule, paths, sigma2) -> dict:
    """Structural-parameter bounds per path in report units."""
    bounds = crlb(fim(tx, rx, config, schedule, paths, sigma2)).reshape(paths.P, 6)
    return {REPORT_UNITS[n][0]: bounds[:, i] * REPORT_UNITS[n][1] for i, n in enumerate(STRUCT)}


# --------------------------------------------------------------------------
# Estimation

@dataclass
class SearchConfig:
    """Grid-search and refinement settings; None fields are derived from
    the sounder setup."""

    tau_step: float | None = None        # 1 / (2 bandwidth)
    phi_step: float = np.radians(2.0)
    nu_step: float | None = None         # 1 / (4 T T0)
    nu_range: tuple[float, float] | None = None
    max_iter: int = 50
    tol: tuple[float, float, float, float] = (1e-13, 1e-6, 1e-6, 1e-4)
    max_halvings: int = 30


@dataclass
class PathEstimate:
    tau: float
    phi_t: float
    phi_r: float
    nu: float
    gamma: complex
    iterations: int = 0
    residual: float = float("nan")
    converged: bool = True

    def as_report(self) -> dict:
        return {"tau_ns": float(self.tau * 1e9), "phi_t_deg": float(np.degrees(self.phi_t)),
                "phi_r_deg": float(np.degrees(self.phi_r)), "nu_hz": float(self.nu),
                "gain_db": float(20 * np.log10(abs(self.gamma))) if self.gamma else -np.inf,
                "phase_deg": float(np.degrees(np.angle(self.gamma))),
                "iterations": int(self.iterations), "residual": float(self.residual),
                "converged": self.converged}


def doppler_search_range(schedule) -> tuple[float, float]:
    """+-1/(2 T0) for uniform patterns, +-M_T/(2 T0) for scrambled ones."""
    tm = schedule.timing
    half = 1 / (2 * tm.T0) if schedule.is_uniform else tm.M_T / (2 * tm.T0)
    return -half, half


class _Problem:
    """Bounded nonlinear least squares on the structural parameters."""

    def __init__(self, obs: Observation, search: SearchConfig):
        self.model = BasisModel(obs.tx, obs.rx, obs.config, obs.schedule)
        self.search = search
        self.nu_range = search.nu_range or doppler_search_range(obs.schedule)
        self.fov_t = obs.tx.field_of_view
        self.fov_r = obs.rx.field_of_view
        self.tau_max = obs.config.max_delay
        self.tol = np.asarray(search.tol)

    def project(self, mu):
        mu = np.array(mu, dtype=float)
        mu[:, 0] = np.clip(mu[:, 0], 0.0, self.tau_max * (1 - 1e-12))
        for col, (lo, hi) in ((1, self.fov_t), (2, self.fov_r)):
            if hi - lo >= 2 * np.pi - 1e-12:
                mu[:, col] = wrap_angle(mu[:, col])
            else:
                mu[:, col] = np.clip(mu[:, col], lo, hi)
        mu[:, 3] = np.clip(mu[:, 3], *self.nu_range)
        return mu

    def fit_gains(self, mu, y):
        B = self.model.basis(mu)
        g, *_ = np.linalg.lstsq(B, y, rcond=None)
        r = y - B @ g
        return g, r, float(np.vdot(r, r).real)

    def refine(self, mu, y):
        """Damped Gauss-Newton with gains eliminated by least squares."""
        mu = self.project(mu)
        g, r, cost = self.fit_gains(mu, y)
        P = mu.shape[0]
        converged = False
        it = 0
        for it in range(1, self.search.max_iter + 1):
            B, dB = self.model.basis_and_derivatives(mu)
            J = np.column_stack([g[p] * dB[n][:, p] for p in range(P) for n in STRUCT])
            # project the Jacobian onto the orthogonal complement of span(B)
            coef, *_ = np.linalg.lstsq(B, J, rcond=None)
            J = J - B @ coef
            Jr = np.vstack([J.real, J.imag])
            scale = np.linalg.norm(Jr, axis=0)
            scale[scale == 0] = 1.0
            step, *_ = np.linalg.lstsq(Jr / scale, np.concatenate([r.real, r.imag]), rcond=None)
            step = (step / scale).reshape(P, 4)
            alpha = 1.0
            for _ in range(self.search.max_halvings):
                trial = self.project(mu + alpha * step)
                g2, r2, c2 = self.fit_gains(trial, y)
                if c2 <= cost:
                    break
                alpha *= 0.5
            else:
                converged = True   # no descent direction left
                break
            mu, g, r, cost = trial, g2, r2, c2
            if np.all(np.abs(alpha * step) <= self.tol):
                converged = True
                break
        return mu, g, cost, it, converged

    def grid_search(self, r):
        """Coarse matched-filter maximisation on the residual r."""
        cfg, s = self.model.config, self.search
        tm = cfg.timing
        T, M_T, M_R, M_f = self.model.shape
        R = r.reshape(T, M_T, M_R, M_f)
        tau_step = s.tau_step or 1 / (2 * cfg.bandwidth)
        taus = np.arange(0.0, self.tau_max, tau_step)
        af = np.exp(2j * np.pi * cfg.frequencies[:, None] * taus[None, :])
        Rt = R @ af
        k = int(np.argmax(np.sum(np.abs(Rt) ** 2, axis=(0, 1, 2))))
        z = Rt[..., k]                                              # (T, M_T, M_R)
        nu_step = s.nu_step or 1 / (4 * tm.T * tm.T0)
        lo, hi = self.nu_range
        n_nu = max(int(np.ceil((hi - lo) / nu_step)), 1)
        nus = lo + (np.arange(n_nu) + 0.5) * (hi - lo) / n_nu
        eta = self.model.schedule.eta                               # (M_T, T)
        et = np.exp(-2j * np.pi * nus[:, None, None] * eta.T[None])  # (Nnu, T, M_T)
        er = np.exp(-2j * np.pi * nus[:, None] * self.model.rx_times[None, :])
        Z = np.einsum("tmr,vtm->vmr", z, et) * er[:, None, :]      # (Nnu, M_T, M_R)
        phis_t = _grid(self.fov_t, s.phi_step)
        phis_r = _grid(self.fov_r, s.phi_step)
        bt = self.model.tx.response(phis_t)
        br = self.model.rx.response(phis_r)
        U = np.conj(bt).T[None] @ Z @ np.conj(br)[None]             # (Nnu, A, B)
        pw = (U.real**2 + U.imag**2) / np.outer(
            np.sum(np.abs(bt) ** 2, 0), np.sum(np.abs(br) ** 2, 0))[None]
        v, a, b = np.unravel_index(int(np.argmax(pw)), pw.shape)
        return np.array([taus[k], phis_t[a], phis_r[b], nus[v]])


def _grid(fov, step):
    lo, hi = fov
    n = max(int(np.ceil((hi - lo) / step)), 1)
    if hi - lo >= 2 * np.pi - 1e-12:
        return lo + (hi - lo) * np.arange(1, n + 1) / n
    return lo + (hi - lo) * (np.arange(n) + 0.5) / n


def estimate(obs: Observation, P: int, search: SearchConfig | None = None) -> list[PathEstimate]:
    """Successive extraction of P paths followed by joint refinement."""
    if P < 1:
        raise ConfigurationError("path count must be at least 1")
    search = search or SearchConfig()
    prob = _Problem(obs, search)
    y = obs.y
    mus = np.empty((0, 4))
    r = y
    its = 0
    ok = True
    for _ in range(P):
        mu0 = prob.grid_search(r)
        if mus.shape[0]:
            # fit the new path against the residual of the paths found so far
            m, _, _, it, conv = prob.refine(mu0[None], r)
        else:
            m, _, _, it, conv = prob.refine(mu0[None], y)
        its += it
        ok &= conv
        mus = np.vstack([mus, m])
        _, r, _ = prob.fit_gains(mus, y)
    if P > 1:
        B = prob.model.basis(mus)
        if np.linalg.cond(B) > 1e8:
            warnings.warn("paths are not numerically separable; basis is ill-conditioned",
                          RuntimeWarning, stacklevel=2)
        mus, g, cost, it, conv = prob.refine(mus, y)
        its += it
        ok = conv
    else:
        g, _, cost = prob.fit_gains(mus, y)
    if not ok:
        log.info("estimator stopped at the iteration limit")
    order = np.argsort(-np.abs(g))
    return [PathEstimate(*mus[i], complex(g[i]), its, cost, bool(ok)) for i in order]


def match_paths(estimates: list[PathEstimate], truth: PathSet, config: SounderConfig):
    """Pair estimates with true paths (Hungarian on a normalised distance).

    Returns an index array ``idx`` with estimates[idx[p]] matched to path p.
    """
    est = np.array([[e.tau, e.phi_t, e.phi_r, e.nu] for e in estimates])
    tm = config.timing
    scales = np.array([1 / config.bandwidth, 0.1, 0.1, 1 / (tm.T * tm.T0)])
    d = np.zeros((truth.P, len(estimates)))
    for p, mu in enumerate(truth.mu):
        diff = est - mu
        diff[:, 1:3] = wrap_angle(diff[:, 1:3])
        d[p] = np.sum((diff / scales) ** 2, axis=1)
    rows, cols = linear_sum_assignment(d)
    idx = np.empty(truth.P, dtype=int)
    idx[rows] = cols
    return idx


def parameter_errors(estimates, truth: PathSet, config) -> np.ndarray:
    """Errors (P, 4) in internal units; angles wrapped, Doppler not unwrapped."""
    idx = match_paths(estimates, truth, config)
    err = np.empty((truth.P, 4))
    for p in range(truth.P):
        e = estimates[idx[p]]
        err[p] = [e.tau - truth.tau[p], wrap_angle(e.phi_t - truth.phi_t[p]),
                  wrap_angle(e.phi_r - truth.phi_r[p]), e.nu - truth.nu[p]]
    return err


# --------------------------------------------------------------------------
# Monte Carlo

@dataclass
class MonteCarloSetup:
    tx: object
    rx: object
    config: SounderConfig
    search: SearchConfig = field(default_factory=SearchConfig)


def _trial_seed(seed, *keys):
    return np.random.SeedSequence([int(seed), *map(int, keys)])


def _run_cell(args):
    setup, schedule, scenario, snr_db, n_trials, seed, keys = args
    sq = np.zeros((scenario.P, 4))
    n_ok = 0
    n_fail = 0
    for trial in range(n_trials):
        obs = simulate(setup.tx, setup.rx, setup.config, schedule, scenario, snr_db,
                       seed=_trial_seed(seed, *keys, trial))
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                est = estimate(obs, scenario.P, setup.search)
            err = parameter_errors(est, scenario, setup.config)
        except (np.linalg.LinAlgError, NumericalError, ValueError):
            n_fail += 1
            continue
        if not all(e.converged for e in est):
            n_fail += 1
        sq += err**2
        n_ok += 1
    rmse = np.sqrt(sq / n_ok) if n_ok else np.full((scenario.P, 4), np.nan)
    return rmse, n_fail


def montecarlo_rmse(scenario: PathSet, schedules, snr_list, n_trials: int, seed: int,
                    setup: MonteCarloSetup, workers: int = 1) -> list[dict]:
    """RMSE per (schedule, SNR, parameter) with the matching sqrt-CRLB.

    Rows carry report units (ns, deg, Hz); ``n_fail`` counts trials whose
    estimator raised or did not converge (non-converged estimates still
    enter the RMSE).
    """
    if n_trials < 1:
        raise ConfigurationError("n_trials must be at least 1")
    cells = [(setup, sch, scenario, float(snr), int(n_trials), seed, (i, j))
             for i, sch in enumerate(schedules) for j, snr in enumerate(snr_list)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_cell, cells))
    else:
        results = [_run_cell(c) for c in cells]
    rows = []
    for (_, sch, _, snr, _, _, _), (rmse, n_fail) in zip(cells, results):
        probe = simulate(setup.tx, setup.rx, setup.config, sch, scenario, snr, seed=0)
        bounds = crlb_table(setup.tx, setup.rx, setup.config, sch, scenario, probe.sigma2)
        for p in range(scenario.P):
            for i, name in enumerate(STRUCT):
                label, unit = REPORT_UNITS[name]
                param = label if scenario.P == 1 else f"{label}[{p}]"
                rows.append({"schedule_label": sch.label, "snr_db": snr, "parameter": param,
                             "rmse": float(rmse[p, i] * unit),
                             "sqrt_crlb": float(bounds[label][p]), "n_fail": int(n_fail)})
    return rows
