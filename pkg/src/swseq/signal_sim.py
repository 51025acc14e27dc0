"""Sounder signal model: basis matrix, noisy observations, delay-Doppler spectra.

Sample ordering everywhere is frequency fastest, then RX antenna, then TX
antenna, then snapshot, i.e. ``y.reshape(T, M_T, M_R, M_f)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .array_model import ArrayModel
from .errors import ConfigurationError, DomainError
from .switching import SwitchingSchedule, Timing

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SounderConfig:
    timing: Timing = field(default_factory=Timing)
    delta_f: float = 390.625e3
    snr_db: float = 20.0

    def __post_init__(self):
        if self.delta_f <= 0:
            raise ConfigurationError("frequency spacing must be positive")

    @property
    def max_delay(self) -> float:
        """Unambiguous delay range 1 / delta_f."""
        return 1.0 / self.delta_f

    @property
    def bandwidth(self) -> float:
        return self.timing.M_f * self.delta_f

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.timing.M_f) * self.delta_f

    @property
    def n_samples(self) -> int:
        tm = self.timing
        return tm.M_f * tm.M_R * tm.M_T * tm.T


@dataclass(frozen=True, eq=False)
class PathSet:
    """Specular paths; angles in radians, delay in seconds, Doppler in Hz."""

    tau: np.ndarray
    phi_t: np.ndarray
    phi_r: np.ndarray
    nu: np.ndarray
    gamma: np.ndarray

    @classmethod
    def from_arrays(cls, tau, phi_t, phi_r, nu, gamma=None) -> "PathSet":
        tau, phi_t, phi_r, nu = (np.atleast_1d(np.asarray(v, dtype=float))
                                 for v in (tau, phi_t, phi_r, nu))
        if gamma is None:
            gamma = np.ones(tau.size, dtype=complex)
        gamma = np.atleast_1d(np.asarray(gamma, dtype=complex))
        if not (tau.size == phi_t.size == phi_r.size == nu.size == gamma.size):
            raise ConfigurationError("path parameter arrays differ in length")
        return cls(tau, phi_t, phi_r, nu, gamma)

    @classmethod
    def from_table(cls, rows) -> "PathSet":
        """Build from dicts with tau_ns, phi_t_deg, phi_r_deg, nu_hz and
        optional gain_db, phase_deg."""
        cols = {k: [] for k in ("tau", "phi_t", "phi_r", "nu", "gamma")}
        for r in rows:
            try:
                cols["tau"].append(float(r["tau_ns"]) * 1e-9)
                cols["phi_t"].append(np.radians(float(r["phi_t_deg"])))
                cols["phi_r"].append(np.radians(float(r["phi_r_deg"])))
                cols["nu"].append(float(r["nu_hz"]))
            except KeyError as exc:
                raise ConfigurationError(f"path entry is missing key {exc}") from None
            amp = 10 ** (float(r.get("gain_db", 0.0)) / 20)
            cols["gamma"].append(amp * np.exp(1j * np.radians(float(r.get("phase_deg", 0.0)))))
        return cls.from_arrays(**cols)

    @property
    def P(self) -> int:
        return self.tau.size

    @property
    def mu(self) -> np.ndarray:
        """Structural parameters, shape (P, 4): tau, phi_t, phi_r, nu."""
        return np.column_stack([self.tau, self.phi_t, self.phi_r, self.nu])

    def check(self, config: SounderConfig) -> None:
        if np.any(self.tau < 0) or np.any(self.tau >= config.max_delay):
            raise DomainError(
                f"path delays must lie in [0, {config.max_delay * 1e9:.1f} ns)")
        lim = config.timing.M_T / (2 * config.timing.T0)
        if np.any(np.abs(self.nu) >= lim):
            log.warning("Doppler beyond the design limit +-%.1f Hz", lim)


@dataclass(eq=False)
class Observation:
    y: np.ndarray
    sigma2: float
    config: SounderConfig | None = None
    schedule: SwitchingSchedule | None = None
    tx: ArrayModel | None = None
    rx: ArrayModel | None = None
    paths: PathSet | None = None

    def cube(self) -> np.ndarray:
        tm = self.config.timing
        return self.y.reshape(tm.T, tm.M_T, tm.M_R, tm.M_f)


def khatri_rao(*mats) -> np.ndarray:
    """Columnwise Kronecker product, first factor varying slowest."""
    out = mats[0]
    for m in mats[1:]:
        out = (out[:, None, :] * m[None, :, :]).reshape(-1, out.shape[1])
    return out


class BasisModel:
    """Per-domain basis factors and their parameter derivatives for a fixed
    sounder setup (arrays, timing, schedule)."""

    def __init__(self, tx: ArrayModel, rx: ArrayModel, config: SounderConfig,
                 schedule: SwitchingSchedule):
        tm = config.timing
        if schedule.timing.M_T != tm.M_T or schedule.timing.T != tm.T:
            raise ConfigurationError("schedule dimensions disagree with the sounder timing")
        if tx.num_elements != tm.M_T:
            raise ConfigurationError(
                f"TX array has {tx.num_elements} elements, config expects M_T={tm.M_T}")
        if rx.num_elements != tm.M_R:
            raise ConfigurationError(
                f"RX array has {rx.num_elements} elements, config expects M_R={tm.M_R}")
        self.tx, self.rx, self.config, self.schedule = tx, rx, config, schedule
        # firing times in sample order (snapshot-major): shape (T*M_T,)
        self.eta = schedule.eta.T.ravel()
        # the schedule may carry its own (e.g. dense) timing; RX offsets follow it
        self.rx_times = np.arange(tm.M_R) * schedule.timing.t0
        self.freqs = config.frequencies
        self.shape = (tm.T, tm.M_T, tm.M_R, tm.M_f)

    def factors(self, mu, derivative=False):
        """Return TX, RX, frequency factors (and their derivatives)."""
        mu = np.atleast_2d(mu)
        tau, phi_t, phi_r, nu = mu.T
        T = self.shape[0]
        if derivative:
            bt, dbt = self.tx.response(phi_t, derivative=True)
            br, dbr = self.rx.response(phi_r, derivative=True)
        else:
            bt, br = self.tx.response(phi_t), self.rx.response(phi_r)
        ph_t = np.exp(2j * np.pi * self.eta[:, None] * nu[None, :])
        at = np.tile(bt, (T, 1)) * ph_t
        ph_r = np.exp(2j * np.pi * self.rx_times[:, None] * nu[None, :])
        ar = br * ph_r
        af = np.exp(-2j * np.pi * self.freqs[:, None] * tau[None, :])
        if not derivative:
            return at, ar, af
        d = {
            "tau": (None, None, -2j * np.pi * self.freqs[:, None] * af),
            "phi_t": (np.tile(dbt, (T, 1)) * ph_t, None, None),
            "phi_r": (None, dbr * ph_r, None),
            "nu": (2j * np.pi * self.eta[:, None] * at, 2j * np.pi * self.rx_times[:, None] * ar,
                   None),
        }
        return (at, ar, af), d

    def basis(self, mu) -> np.ndarray:
        return khatri_rao(*self.factors(mu))

    def basis_and_derivatives(self, mu):
        """B (N x P) and dict of dB/dparam (N x P) for tau, phi_t, phi_r, nu."""
        (at, ar, af), d = self.factors(mu, derivative=True)
        B = khatri_rao(at, ar, af)
        dB = {}
        for name, (dt, dr, df) in d.items():
            total = 0
            if dt is not None:
                total = total + khatri_rao(dt, ar, af)
            if dr is not None:
                total = total + khatri_rao(at, dr, af)
            if df is not None:
                total = total + khatri_rao(at, ar, df)
            dB[name] = total
        return B, dB


def basis_matrix(tx: ArrayModel, rx: ArrayModel, config: SounderConfig,
                 schedule: SwitchingSchedule, paths: PathSet) -> np.ndarray:
    """B(mu), shape (M_f M_R M_T T, P)."""
    paths.check(config)
    return BasisModel(tx, rx, config, schedule).basis(paths.mu)


def synthesize_observation(basis, gains, snr_db: float, seed=None, noise_var=None,
                           **context) -> Observation:
    """y = B gamma + n with circular white Gaussian noise.

    Per-sample noise variance is ||B gamma||^2 / (N rho) unless
    ``noise_var`` is given explicitly.
    """
    basis = np.asarray(basis)
    gains = np.atleast_1d(np.asarray(gains, dtype=complex))
    if basis.shape[1] != gains.size:
        raise ConfigurationError(f"{gains.size} gains for {basis.shape[1]} basis columns")
    s = basis @ gains
    n_total = s.size
    if noise_var is None:
        energy = float(np.vdot(s, s).real)
        if energy == 0:
            raise DomainError("cannot set an SNR on a zero signal")
        noise_var = energy / (n_total * 10 ** (snr_db / 10))
    rng = np.random.default_rng(seed)
    noise = np.sqrt(noise_var / 2) * (rng.standard_normal(n_total)
                                      + 1j * rng.standard_normal(n_total))
    return Observation(s + noise, float(noise_var), **context)


def simulate(tx, rx, config: SounderConfig, schedule, paths: PathSet, snr_db=None,
             seed=None) -> Observation:
    """Observation of ``paths`` through the full sounder model."""
    snr_db = config.snr_db if snr_db is None else snr_db
    ctx = dict(config=config, schedule=schedule, tx=tx, rx=rx, paths=paths)
    if paths.P == 0:
        zeros = np.zeros((config.n_samples, 0), dtype=complex)
        return synthesize_observation(zeros, [], snr_db, seed, noise_var=1.0, **ctx)
    B = basis_matrix(tx, rx, config, schedule, paths)
    return synthesize_observation(B, paths.gamma, snr_db, seed, **ctx)


@dataclass(frozen=True, eq=False)
class DelayDopplerSpectrum:
    tau: np.ndarray
    nu: np.ndarray
    power: np.ndarray  # (len(tau), len(nu)), linear, peak <= 1

    def power_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10 * np.log10(self.power)

    def cell(self, tau: float, nu: float) -> tuple[int, int]:
        return int(np.argmin(np.abs(self.tau - tau))), int(np.argmin(np.abs(self.nu - nu)))


def _angle_grid(model: ArrayModel, step: float) -> np.ndarray:
    lo, hi = model.field_of_view
    n = max(int(round((hi - lo) / step)), 1)
    if hi - lo >= 2 * np.pi - 1e-12:
        return lo + (hi - lo) * np.arange(1, n + 1) / n
    return lo + (hi - lo) * (np.arange(n) + 0.5) / n


def delay_doppler_spectrum(obs: Observation, tau_grid, nu_grid,
                           angle_step: float = np.radians(3.0),
                           angle_mode: str = "max") -> DelayDopplerSpectrum:
    """Normalised matched-filter power over delay and Doppler.

    Angles are marginalised over an azimuth grid per side: ``"max"`` keeps
    the best-matching (phi_T, phi_R) pair for each cell, ``"sum"`` averages
    the matched-filter energy over the grid.
    """
    tau_grid = np.atleast_1d(np.asarray(tau_grid, dtype=float))
    nu_grid = np.atleast_1d(np.asarray(nu_grid, dtype=float))
    if tau_grid.size == 0 or nu_grid.size == 0:
        raise DomainError("delay and Doppler grids must be non-empty")
    if angle_mode not in ("max", "sum"):
        raise ConfigurationError(f"unknown angle mode {angle_mode!r}")
    cfg = obs.config
    tm = cfg.timing
    model = BasisModel(obs.tx, obs.rx, cfg, obs.schedule)
    Y = obs.cube()
    af = np.exp(-2j * np.pi * cfg.frequencies[:, None] * tau_grid[None, :])
    Yt = Y @ np.conj(af)                                      # (T, M_T, M_R, Ntau)
    eta = obs.schedule.eta                                    # (M_T, T)
    et = np.exp(-2j * np.pi * nu_grid[:, None, None] * eta.T[None, :, :])   # (Nnu, T, M_T)
    er = np.exp(-2j * np.pi * nu_grid[:, None] * model.rx_times[None, :])   # (Nnu, M_R)
    bt = obs.tx.response(_angle_grid(obs.tx, angle_step))     # (M_T, A)
    br = obs.rx.response(_angle_grid(obs.rx, angle_step))     # (M_R, B)
    nt = np.sum(np.abs(bt) ** 2, axis=0)
    nr = np.sum(np.abs(br) ** 2, axis=0)
    norm_y = float(np.vdot(obs.y, obs.y).real)
    scale = tm.T * tm.M_f * norm_y
    out = np.empty((tau_grid.size, nu_grid.size))
    for v in range(nu_grid.size):
        Z = np.einsum("tmrk,tm->kmr", Yt, et[v]) * er[v][None, None, :]    # (Ntau, M_T, M_R)
        U = np.einsum("ma,kmr->kar", np.conj(bt), Z) @ np.conj(br)        # (Ntau, A, B)
        pw = (U.real**2 + U.imag**2) / (nt[:, None] * nr[None, :])
        if angle_mode == "max":
            out[:, v] = pw.reshape(tau_grid.size, -1).max(axis=1)
        else:
            out[:, v] = pw.reshape(tau_grid.size, -1).mean(axis=1)
    if scale > 0:
        out /= scale
    return DelayDopplerSpectrum(tau_grid, nu_grid, out)


def local_maxima_2d(power: np.ndarray) -> np.ndarray:
    """Indices (i, j) of cells not exceeded by any of their 8 neighbours."""
    p = np.pad(power, 1, constant_values=-np.inf)
    core = p[1:-1, 1:-1]
    ok = np.ones_like(core, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                ok &= core >= p[1 + di:p.shape[0] - 1 + di, 1 + dj:p.shape[1] - 1 + dj]
    return np.argwhere(ok)


def local_maxima_1d(x: np.ndarray) -> np.ndarray:
    p = np.pad(x, 1, constant_values=-np.inf)
    return np.nonzero((p[1:-1] >= p[:-2]) & (p[1:-1] >= p[2:]))[0]


def spectrum_peaks(sp: DelayDopplerSpectrum, within_db: float):
    """2-D peaks within ``within_db`` of the global maximum, strongest first."""
    idx = local_maxima_2d(sp.power)
    vals = sp.power[idx[:, 0], idx[:, 1]]
    keep = vals >= sp.power.max() * 10 ** (-within_db / 10)
    idx, vals = idx[keep], vals[keep]
    return [tuple(map(int, ij)) for ij in idx[np.argsort(-vals)]]


def doppler_peaks(sp: DelayDopplerSpectrum, tau_index: int, within_db: float):
    """Doppler peaks in one delay bin within ``within_db`` of that bin's maximum."""
    row = sp.power[tau_index]
    idx = local_maxima_1d(row)
    idx = idx[row[idx] >= row.max() * 10 ** (-within_db / 10)]
    return idx[np.argsort(-row[idx])]
