"""Spatio-temporal ambiguity function and the sidelobe metrics built on it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array_model import ArrayModel, eadf_grid, wrap_angle
from .errors import ConfigurationError, DomainError
from .switching import SwitchingSchedule, Timing

NSL_FLOOR_DB = -300.0


def phi_grid(n: int) -> np.ndarray:
    """n azimuths uniformly spaced over (-pi, pi]."""
    return eadf_grid(n)


def dnu_grid(n: int, nu_up: float) -> np.ndarray:
    return np.linspace(0.0, nu_up, n)


@dataclass(frozen=True)
class CostParams:
    p: int = 6
    n_phi: int = 72
    n_nu: int = 128
    nu_up: float | None = None  # None: M_T / (2 T0) of the schedule being evaluated

    def __post_init__(self):
        if self.p < 2 or self.p % 2:
            raise ConfigurationError("cost exponent p must be an even integer >= 2")
        if self.n_phi < 8 or self.n_nu < 8:
            raise ConfigurationError("ambiguity grids need at least 8 points per axis")
        if self.nu_up is not None and self.nu_up <= 0:
            raise ConfigurationError("nu_up must be positive")

    def resolve_nu_up(self, timing: Timing) -> float:
        return timing.nu_up if self.nu_up is None else float(self.nu_up)


@dataclass(frozen=True, eq=False)
class AmbiguityGrid:
    """|X_T| sampled on phi x phi2 x dnu.

    ``resolution`` is the Doppler Rayleigh cell 1 / (T T0) of the schedule.
    """

    phi: np.ndarray
    dnu: np.ndarray
    values: np.ndarray
    nu_up: float
    resolution: float

    @property
    def shape(self):
        return self.values.shape


def _check_dims(tx: ArrayModel, eta: np.ndarray):
    eta = np.asarray(eta, dtype=float)
    if eta.ndim != 2 or eta.shape[0] != tx.num_elements:
        raise ConfigurationError(
            f"timing matrix has {eta.shape[0] if eta.ndim == 2 else '?'} rows, "
            f"TX array has {tx.num_elements} elements")
    return eta


def spatio_temporal_vector(tx: ArrayModel, eta, phi: float, nu: float) -> np.ndarray:
    """Stacked TX responses b_TV(phi) * exp(j 2 pi nu eta[:, t]), snapshot-major."""
    eta = _check_dims(tx, eta)
    b = tx.response(phi)
    return (b[:, None] * np.exp(2j * np.pi * nu * eta)).T.ravel()


def x_t_raw(tx: ArrayModel, eta, phi: float, nu: float, phi2: float, nu2: float) -> complex:
    """X_T from explicit (phi, nu) and (phi2, nu2) space-time vectors."""
    a = spatio_temporal_vector(tx, eta, phi, nu)
    b = spatio_temporal_vector(tx, eta, phi2, nu2)
    return complex(np.vdot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def doppler_weights(eta, dnu) -> np.ndarray:
    """W_m(dnu) = sum_t exp(j 2 pi dnu eta[m, t]); shape (M_T, len(dnu))."""
    eta = np.asarray(eta, dtype=float)
    dnu = np.atleast_1d(np.asarray(dnu, dtype=float))
    return np.exp(2j * np.pi * eta[:, :, None] * dnu[None, None, :]).sum(axis=1)


def x_t_value(tx: ArrayModel, eta, phi: float, phi2: float, dnu: float) -> complex:
    """Spatio-temporal ambiguity X_T(phi, phi2, dnu) with dnu = nu2 - nu."""
    eta = _check_dims(tx, eta)
    b1 = tx.response(phi)
    b2 = tx.response(phi2)
    num = np.sum(np.conj(b1) * b2 * doppler_weights(eta, dnu)[:, 0])
    den = eta.shape[1] * np.linalg.norm(b1) * np.linalg.norm(b2)
    return complex(num / den)


class AmbiguityEvaluator:
    """Factorised evaluation of |X_T| over a fixed (phi, phi2, dnu) grid.

    The spatial factor C_m(phi, phi2) is computed once per array; each
    schedule only changes the Doppler factor W_m(dnu).
    """

    def __init__(self, tx: ArrayModel, params: CostParams, timing: Timing):
        if tx.num_elements != timing.M_T:
            raise ConfigurationError(
                f"TX array has {tx.num_elements} elements but timing has M_T={timing.M_T}")
        self.tx = tx
        self.params = params
        self.timing = timing
        self.phi = phi_grid(params.n_phi)
        self.nu_up = params.resolve_nu_up(timing)
        self.dnu = dnu_grid(params.n_nu, self.nu_up)
        b = tx.response(self.phi)
        norm = np.linalg.norm(b, axis=0)
        bn = np.divide(b, norm, out=np.zeros_like(b), where=norm > 0)
        n = params.n_phi
        self.C = (np.conj(bn).T[:, None, :] * bn.T[None, :, :]).reshape(n * n, tx.num_elements)
        dphi = 2 * np.pi / n
        wq = np.full(params.n_nu, self.dnu[1] - self.dnu[0])
        wq[[0, -1]] *= 0.5
        self._quad = wq * dphi * dphi
        self._phase = 2j * np.pi * self.dnu

    def weights(self, eta) -> np.ndarray:
        """Doppler factor W / T, shape (M_T, n_nu)."""
        eta = np.asarray(eta, dtype=float)
        return np.exp(eta[:, :, None] * self._phase).sum(axis=1) / eta.shape[1]

    def row_weights(self, eta_row) -> np.ndarray:
        return np.exp(np.asarray(eta_row)[:, None] * self._phase).sum(axis=0) / len(eta_row)

    def numerator(self, W) -> np.ndarray:
        return self.C @ W

    def cost_from_numerator(self, num, p=None) -> float:
        p = self.params.p if p is None else p
        pw = num.real**2 + num.imag**2
        if p != 2:
            pw = pw ** (p // 2)
        return float(pw.sum(axis=0) @ self._quad)

    def cost(self, eta, p=None) -> float:
        return self.cost_from_numerator(self.numerator(self.weights(eta)), p)

    def grid(self, eta) -> AmbiguityGrid:
        n = self.params.n_phi
        vals = np.abs(self.numerator(self.weights(eta))).reshape(n, n, -1)
        return AmbiguityGrid(self.phi, self.dnu, vals, self.nu_up,
                             1.0 / (self.timing.T * self.timing.T0))


def x_t_grid(tx: ArrayModel, schedule: SwitchingSchedule,
             params: CostParams | None = None) -> AmbiguityGrid:
    """Sample |X_T| on the cost grid for ``schedule``."""
    params = params or CostParams()
    return AmbiguityEvaluator(tx, params, schedule.timing).grid(schedule.eta)


def cost_fp(grid: AmbiguityGrid, p: int = 6) -> float:
    """Trapezoidal quadrature of |X_T|^p over the design region.

    The azimuth axes are periodic, so the trapezoid rule reduces to a
    plain sum times the step.
    """
    if p < 2 or p % 2:
        raise ConfigurationError("cost exponent p must be an even integer >= 2")
    dphi = 2 * np.pi / grid.phi.size
    inner = (grid.values**p).sum(axis=(0, 1)) * dphi * dphi
    return float(np.trapezoid(inner, grid.dnu))


def nsl(grid: AmbiguityGrid, dphi: float = np.radians(10.0), dnu: float | None = None,
        region: str = "diagonal") -> float:
    """Normalised sidelobe level in dB.

    region:
      "diagonal" -- phi == phi2 slice, sidelobes beyond ``dnu`` of zero Doppler.
      "doppler"  -- every azimuth pair, sidelobes beyond ``dnu`` of zero
                    Doppler (the zero-Doppler slab is the static array
                    correlation, which no schedule changes).
      "full"     -- every grid point outside |phi2 - phi| <= dphi and dnu.
    ``dnu`` defaults to the grid's Doppler resolution 1 / (T T0).
    """
    if dnu is None:
        if not np.isfinite(grid.resolution):
            raise ConfigurationError("grid carries no Doppler resolution; pass dnu explicitly")
        dnu = grid.resolution
    beyond = grid.dnu > dnu
    if region == "diagonal":
        idx = np.arange(grid.phi.size)
        vals = grid.values[idx, idx][:, beyond]
    elif region == "doppler":
        vals = grid.values[:, :, beyond]
    elif region == "full":
        sep = np.abs(wrap_angle(grid.phi[None, :] - grid.phi[:, None])) > dphi
        mask = sep[:, :, None] | beyond[None, None, :]
        vals = grid.values[mask]
    else:
        raise ConfigurationError(f"unknown NSL region {region!r}")
    if vals.size == 0:
        raise DomainError("main-lobe exclusion covers the whole grid; no sidelobes left")
    peak = float(vals.max())
    if peak <= 0:
        return NSL_FLOOR_DB
    return max(20 * np.log10(peak), NSL_FLOOR_DB)


def ridge_profile(grid: AmbiguityGrid) -> np.ndarray:
    """Maximum of |X_T| over all azimuth pairs for each Doppler difference."""
    return grid.values.max(axis=(0, 1))


def x_tot_value(tx, rx, config, schedule, mu1, mu2) -> complex:
    """Normalised inner product of two full basis columns.

    ``mu1`` and ``mu2`` are (tau, phi_T, phi_R, nu) tuples.
    """
    from .signal_sim import PathSet, basis_matrix

    paths = PathSet.from_arrays(*np.column_stack([mu1, mu2]))
    B = basis_matrix(tx, rx, config, schedule, paths)
    a, b = B[:, 0], B[:, 1]
    return complex(np.vdot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))
