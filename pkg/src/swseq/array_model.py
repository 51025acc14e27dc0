"""Azimuth-only complex array responses.

Two families are supported: synthetic geometries (element positions in
wavelengths, optional cardioid-power element taper) and effective aperture
distribution functions (EADF), i.e. a truncated Fourier series in azimuth
per element.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

TWO_PI = 2.0 * np.pi


def wrap_angle(phi):
    """Wrap angles to the principal interval (-pi, pi]."""
    phi = np.asarray(phi, dtype=float)
    w = phi - TWO_PI * np.round(phi / TWO_PI)
    return np.where(w <= -np.pi, w + TWO_PI, w)


@dataclass(frozen=True, eq=False)
class ArrayModel:
    """Complex azimuth response of an antenna array.

    Parameters
    ----------
    kind : {"ula", "uca", "synthetic", "eadf"}
    num_elements : int
    positions : ndarray, shape (M, 2)
        Element positions (x, y) in wavelengths, synthetic kinds only.
    coefficients : ndarray, shape (M, 2K+1)
        EADF coefficients for modes k = -K..K, EADF kind only.
    boresight : ndarray, shape (M,)
        Pointing direction of each element's taper (radians).
    directivity : float
        Exponent q of the taper ((1 + cos(phi - boresight)) / 2) ** q;
        0 means isotropic elements.
    """

    kind: str
    num_elements: int
    positions: np.ndarray | None = None
    coefficients: np.ndarray | None = None
    boresight: np.ndarray | None = None
    directivity: float = 0.0
    field_of_view: tuple[float, float] = field(default=(-np.pi, np.pi))

    def __post_init__(self):
        if self.num_elements < 1:
            raise ConfigurationError("array needs at least one element")
        if self.kind == "eadf":
            c = self.coefficients
            if c is None or c.ndim != 2 or c.shape[0] != self.num_elements:
                raise ConfigurationError("EADF coefficient matrix must be num_elements x (2K+1)")
            if c.shape[1] % 2 != 1:
                raise ConfigurationError(
                    f"EADF coefficient matrix needs an odd column count, got {c.shape[1]}")
        else:
            p = self.positions
            if p is None or p.shape != (self.num_elements, 2):
                raise ConfigurationError("synthetic array needs an (M, 2) position matrix")
            if self.directivity != 0 and self.directivity < 1:
                raise ConfigurationError("directivity must be 0 (isotropic) or >= 1")

    @property
    def mode_order(self) -> int:
        if self.kind != "eadf":
            raise ConfigurationError("mode order is only defined for EADF arrays")
        return (self.coefficients.shape[1] - 1) // 2

    def _taper(self, phi):
        # phi: (N,) -> gain (M, N) and its azimuth derivative
        if self.directivity == 0:
            ones = np.ones((self.num_elements, phi.size))
            return ones, np.zeros_like(ones)
        d = phi[None, :] - self.boresight[:, None]
        base = 0.5 * (1.0 + np.cos(d))
        q = self.directivity
        g = base**q
        dg = q * base ** (q - 1) * (-0.5 * np.sin(d))
        return g, dg

    def response(self, phi, derivative: bool = False):
        """Array response b(phi), shape (M,) for scalar phi or (M, N).

        With ``derivative=True`` returns ``(b, db/dphi)``.
        """
        phi = np.asarray(phi, dtype=float)
        scalar = phi.ndim == 0
        ph = wrap_angle(np.atleast_1d(phi).ravel())
        if self.kind == "eadf":
            K = self.mode_order
            k = np.arange(-K, K + 1)
            d = np.exp(1j * k[:, None] * ph[None, :])
            b = self.coefficients @ d
            db = self.coefficients @ (1j * k[:, None] * d) if derivative else None
        else:
            x, y = self.positions[:, 0:1], self.positions[:, 1:2]
            c, s = np.cos(ph)[None, :], np.sin(ph)[None, :]
            phase = TWO_PI * (x * c + y * s)
            g, dg = self._taper(ph)
            e = np.exp(1j * phase)
            b = g * e
            if derivative:
                dphase = TWO_PI * (-x * s + y * c)
                db = dg * e + 1j * dphase * b
        if scalar:
            b = b[:, 0]
            if derivative:
                db = db[:, 0]
        return (b, db) if derivative else b


def steering_vector(model: ArrayModel, phi):
    """Complex response of ``model`` toward azimuth ``phi`` (radians)."""
    return model.response(phi)


def ula(num_elements: int = 8, spacing: float = 0.5, directivity: float = 0.0) -> ArrayModel:
    """Uniform linear array along the y axis; broadside is phi = 0.

    Entry m is exp(j 2 pi spacing m sin(phi)); the response is mirror
    symmetric about the array axis, so its field of view is (-pi/2, pi/2).
    """
    pos = np.zeros((num_elements, 2))
    pos[:, 1] = spacing * np.arange(num_elements)
    return ArrayModel("ula", num_elements, positions=pos,
                      boresight=np.zeros(num_elements), directivity=directivity,
                      field_of_view=(-np.pi / 2, np.pi / 2))


def uca(num_elements: int = 8, radius: float = 0.5, directivity: float = 0.0) -> ArrayModel:
    """Uniform circular array, element m at azimuth 2 pi m / M."""
    psi = TWO_PI * np.arange(num_elements) / num_elements
    pos = radius * np.column_stack([np.cos(psi), np.sin(psi)])
    return ArrayModel("uca", num_elements, positions=pos, boresight=psi,
                      directivity=directivity)


def eadf_grid(n: int) -> np.ndarray:
    """Uniform azimuth grid of n points over (-pi, pi]."""
    return -np.pi + TWO_PI * np.arange(1, n + 1) / n


def eadf_from_samples(samples, K: int):
    """Fit an EADF to patterns sampled on :func:`eadf_grid`.

    Returns the model and the maximum absolute reconstruction error on the
    sample grid.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=complex))
    M, n = samples.shape
    if n < 2 * K + 1:
        raise ConfigurationError(
            f"underdetermined EADF fit: {n} samples for {2 * K + 1} modes")
    phi = eadf_grid(n)
    k = np.arange(-K, K + 1)
    coeffs = samples @ np.exp(-1j * phi[:, None] * k[None, :]) / n
    model = ArrayModel("eadf", M, coefficients=coeffs)
    err = float(np.max(np.abs(model.response(phi) - samples)))
    return model, err


def from_eadf_coefficients(coefficients, field_of_view=(-np.pi, np.pi)) -> ArrayModel:
    c = np.atleast_2d(np.asarray(coefficients, dtype=complex))
    return ArrayModel("eadf", c.shape[0], coefficients=c, field_of_view=tuple(field_of_view))
