"""Figure rendering for the command-line reports (files only, Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "figure.dpi": 150,
    "savefig.bbox": "tight",
}


def _save(fig, path):
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_ambiguity(grid, path, phi_ref: float = 0.0, floor_db: float = -30.0):
    """|X_T(phi, phi_ref, dnu)| in dB over azimuth and Doppler difference.

    The negative-Doppler half is filled in from the symmetry
    |X_T(phi, phi', -dnu)| = |X_T(phi', phi, dnu)|.
    """
    j = int(np.argmin(np.abs(grid.phi - phi_ref)))
    pos = grid.values[:, j, :]
    neg = grid.values[j, :, :][:, :0:-1]
    img = 20 * np.log10(np.maximum(np.hstack([neg, pos]), 10 ** (floor_db / 20)))
    dnu = np.concatenate([-grid.dnu[:0:-1], grid.dnu])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        m = ax.pcolormesh(dnu, np.degrees(grid.phi), img, shading="nearest",
                          vmin=floor_db, vmax=0, cmap="viridis")
        ax.set_xlabel("Doppler difference (Hz)")
        ax.set_ylabel("Azimuth DoD (deg)")
        fig.colorbar(m, ax=ax, label="|X_T| (dB)")
        return _save(fig, path)


def plot_trace(trace, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        ax.plot(trace.iteration, trace.cost, color="0.7", lw=0.8, label="candidate")
        ax.plot(trace.iteration, trace.best, color="C0", label="best so far")
        ax.set_xlabel("Iteration")
        ax.set_ylabel("cost f_p")
        ax2 = ax.twinx()
        ax2.semilogy(trace.iteration, trace.temperature, color="C3", ls="--")
        ax2.set_ylabel("Temperature", color="C3")
        ax.legend(loc="upper right")
        return _save(fig, path)


def plot_spectrum(sp, path, floor_db: float = -30.0):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        db = np.maximum(sp.power_db() - np.nanmax(sp.power_db()), floor_db)
        m = ax.pcolormesh(sp.nu, sp.tau * 1e9, db, shading="nearest", vmin=floor_db, vmax=0)
        ax.set_xlabel("Doppler (Hz)")
        ax.set_ylabel("Delay (ns)")
        fig.colorbar(m, ax=ax, label="power (dB)")
        return _save(fig, path)


def plot_rmse(rows, path, parameters=("phi_t_deg", "nu_hz")):
    """RMSE (markers) against sqrt-CRLB (lines) versus SNR, one panel per
    parameter."""
    labels = sorted({r["schedule_label"] for r in rows})
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(parameters), figsize=(3.2 * len(parameters), 3.0))
        for ax, par in zip(np.atleast_1d(axes), parameters):
            for c, lab in enumerate(labels):
                sel = sorted((r for r in rows if r["schedule_label"] == lab
                              and r["parameter"].startswith(par)), key=lambda r: r["snr_db"])
                if not sel:
                    continue
                snr = [r["snr_db"] for r in sel]
                ax.semilogy(snr, [r["rmse"] for r in sel], "o", color=f"C{c}",
                            label=f"RMSE {lab}")
                ax.semilogy(snr, [r["sqrt_crlb"] for r in sel], "-", color=f"C{c}",
                            label=f"sqrt CRLB {lab}")
            ax.set_xlabel("SNR (dB)")
            ax.set_ylabel(par)
            ax.grid(True, which="both", alpha=0.3)
        np.atleast_1d(axes)[0].legend()
        fig.tight_layout()
        return _save(fig, path)
