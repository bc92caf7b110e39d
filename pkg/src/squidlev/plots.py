"""Matplotlib figures rendered to files next to the delimited output.

Each function draws one figure and saves it; none of them show windows
(the Agg backend is forced on import so the CLI works headless).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "field_map_figure",
    "coupling_figure",
    "pickup_optimum_figure",
    "transmissibility_figure",
    "filter_figure",
    "budget_figure",
    "timeseries_figure",
    "psd_figure",
]


def _save(fig, path) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def field_map_figure(quad, half_width: float, path, coils=None) -> str:
    """Field magnitude map in the x-z plane around the trap center."""
    from .fieldmodel import biot_savart_field

    n = 61
    xs = np.linspace(-half_width, half_width, n)
    zs = np.linspace(-half_width, half_width, n)
    gx, gz = np.meshgrid(xs, zs)
    pts = np.column_stack([gx.ravel(), np.zeros(gx.size), gz.ravel()])
    if coils is not None:
        b = biot_savart_field(coils, pts)
    else:
        b = quad.field(pts)
    mag = np.linalg.norm(b, axis=1).reshape(n, n)

    fig, ax = plt.subplots(figsize=(5.4, 4.4))
    pcm = ax.pcolormesh(gx * 1e6, gz * 1e6, mag * 1e3, shading="auto",
                        cmap="viridis")
    fig.colorbar(pcm, ax=ax, label="|B| (mT)")
    ax.set_xlabel("x (um)")
    ax.set_ylabel("z (um)")
    ax.set_title("trap field magnitude, y = 0")
    return _save(fig, path)


def coupling_figure(z_values, nu_values, path, z_mark: float = None) -> str:
    """Coupling per turn against loop standoff."""
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    ax.plot(np.asarray(z_values) * 1e6, np.abs(nu_values), "-")
    if z_mark is not None:
        ax.axvline(z_mark * 1e6, color="gray", ls="--", lw=0.8)
    ax.set_xlabel("loop height above center (um)")
    ax.set_ylabel("|nu| (Wb/m)")
    ax.set_yscale("log")
    ax.set_title("flux coupling vs standoff")
    ax.grid(alpha=0.3)
    return _save(fig, path)


def pickup_optimum_figure(turns, sqrt_S_nn, best_turns, path) -> str:
    """Objective landscape over turn count at the optimal footprint."""
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    ax.plot(turns, sqrt_S_nn, "-")
    ax.axvline(best_turns, color="gray", ls="--", lw=0.8)
    ax.set_xlabel("turns")
    ax.set_ylabel("sqrt(S_nn) (m/sqrt(Hz))")
    ax.set_yscale("log")
    ax.set_title("imprecision vs winding count at the optimal footprint")
    ax.grid(alpha=0.3)
    return _save(fig, path)


def transmissibility_figure(freqs, transmission, mode_freqs, path) -> str:
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    ax.loglog(freqs, transmission, "-")
    for f in mode_freqs:
        ax.axvline(f, color="tab:red", ls=":", lw=0.8)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("transmissibility")
    ax.set_title("isolation stack transfer")
    ax.grid(which="both", alpha=0.3)
    return _save(fig, path)


def filter_figure(freqs, amplitude_ratio, kappa, path) -> str:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.2, 3.6))
    ax1.loglog(freqs, amplitude_ratio, "-")
    ax1.set_xlabel("frequency (Hz)")
    ax1.set_ylabel("|I_out / I_in|")
    ax1.set_title("current transfer")
    ax1.grid(which="both", alpha=0.3)
    t = np.linspace(0.0, 5.0 / kappa, 400)
    ax2.plot(t, 1.0 - np.exp(-kappa * t), "-")
    ax2.set_xlabel("time (s)")
    ax2.set_ylabel("step response")
    ax2.set_title(f"kappa = {kappa:g} 1/s")
    ax2.grid(alpha=0.3)
    return _save(fig, path)


def budget_figure(freqs, curves: dict, path, f0: float = None) -> str:
    """Force-noise contributions against frequency."""
    fig, ax = plt.subplots(figsize=(5.8, 4.2))
    for label, values in curves.items():
        ax.loglog(freqs, values, label=label)
    if f0 is not None:
        ax.axvline(f0, color="gray", ls="--", lw=0.8)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("force noise (N/sqrt(Hz))")
    ax.set_title("force sensitivity budget")
    ax.legend(fontsize=8)
    ax.grid(which="both", alpha=0.3)
    return _save(fig, path)


def timeseries_figure(series, path, max_points: int = 20000) -> str:
    t = series.t
    x = series.values
    stride = max(1, len(x) // max_points)
    fig, ax = plt.subplots(figsize=(6.6, 3.4))
    ax.plot(t[::stride], x[::stride] * 1e9, lw=0.5)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("displacement (nm)")
    ax.set_title("simulated motion")
    ax.grid(alpha=0.3)
    return _save(fig, path)


def psd_figure(freqs, psd, path, fit=None, band=None) -> str:
    fig, ax = plt.subplots(figsize=(5.8, 4.0))
    good = freqs > 0
    ax.loglog(freqs[good], psd[good], lw=0.7, label="Welch estimate")
    if fit is not None:
        ax.loglog(freqs[good], fit.model(freqs[good]), "--",
                  label=f"fit f0 = {fit.f0:.4g} Hz")
        ax.legend(fontsize=8)
    if band is not None:
        ax.axvspan(band[0], band[1], color="tab:orange", alpha=0.15)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("PSD (m^2/Hz)")
    ax.set_title("displacement spectrum")
    ax.grid(which="both", alpha=0.3)
    return _save(fig, path)
