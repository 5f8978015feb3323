"""Figure rendering for the report commands.

Matplotlib lives only in this module; the numerical core never imports it.
PNG metadata is pinned so reruns with identical inputs stay byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_PNG_METADATA = {"Software": "mesodrop"}
_DPI = 130


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=_DPI, metadata=_PNG_METADATA, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_potential(path: Path, r: np.ndarray, v_kelvin: np.ndarray) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(r, v_kelvin, color="tab:blue")
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.set_xlabel("separation (angstrom)")
    ax.set_ylabel("pair potential (K)")
    ax.set_ylim(min(-12.5, 1.1 * float(np.min(v_kelvin))), 12.0)
    ax.set_title("bare pair potential")
    return _save(fig, path)


def plot_smoothed(path: Path, r: np.ndarray, vt_kelvin: np.ndarray, xi: float) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(r, vt_kelvin, color="tab:red")
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.set_xlabel("separation (angstrom)")
    ax.set_ylabel("smoothed potential (K)")
    ax.set_ylim(min(-12.5, 1.3 * float(np.min(vt_kelvin))), 8.0)
    ax.set_title(f"smoothed pair potential, xi = {xi:g}")
    return _save(fig, path)


def plot_profiles(path: Path, r: np.ndarray, profiles: dict[float, np.ndarray],
                  bare_kelvin: np.ndarray) -> Path:
    """Three-panel smoothed-potential figure with the bare curve for reference."""
    xis = sorted(profiles)
    fig, axes = plt.subplots(1, len(xis), figsize=(4.2 * len(xis), 3.6), sharex=True)
    if len(xis) == 1:
        axes = [axes]
    labels = "abcdefg"
    for ax, xi, label in zip(axes, xis, labels):
        vt = profiles[xi]
        ax.plot(r, bare_kelvin, color="gray", lw=0.8, label="bare")
        ax.plot(r, vt, color="tab:red", label=f"xi = {xi:g}")
        ax.axhline(0.0, color="gray", lw=0.5)
        lo = float(np.min(vt))
        ax.set_ylim(min(1.4 * lo, -0.5), max(4.0, -6.0 * lo))
        ax.set_xlabel("separation (angstrom)")
        ax.set_title(f"({label}) xi = {xi:g}")
        ax.legend(loc="upper right", fontsize=8)
    axes[0].set_ylabel("potential (K)")
    fig.tight_layout()
    return _save(fig, path)


def plot_scf(path: Path, r: np.ndarray, phi: np.ndarray, rho: np.ndarray,
             v_eff: np.ndarray) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax1.plot(r, phi, color="tab:blue", label="order parameter")
    ax1.set_xlabel("radius (angstrom)")
    ax1.set_ylabel("amplitude (angstrom$^{-3/2}$)")
    ax1.legend(fontsize=8)
    ax2.plot(r, v_eff, color="tab:green", label="effective potential (J)")
    ax2.set_xlabel("radius (angstrom)")
    ax2.set_ylabel("energy (J)")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_xiscan(path: Path, xi: np.ndarray, energy: np.ndarray,
                best_xi: float) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xi, energy, "o-", color="tab:purple")
    if np.isfinite(best_xi):
        ax.axvline(best_xi, color="tab:red", lw=0.8, label=f"argmin = {best_xi:.3f}")
        ax.legend(fontsize=8)
    ax.set_xlabel("smoothing parameter xi")
    ax.set_ylabel("total energy (J)")
    ax.set_title("energy scan over the smoothing parameter")
    return _save(fig, path)


def plot_shortscale(path: Path, s: np.ndarray, b: np.ndarray, db: np.ndarray) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax1.plot(s, b, color="tab:blue")
    ax1.set_xlabel("pair separation (angstrom)")
    ax1.set_ylabel("response (J angstrom$^2$)")
    ax2.plot(s, db, color="tab:orange")
    ax2.set_xlabel("pair separation (angstrom)")
    ax2.set_ylabel("response gradient (J angstrom)")
    fig.tight_layout()
    return _save(fig, path)


def plot_scaling(path: Path, eps: np.ndarray, amplitudes: np.ndarray,
                 exponent: float, coupling: str) -> Path:
    fig, ax = plt.subplots(figsize=(5.2, 4))
    ax.loglog(eps, amplitudes, "o", color="tab:blue", label="amplitudes")
    ref = amplitudes[0] * (eps / eps[0]) ** exponent
    ax.loglog(eps, ref, "--", color="tab:red", label=f"slope {exponent:.6f}")
    ax.set_xlabel("scale ratio")
    ax.set_ylabel("short-scale amplitude")
    ax.set_title(f"{coupling}-coupling amplitude scaling")
    ax.legend(fontsize=8)
    return _save(fig, path)
