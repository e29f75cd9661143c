"""PNG figures for simulation and convergence reports.

Figures are built on :class:`matplotlib.figure.Figure` directly, so no
interactive backend or global pyplot state is involved.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=120)
    return path


def density_image(history) -> tuple:
    """(times, cell centres, density matrix with one row per snapshot)."""
    states = [state for state, _ in history]
    times = np.array([s.t for s in states])
    rho = np.vstack([s.field.rho for s in states])
    return times, states[0].field.centers, rho


def plot_density(history, path, title: str = "") -> Path:
    """t-x map of the density with every vehicle trajectory drawn on top."""
    times, x, rho = density_image(history)
    fig = Figure(figsize=(7, 5))
    ax = fig.add_subplot()
    if times.size > 1:
        mesh = ax.pcolormesh(x, times, rho, vmin=0.0, vmax=1.0, cmap="viridis", shading="nearest")
        fig.colorbar(mesh, ax=ax, label="density")
    else:
        ax.plot(x, rho[0], color="tab:blue")
    n_platoons = len(history[0][0].platoons)
    for j in range(n_platoons):
        traj = np.array([state.platoons[j].positions for state, _ in history])
        ax.plot(traj, times, color="white" if times.size > 1 else "black", lw=0.7)
    ax.set_xlim(x[0], x[-1])
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_leader_speeds(log, path) -> Path:
    """Leader velocity of every platoon against time, one point per step."""
    fig = Figure(figsize=(6, 3.5))
    ax = fig.add_subplot()
    arrays = log.as_arrays()
    if arrays["t"].size:
        speeds = np.atleast_2d(arrays["leader_speeds"])
        for j in range(speeds.shape[1]):
            ax.step(arrays["t"] + arrays["dt"], speeds[:, j], where="post", label=f"platoon {j + 1}")
        ax.legend()
    ax.set_xlabel("t")
    ax.set_ylabel("leader speed")
    ax.set_ylim(-0.05, 1.05)
    fig.tight_layout()
    return _save(fig, path)


def plot_convergence(studies: dict, path) -> Path:
    """Log-log L1 error against dx; ``studies`` maps a label to convergence rows."""
    fig = Figure(figsize=(5, 4))
    ax = fig.add_subplot()
    for label, rows in studies.items():
        dx = [r.dx for r in rows]
        err = [r.error for r in rows]
        if all(e > 0 for e in err):
            ax.loglog(dx, err, marker="o", label=label)
    ax.set_xlabel("dx")
    ax.set_ylabel("L1 error")
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.tight_layout()
    return _save(fig, path)
