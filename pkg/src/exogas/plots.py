"""Figures rendered to files with the Agg backend."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_timeseries(columns: dict, path: str, title: str = "") -> str:
    t = columns["t"]
    fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharex=True)
    ax = axes[0, 0]
    ax.semilogy(t, np.maximum(columns["lyapunov"], 1e-300), label="entropy functional")
    ax.semilogy(t, np.maximum(columns["supnorm_dev"], 1e-300), label="sup |(v,u,theta)-(1,0,1)|")
    ax.legend(fontsize=8)
    ax = axes[0, 1]
    ax.plot(t, columns["min_v"], label="min v")
    ax.plot(t, columns["max_v"], label="max v")
    ax.plot(t, columns["min_theta"], label="min theta")
    ax.plot(t, columns["max_theta"], label="max theta")
    ax.legend(fontsize=8)
    ax = axes[1, 0]
    ax.plot(t, columns["reactant_mass"], label="reactant mass")
    ax.plot(t, columns["burn_integral"], label="burned")
    ax.legend(fontsize=8)
    ax = axes[1, 1]
    for name in ("entropy_residual", "reactant_residual_1", "first_law_residual"):
        ax.semilogy(t, np.abs(columns[name]) + 1e-300, label=name)
    ax.legend(fontsize=8)
    for a in axes[1]:
        a.set_xlabel("t")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def plot_profiles(columns: dict, path: str, t: float) -> str:
    x = columns["x"]
    fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharex=True)
    for ax, name in zip(axes.flat, ("v", "u_interp", "theta", "z")):
        ax.plot(x, columns[name])
        ax.set_ylabel(name)
    for a in axes[1]:
        a.set_xlabel("x")
    fig.suptitle(f"t = {t:.6g}")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def plot_convergence(rows, path: str, kind: str) -> str:
    rows = np.asarray(rows, dtype=float)
    h = rows[:, 2] if kind == "space" else rows[:, 3]
    fig, ax = plt.subplots(figsize=(6, 5))
    for j, name in enumerate(("v", "u", "theta", "z")):
        ax.loglog(h, rows[:, 4 + j], "o-", label=name)
    ref = rows[0, 4:].max() * (h / h[0]) ** 2
    ax.loglog(h, ref, "k--", label="slope 2")
    ax.set_xlabel("dx" if kind == "space" else "dt")
    ax.set_ylabel("L2 error")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path
