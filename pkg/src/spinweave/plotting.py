"""Figure rendering for CLI reports. Every function writes one file and closes its figure."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STRUCTURE_STYLE = {
    "full17": dict(color="tab:blue", marker="o"),
    "quotient11": dict(color="tab:orange", marker="s"),
    "chain9": dict(color="tab:green", marker="^"),
}


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_spectrum(numeric, analytic, path, title=""):
    fig, ax = plt.subplots(figsize=(5, 4))
    idx = np.arange(1, len(numeric) + 1)
    ax.plot(idx, numeric, "o", label="diagonalised")
    if analytic is not None:
        ax.plot(idx, analytic, "x", color="k", label="closed form")
    ax.set_xlabel("index")
    ax.set_ylabel(r"$E/\Delta$")
    ax.set_title(title)
    ax.legend()
    _finish(fig, path)


def plot_evolution(t, eof, fid, path, title=""):
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(t, eof, color="tab:green", label="EOF(A,C)")
    ax.plot(t, fid, "--", color="tab:red", lw=0.8, label="fidelity vs initial state")
    ax.set_xlabel(r"$t\cdot\Delta$")
    ax.set_ylim(0, 1.02)
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    _finish(fig, path)


def plot_sweep(ratios, eofs, times, path, mode):
    fig, (ax, ax_t) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax.plot(ratios, eofs, color="tab:orange" if mode == "first" else "tab:green")
    ax.set_xlabel(r"$\delta/\Delta$")
    ax.set_ylabel("peak EOF")
    ax_t.plot(ratios, times, ".", ms=2)
    ax_t.set_xlabel(r"$\delta/\Delta$")
    ax_t.set_ylabel(r"$t\cdot\Delta$ of peak")
    ax_t.set_yscale("log")
    _finish(fig, path)


def plot_disorder(rows, path):
    """``rows``: iterable of (structure, kind, D, mean, std)."""
    kinds = sorted({r[1] for r in rows})
    fig, axes = plt.subplots(1, len(kinds), figsize=(4.5 * len(kinds), 3.5), squeeze=False)
    for ax, kind in zip(axes[0], kinds):
        for name, style in STRUCTURE_STYLE.items():
            sel = [r for r in rows if r[0] == name and r[1] == kind]
            if not sel:
                continue
            d = np.array([r[2] for r in sel])
            m = np.array([r[3] for r in sel])
            s = np.array([r[4] for r in sel])
            ax.plot(d, m, label=name, ms=4, **style)
            ax.fill_between(d, m - s, m + s, color=style["color"], alpha=0.15)
        ax.set_title(f"{kind} disorder")
        ax.set_xlabel(r"$D$ (units of $\Delta$)")
        ax.set_ylabel(r"$\langle$EOF$\rangle$ at $t_1$")
        ax.set_ylim(0, 1)
        ax.legend(fontsize=8)
    _finish(fig, path)


def plot_time_study(ratios, times, path, flat=None):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(ratios, times, ".", ms=2)
    if flat is not None:
        ax.axvline(flat, color="tab:red", lw=0.8)
    ax.set_xlabel(r"$\delta/\Delta$")
    ax.set_ylabel(r"$t_E\cdot\Delta$")
    _finish(fig, path)
