"""Matplotlib figures for energy histories and convergence tables."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_energy(records, directory: str, scheme: str) -> list[str]:
    """Energy and numerical dissipation against time; returns the file paths."""
    t = np.array([r.t for r in records])
    E = np.array([r.E for r in records])
    Eh = np.array([r.E_hat for r in records])
    nd = np.array([r.nd for r in records])

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, E, label="E")
    ax.plot(t, Eh, "--", label="modified E")
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.set_title(scheme)
    ax.legend()
    fig.tight_layout()
    p1 = os.path.join(directory, "energy.png")
    fig.savefig(p1, dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t[1:], nd[1:])
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xlabel("t")
    ax.set_ylabel("numerical dissipation")
    ax.set_title(scheme)
    fig.tight_layout()
    p2 = os.path.join(directory, "dissipation.png")
    fig.savefig(p2, dpi=120)
    plt.close(fig)
    return [p1, p2]


def plot_eoc(table, path: str, scheme: str) -> str:
    dts = np.array(table.dts)
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, errs, name in ((axes[0], table.e2, "L2"), (axes[1], table.e1, "H1")):
        errs = np.array(errs)
        for c, comp in enumerate(table.components):
            ax.loglog(dts, errs[:, c], "o-", label=f"Q{comp}")
        ref = errs[0].max() * dts / dts[0]
        ax.loglog(dts, ref, "k:", label="slope 1")
        ax.set_xlabel("dt")
        ax.set_ylabel(f"{name} error")
        ax.legend(fontsize=7)
    fig.suptitle(scheme)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
