"""Figure rendering for the experiment outputs.

Every experiment that emits delimited data can also render a matplotlib
figure next to it; the CLI switches this with the ``figures`` config key.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "render_heatmap",
    "render_traces",
    "render_sweep",
    "render_ptm_pair",
    "render_density_matrix",
    "render_phase_map",
]


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_heatmap(
    x, y, z, path: Path, xlabel: str, ylabel: str, title: str = ""
) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    mesh = ax.pcolormesh(np.asarray(x), np.asarray(y), np.asarray(z).T, shading="auto",
                         cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="intensity")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def render_traces(traces: dict, path: Path, xlabel: str, ylabel: str, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (x, y) in traces.items():
        ax.plot(x, y, marker=".", markersize=3, linewidth=1, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(traces) > 1:
        ax.legend()
    if title:
        ax.set_title(title)
    return _save(fig, path)


def render_sweep(detunings, curves: dict, optimum: float, path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    markers = {"II": "o", "XX": "^", "YY": "s"}
    for label, vals in curves.items():
        ax.plot(detunings, vals, marker=markers.get(label, "."), markersize=4,
                linewidth=1, label=label)
    ax.axvline(optimum, color="k", linestyle="--", linewidth=1,
               label=f"optimum {optimum:.3f} MHz")
    ax.set_xlabel("detuning (MHz)")
    ax.set_ylabel("joint readout")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def render_ptm_pair(r_exp, r_ideal, path: Path, title: str = "") -> Path:
    from .linalg import PAULI_2Q_LABELS

    fig, axes = plt.subplots(1, 2, figsize=(11, 5))
    for ax, (mat, name) in zip(axes, [(r_exp, "reconstructed"), (r_ideal, "ideal")]):
        im = ax.imshow(np.asarray(mat), vmin=-1, vmax=1, cmap="RdBu_r")
        ax.set_title(name)
        ax.set_xticks(range(16))
        ax.set_yticks(range(16))
        ax.set_xticklabels(PAULI_2Q_LABELS, rotation=90, fontsize=6)
        ax.set_yticklabels(PAULI_2Q_LABELS, fontsize=6)
    fig.colorbar(im, ax=axes, shrink=0.75)
    if title:
        fig.suptitle(title)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_density_matrix(rho, path: Path, title: str = "") -> Path:
    rho = np.asarray(rho)
    labels = ["00", "01", "10", "11"]
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, (part, name) in zip(axes, [(np.real(rho), "Re"), (np.imag(rho), "Im")]):
        im = ax.imshow(part, vmin=-1, vmax=1, cmap="RdBu_r")
        ax.set_title(f"{name}[rho]")
        ax.set_xticks(range(4))
        ax.set_yticks(range(4))
        ax.set_xticklabels(labels)
        ax.set_yticklabels(labels)
        for (i, j), v in np.ndenumerate(part):
            ax.text(j, i, f"{v:+.2f}", ha="center", va="center", fontsize=7)
    fig.colorbar(im, ax=axes, shrink=0.8)
    if title:
        fig.suptitle(title)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_phase_map(detunings, phases, fit_phases, path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(detunings, np.asarray(phases) / np.pi, "o", markersize=4, label="simulated")
    ax.plot(detunings, np.asarray(fit_phases) / np.pi, "-", linewidth=1, label="fitted law")
    ax.set_xlabel("detuning (MHz)")
    ax.set_ylabel("phase (pi rad)")
    ax.legend()
    if title:
        ax.set_title(title)
    return _save(fig, path)
