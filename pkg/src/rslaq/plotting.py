"""SVG line charts of training reward and running reliability."""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps the SVG bytes reproducible
_SVG_META = {"Date": None, "Creator": None}


def _save(fig, path):
    matplotlib.rcParams["svg.hashsalt"] = "rslaq"
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def plot_rewards(path, curves: Mapping[str, np.ndarray], title: str = "training reward", window: int = 10):
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for name, rewards in curves.items():
        rewards = np.asarray(rewards, dtype=float)
        if rewards.size == 0:
            continue
        k = min(window, rewards.size)
        smoothed = np.convolve(rewards, np.ones(k) / k, mode="valid")
        ax.plot(np.arange(k, rewards.size + 1), smoothed, label=name)
    ax.axhline(0.0, color="grey", linewidth=0.5)
    ax.set_xlabel("learning step")
    ax.set_ylabel(f"reward ({window}-step mean)")
    ax.set_title(title)
    ax.legend(loc="lower right")
    _save(fig, path)


def plot_reliability(path, reports: Sequence):
    """Running reliability (1 - outage frames so far / frames so far), one panel per slice."""
    names = reports[0].slice_names if reports else ()
    fig, axes = plt.subplots(1, max(len(names), 1), figsize=(3.2 * max(len(names), 1), 3.2), sharey=True,
                             squeeze=False)
    for j, name in enumerate(names):
        ax = axes[0, j]
        for report in reports:
            if not report.outcomes:
                continue
            phi = np.array([o.phi[j] for o in report.outcomes], dtype=float)
            running = 1.0 - np.cumsum(phi) / np.arange(1, phi.size + 1)
            ax.plot(running, label=report.controller)
        ax.set_title(name)
        ax.set_xlabel("frame")
        ax.set_ylim(-0.02, 1.02)
    axes[0, 0].set_ylabel("reliability")
    axes[0, -1].legend(loc="lower left", fontsize="small")
    _save(fig, path)
