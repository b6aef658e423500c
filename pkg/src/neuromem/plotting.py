"""Figure rendering for CLI reports. Always uses the non-interactive Agg backend."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_sim_trace(trace, path) -> Path:
    """I-V loop on the left, memristance against time on the right."""
    fig, (ax_iv, ax_m) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax_iv.plot(trace.v, trace.i * 1e3, lw=1)
    ax_iv.set_xlabel("voltage (V)")
    ax_iv.set_ylabel("current (mA)")
    ax_iv.axhline(0, color="0.7", lw=0.5)
    ax_iv.axvline(0, color="0.7", lw=0.5)
    ax_m.plot(trace.t, trace.memristance / 1e3, lw=1)
    ax_m.set_xlabel("time (s)")
    ax_m.set_ylabel("memristance (kOhm)")
    return _save(fig, path)


def plot_curve(x, y, path, xlabel="input", ylabel="output", title=None) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.plot(np.asarray(x), np.asarray(y), lw=1.2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_images(before, after, path, titles=("input", "output")) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(7, 3.6))
    for ax, img, title in zip(axes, (before, after), titles):
        ax.imshow(img.data, cmap="gray", vmin=0, vmax=255, interpolation="nearest")
        ax.set_title(title)
        ax.axis("off")
    return _save(fig, path)


def plot_history(losses, path) -> Path:
    return plot_curve(np.arange(1, len(losses) + 1), losses, path, "epoch", "training loss")
