"""Companion PNG figures for the CLI reports (matplotlib, Agg backend)."""

from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import _atomic_bytes  # noqa: E402


def _save(fig, path) -> Path:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=110, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return _atomic_bytes(path, buf.getvalue())


def line_plot(path, x, ys: dict, xlabel: str, ylabel: str, title: str = "",
              logy: bool = False, markers: bool = False) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in ys.items():
        ax.plot(x, y, "o-" if markers else "-", ms=3, lw=1.2, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(ys) > 1:
        ax.legend()
    ax.grid(alpha=0.3)
    return _save(fig, path)


def scatter_plot(path, z: np.ndarray, title: str = "") -> Path:
    z = np.asarray(z)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(z.real, z.imag, ",", color="k")
    ax.set_aspect("equal")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def raster_plot(path, gray: np.ndarray, extent, xlabel: str, ylabel: str, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5, 6))
    ax.imshow(gray, cmap="gray", vmin=0, vmax=255, extent=extent, aspect="auto",
              interpolation="nearest")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    return _save(fig, path)
