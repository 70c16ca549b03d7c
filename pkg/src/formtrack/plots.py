"""Figure emission: agent trajectories and error curves as SVG files.

Output is byte-deterministic for a fixed input: the SVG hash salt is pinned
and the creation date is suppressed, so repeated invocations on the same
trajectory produce identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from numpy.typing import NDArray

matplotlib.rcParams["svg.hashsalt"] = "formtrack"

LEADER_COLOR = "#c23b22"
FOLLOWER_CMAP = "viridis"


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _plot_plane(ax, positions: NDArray[np.float64], n_leaders: int, ix: int, iy: int,
                labels: tuple[str, str]) -> None:
    n = positions.shape[1] if positions.size else 0
    cmap = plt.get_cmap(FOLLOWER_CMAP)
    for a in range(n):
        xs, ys = positions[:, a, ix], positions[:, a, iy]
        if a < n_leaders:
            color, kwargs = LEADER_COLOR, {"lw": 1.4}
        else:
            color = cmap((a - n_leaders) / max(1, n - n_leaders - 1))
            kwargs = {"lw": 1.0}
        ax.plot(xs, ys, color=color, label=f"agent {a + 1}", **kwargs)
        if len(xs):
            ax.plot(xs[0], ys[0], "o", color=color, ms=4)
        if len(xs) > 1:
            ax.plot(xs[-1], ys[-1], "s", color=color, ms=4)
    ax.set_xlabel(labels[0])
    ax.set_ylabel(labels[1])
    ax.set_aspect("equal", adjustable="datalim")
    ax.grid(True, alpha=0.3)


def plot_trajectories(
    positions: NDArray[np.float64],
    n_leaders: int,
    path: str | Path,
) -> Path:
    """Agent paths; one panel for the plane, three axis-pair panels in 3-D."""
    path = Path(path)
    d = positions.shape[2]
    if d == 2:
        fig, ax = plt.subplots(figsize=(6.0, 5.0))
        _plot_plane(ax, positions, n_leaders, 0, 1, ("x", "y"))
        if positions.size:
            ax.legend(fontsize=7, ncol=2, loc="best")
    else:
        fig, axes = plt.subplots(1, 3, figsize=(13.5, 4.2))
        for ax, (ix, iy) in zip(axes, ((0, 1), (0, 2), (1, 2))):
            _plot_plane(ax, positions, n_leaders, ix, iy, ("xyz"[ix], "xyz"[iy]))
        if positions.size:
            axes[0].legend(fontsize=7, ncol=2, loc="best")
    fig.suptitle("Agent trajectories (o start, □ end)")
    fig.tight_layout()
    _save(fig, path)
    return path


def plot_errors(
    times: NDArray[np.float64],
    errors: NDArray[np.float64],
    pairs: list[tuple[int, int]],
    path: str | Path,
) -> Path:
    """Squared distance error curves vs time, one curve per constraint."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    cmap = plt.get_cmap("tab20")
    for col, (i, j) in enumerate(pairs):
        ax.plot(times, errors[:, col], lw=0.9, color=cmap(col % 20),
                label=f"e({i},{j})")
    ax.set_xlabel("t")
    ax.set_ylabel("squared distance error")
    ax.grid(True, alpha=0.3)
    if pairs:
        ax.legend(fontsize=6, ncol=max(1, len(pairs) // 8 + 1), loc="upper right")
    fig.tight_layout()
    _save(fig, path)
    return path


def emit_plots(traj, path_prefix: str | Path) -> list[Path]:
    """Write the trajectory and error figures for a run; returns the paths.

    path_prefix may be a directory (files land inside it) or a filename
    prefix such as out/run3_.
    """
    prefix = Path(path_prefix)
    if prefix.is_dir() or str(path_prefix).endswith(("/", "\\")):
        base, stem = prefix, ""
    else:
        base, stem = prefix.parent, prefix.name
    base.mkdir(parents=True, exist_ok=True)
    traj_path = base / f"{stem}trajectories.svg"
    err_path = base / f"{stem}errors.svg"
    plot_trajectories(traj.positions, traj.config.graph.d, traj_path)
    plot_errors(traj.times, traj.errors, traj.constraint_pairs, err_path)
    return [traj_path, err_path]
