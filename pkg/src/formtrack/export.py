"""Trajectory CSV and metrics document export.

CSV layout: header `t,agent,x,y[,z]`, one row per (sample, agent),
time-major and agent-minor, floats printed with 9 significant digits. The
same (scenario, seed) pair therefore always produces byte-identical files.
Metrics are a nested YAML document, one block per follower.
"""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path

import numpy as np
import yaml
from numpy.typing import NDArray

from .analysis import ConvergenceReport
from .simulate import Trajectory

AXES = ("x", "y", "z")


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def export_trajectory_csv(traj: Trajectory, path: str | Path) -> Path:
    """Write the sampled agent positions; returns the path written."""
    path = Path(path)
    d = traj.positions.shape[2]
    lines = ["t,agent," + ",".join(AXES[:d])]
    for s, t in enumerate(traj.times):
        ts = _fmt(t)
        for a in range(traj.positions.shape[1]):
            coords = ",".join(_fmt(c) for c in traj.positions[s, a])
            lines.append(f"{ts},{a + 1},{coords}")
    path.write_text("\n".join(lines) + "\n")
    return path


def load_trajectory_csv(
    path: str | Path,
) -> tuple[NDArray[np.float64], NDArray[np.float64], list[int]]:
    """Read a trajectory CSV back: (times, positions (S, n, d), agent ids)."""
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    if header[:2] != ["t", "agent"]:
        raise ValueError(f"not a trajectory CSV (header {lines[0]!r})")
    d = len(header) - 2
    rows = [line.split(",") for line in lines[1:]]
    times_all = np.array([float(r[0]) for r in rows])
    agents_all = np.array([int(r[1]) for r in rows])
    coords = np.array([[float(c) for c in r[2:]] for r in rows])
    agent_ids = sorted(set(agents_all.tolist()))
    n = len(agent_ids)
    if len(rows) % n:
        raise ValueError("row count is not a multiple of the agent count")
    s = len(rows) // n
    times = times_all.reshape(s, n)[:, 0]
    positions = np.zeros((s, n, d))
    order = {a: i for i, a in enumerate(agent_ids)}
    for k, (a, xyz) in enumerate(zip(agents_all, coords)):
        positions[k // n, order[a]] = xyz
    return times, positions, agent_ids


def report_to_dict(report: ConvergenceReport) -> dict:
    """Plain-dict form of a report (what the metrics file contains)."""
    followers = {}
    for fid, fr in sorted(report.followers.items()):
        entry = asdict(fr)
        entry.pop("follower")
        followers[fid] = entry
    return {
        "parameters": {
            "delta": report.delta,
            "window": report.window,
            "band": report.band,
        },
        "followers": followers,
    }


def export_metrics(report: ConvergenceReport, path: str | Path) -> Path:
    """Write the convergence report as a nested YAML document."""
    path = Path(path)
    path.write_text(
        yaml.safe_dump(report_to_dict(report), sort_keys=True, default_flow_style=False)
    )
    return path


def load_metrics(path: str | Path) -> dict:
    return yaml.safe_load(Path(path).read_text())
