"""Post-hoc verification of convergence claims on recorded trajectories.

Everything here is recomputed from the Trajectory alone. Velocities are
estimated by central differences over a configurable stencil: with a
one-sample stencil the sliding-phase position jitter (order dt * speed)
divided by 2 dt produces O(1) noise, so the default stencil spans 0.1 time
units on each side, which keeps the estimator honest about the trajectory
while averaging the chatter.

The Lyapunov monotonicity and decay-rate checks apply to the exact-signum
law (eps = 0); with a boundary layer the decay bound weakens by O(eps) and
the counts are informational. Both checks stop at the follower's entry into
the sliding band (max |e| below `band`), where discrete chatter makes the
continuous-time bounds meaningless at any useful slack.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .control import ControlConfig, ModulatedProfile
from .simulate import Trajectory

DEFAULT_DELTA = 1e-3      # squared-error units
DEFAULT_WINDOW = 0.5      # time units
DEFAULT_SLIDING_BAND = 1e-2
DEFAULT_FD_HALFWIDTH = 0.1


def convergence_time(
    traj: Trajectory,
    follower: int,
    delta: float = DEFAULT_DELTA,
    window: float = DEFAULT_WINDOW,
) -> float | None:
    """Earliest t with max |e_ji(s)| <= delta for all s in [t, t + window].

    Only reported when the full window fits inside the horizon; None when no
    such t exists.
    """
    e = np.abs(traj.errors_for_follower(follower)).max(axis=1)
    n = len(e)
    if n < 2:
        return 0.0 if n and e[0] <= delta else None
    dt = traj.sample_dt
    w = int(round(window / dt))
    if w > n - 1:
        raise ValueError(f"window {window} exceeds the recorded horizon")
    bad = (e > delta).astype(int)
    csum = np.concatenate(([0], np.cumsum(bad)))
    for i in range(n - w):
        if csum[i + w + 1] - csum[i] == 0:
            return float(traj.times[i])
    return None


def sliding_entry_time(
    traj: Trajectory, follower: int, band: float = DEFAULT_SLIDING_BAND
) -> float | None:
    """First time the follower's max |e_ji| drops to the band, if ever."""
    e = np.abs(traj.errors_for_follower(follower)).max(axis=1)
    hits = np.flatnonzero(e <= band)
    return float(traj.times[hits[0]]) if hits.size else None


def finite_difference_velocities(
    traj: Trajectory, halfwidth: float = DEFAULT_FD_HALFWIDTH
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Central-difference velocities for all agents.

    Returns (times, velocities) with velocities shaped (S', n, d); the
    stencil spans `halfwidth` on each side (at least one sample).
    """
    dt = traj.sample_dt
    if dt <= 0:
        raise ValueError("trajectory has fewer than two samples")
    s = max(1, int(round(halfwidth / dt)))
    p = traj.positions
    if len(p) < 2 * s + 1:
        raise ValueError("trajectory too short for the requested stencil")
    v = (p[2 * s :] - p[: -2 * s]) / (2.0 * s * dt)
    return traj.times[s:-s], v


def velocity_mismatch(
    traj: Trajectory,
    follower: int,
    t_from: float,
    halfwidth: float = DEFAULT_FD_HALFWIDTH,
) -> float:
    """Max ||v_i(t) - f(t)|| over t >= t_from, finite-difference velocities.

    The reference f is leader 1's identically-differenced velocity, so the
    estimator bias cancels out of the comparison.
    """
    traj.follower_index(follower)
    times, v = finite_difference_velocities(traj, halfwidth)
    keep = times >= t_from
    if not keep.any():
        raise ValueError(f"t_from={t_from} leaves no samples inside the horizon")
    diff = v[keep, follower - 1, :] - v[keep, 0, :]
    return float(np.sqrt((diff**2).sum(axis=1)).max())


def monotonicity_violations(
    v_series: NDArray[np.float64],
    dt: float,
    slack: float | NDArray[np.float64],
) -> int:
    """Count steps with V(t+dt) > V(t) + slack.

    slack may be a scalar or a per-step array (length len(v_series) - 1),
    e.g. 1e-6 * dt * (1 + V(t)).
    """
    v = np.asarray(v_series, dtype=float)
    if v.size < 2:
        return 0
    s = np.broadcast_to(np.asarray(slack, dtype=float), v[:-1].shape)
    return int(np.sum(v[1:] > v[:-1] + s))


def vdot_bound_check(
    traj: Trajectory,
    follower: int,
    cfg: ControlConfig | None = None,
    slack: float | NDArray[np.float64] | None = None,
    until: float | None = None,
    band: float = DEFAULT_SLIDING_BAND,
) -> int:
    """Count samples violating (V(t+dt) - V(t))/dt <= -k ||z||^(alpha+1) + slack.

    Counts over pre-convergence samples: those before `until` when given,
    else before the follower first enters the sliding band. slack defaults
    to 1e-3 * (1 + ||z||^(alpha+1)); a scalar or per-step array may be given.
    Meaningful for eps = 0 runs recorded at every integration step.
    """
    fi = traj.follower_index(follower)
    cfg = cfg or traj.config.follower_control(follower)
    v = traj.lyapunov[:, fi]
    zn = traj.z_norms[:, fi]
    dt = traj.sample_dt
    cutoff = until if until is not None else sliding_entry_time(traj, follower, band)
    if cutoff is None:
        last = len(v) - 1
    else:
        last = min(int(np.searchsorted(traj.times, cutoff + 1e-12)), len(v) - 1)
    if last < 1:
        return 0
    decay = zn[: last] ** (cfg.alpha + 1.0)
    if slack is None:
        slack = 1e-3 * (1.0 + decay)
    s = np.broadcast_to(np.asarray(slack, dtype=float), decay.shape)
    rate = (v[1 : last + 1] - v[:last]) / dt
    return int(np.sum(rate > -cfg.k * decay + s))


@dataclass(frozen=True)
class ControlBound:
    """Observed max control norm and its analytic ceilings."""

    max_norm: float
    ceiling: float       # k max||z||^a + k' max||z||^b + gamma sqrt(d)
    law_ceiling: float   # same with gamma max||h||_1 sqrt(d) for modulated laws


def control_boundedness(traj: Trajectory, follower: int) -> ControlBound:
    """Max recorded ||u|| with the analytic ceiling for comparison."""
    fi = traj.follower_index(follower)
    cfg = traj.config.follower_control(follower)
    d = traj.config.graph.d
    zmax = float(traj.z_norms[:, fi].max())
    base = cfg.k * zmax**cfg.alpha + cfg.k_prime * zmax**cfg.beta
    ceiling = base + cfg.gamma * np.sqrt(d)
    law_ceiling = ceiling
    if traj.config.law.startswith("modulated"):
        profile = traj.config.profile
        assert isinstance(profile, ModulatedProfile)
        h1 = max(
            float(np.abs(profile.known_signal(t)).sum()) for t in traj.times
        )
        law_ceiling = base + cfg.gamma * h1 * np.sqrt(d)
    return ControlBound(
        max_norm=float(traj.control_norms[:, fi].max()),
        ceiling=float(ceiling),
        law_ceiling=float(law_ceiling),
    )


def compare_convergence(
    traj_a: Trajectory,
    traj_b: Trajectory,
    delta: float = DEFAULT_DELTA,
    window: float = DEFAULT_WINDOW,
) -> dict[int, float | None]:
    """tau(a) - tau(b) per follower; None when either run never converges."""
    if traj_a.follower_ids != traj_b.follower_ids:
        raise ValueError("trajectories come from different formations")
    out: dict[int, float | None] = {}
    for fid in traj_a.follower_ids:
        ta = convergence_time(traj_a, fid, delta, window)
        tb = convergence_time(traj_b, fid, delta, window)
        out[fid] = None if ta is None or tb is None else ta - tb
    return out


@dataclass
class FollowerReport:
    """Convergence and boundedness summary for one follower."""

    follower: int
    converged: bool
    convergence_time: float | None
    max_error_after: float | None
    max_velocity_mismatch_after: float | None
    monotonicity_violations: int
    vdot_violations: int
    max_control_norm: float
    control_ceiling: float


@dataclass
class ConvergenceReport:
    """Per-follower reports plus the run parameters they were computed with."""

    followers: dict[int, FollowerReport]
    delta: float
    window: float
    band: float


def build_report(
    traj: Trajectory,
    delta: float = DEFAULT_DELTA,
    window: float = DEFAULT_WINDOW,
    band: float = DEFAULT_SLIDING_BAND,
    fd_halfwidth: float = DEFAULT_FD_HALFWIDTH,
) -> ConvergenceReport:
    """Assemble the full per-follower report for a recorded run."""
    dt = traj.sample_dt
    out: dict[int, FollowerReport] = {}
    for fid in traj.follower_ids:
        fi = traj.follower_index(fid)
        tau = convergence_time(traj, fid, delta, window)
        max_err_after = None
        mismatch = None
        if tau is not None:
            after = traj.times >= tau
            max_err_after = float(
                np.abs(traj.errors_for_follower(fid))[after].max()
            )
            try:
                mismatch = velocity_mismatch(traj, fid, tau, fd_halfwidth)
            except ValueError:
                mismatch = None
        v = traj.lyapunov[:, fi]
        entry = sliding_entry_time(traj, fid, band)
        last = (
            len(v) - 1
            if entry is None
            else int(np.searchsorted(traj.times, entry + 1e-12))
        )
        mono = monotonicity_violations(
            v[: last + 1], dt, 1e-6 * dt * (1.0 + v[:last])
        ) if last >= 1 else 0
        vdot = vdot_bound_check(traj, fid, band=band)
        bound = control_boundedness(traj, fid)
        out[fid] = FollowerReport(
            follower=fid,
            converged=tau is not None,
            convergence_time=tau,
            max_error_after=max_err_after,
            max_velocity_mismatch_after=mismatch,
            monotonicity_violations=mono,
            vdot_violations=vdot,
            max_control_norm=bound.max_norm,
            control_ceiling=bound.ceiling,
        )
    return ConvergenceReport(followers=out, delta=delta, window=window, band=band)
