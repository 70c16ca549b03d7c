"""Closed-loop integration of the leader-follower formation dynamics.

Leaders are driven by the velocity profile; each follower measures its d
neighbors in its own frame, forms e and z, and applies the configured law.
Integration is fixed-step (explicit Euler or classical RK4) on purpose:
adaptive steppers thrash on the signum discontinuity. The sliding phase is
handled either by the boundary layer (eps > 0, smooth dynamics, O(eps)
steady-state residual in z) or by accepting chatter with small steps
(eps = 0), whose per-step error amplitude is about 2 d* ||u - f|| dt.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .control import (
    ControlConfig,
    LeaderVelocityProfile,
    ModulatedProfile,
    basin_threshold_2d,
    lyapunov_value,
)
from .graph import DistanceSpec, FormationGraph, augment_leader_clique
from .kinematics import AgentState

LAWS = ("basic", "fixed_time", "modulated", "modulated_fixed_time")
INTEGRATORS = ("euler", "rk4")
PROFILE_SAMPLES = 2001  # dense-sampling resolution for the ||f|| <= gamma check
LEADER_SPACING_TOL = 1e-9


class ValidationError(ValueError):
    """A configuration violates one of the model's standing assumptions."""


class SimulationError(RuntimeError):
    """The integration produced a non-finite state."""


@dataclass
class SimConfig:
    """Everything needed for one deterministic run."""

    graph: FormationGraph
    spec: DistanceSpec
    initial_states: list[AgentState]
    profile: LeaderVelocityProfile
    control: ControlConfig
    law: str
    dt: float
    t_end: float
    integrator: str = "rk4"
    seed: int = 0
    control_overrides: dict[int, ControlConfig] = field(default_factory=dict)
    record_every: int = 1
    warnings: list[str] = field(default_factory=list, repr=False)

    def initial_positions(self) -> NDArray[np.float64]:
        return np.array([s.position for s in self.initial_states], dtype=float)

    def follower_control(self, fid: int) -> ControlConfig:
        return self.control_overrides.get(fid, self.control)

    def validate(self) -> None:
        g = self.graph
        if self.dt <= 0 or self.t_end <= 0:
            raise ValidationError(f"dt and t_end must be > 0, got {self.dt}, {self.t_end}")
        if self.law not in LAWS:
            raise ValidationError(f"law must be one of {LAWS}, got {self.law!r}")
        if self.integrator not in INTEGRATORS:
            raise ValidationError(
                f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}"
            )
        if self.record_every < 1:
            raise ValidationError("record_every must be >= 1")
        steps = int(round(self.t_end / self.dt))
        if abs(steps * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ValidationError(f"t_end={self.t_end} is not a multiple of dt={self.dt}")
        if steps % self.record_every:
            raise ValidationError(
                f"step count {steps} is not a multiple of record_every={self.record_every}"
            )
        if len(self.initial_states) != g.n:
            raise ValidationError(
                f"{len(self.initial_states)} agent states for n={g.n} agents"
            )
        for idx, st in enumerate(self.initial_states, start=1):
            if st.id != idx:
                raise ValidationError(f"agent states must be ordered 1..n, found {st.id} at {idx}")
            want_role = "leader" if idx <= g.d else "follower"
            if st.role != want_role:
                raise ValidationError(f"agent {idx} must be a {want_role}")
            if st.position.shape != (g.d,):
                raise ValidationError(f"agent {idx} position must be in R^{g.d}")
        if self.law.startswith("modulated") and not isinstance(self.profile, ModulatedProfile):
            raise ValidationError(f"law {self.law!r} requires a modulated leader profile")
        # assumption 3: leaders start at their desired mutual spacing and the
        # reference velocity respects the known bound
        pos = self.initial_positions()
        for i in range(1, g.d + 1):
            for j in range(i + 1, g.d + 1):
                have = float(np.linalg.norm(pos[j - 1] - pos[i - 1]))
                want = self.spec.get(i, j)
                if abs(have - want) > LEADER_SPACING_TOL:
                    raise ValidationError(
                        f"assumption 3 violated: leaders {i},{j} start at distance "
                        f"{have:.12g}, desired {want:.12g}"
                    )
        if isinstance(self.profile, ModulatedProfile):
            bound = self.profile.frobenius_bound()
            if bound > self.control.gamma + 1e-12:
                raise ValidationError(
                    f"assumption 3 violated: ||G||_F bound {bound:.6g} exceeds "
                    f"gamma={self.control.gamma}"
                )
        else:
            ts = np.linspace(0.0, self.t_end, PROFILE_SAMPLES)
            worst = max(
                float(np.linalg.norm(self.profile.velocity(pos, t))) for t in ts
            )
            if worst > self.control.gamma + 1e-9:
                raise ValidationError(
                    f"assumption 3 violated: sampled leader speed {worst:.6g} exceeds "
                    f"gamma={self.control.gamma}"
                )


@dataclass
class Trajectory:
    """Recorded run: uniformly sampled times and per-sample series.

    errors columns follow constraint_pairs (the unordered constraints of the
    augmented graph); lyapunov/control_norms/z_norms columns follow
    follower_ids. All series are recomputable from positions and the config.
    """

    times: NDArray[np.float64]
    positions: NDArray[np.float64]      # (S, n, d)
    errors: NDArray[np.float64]         # (S, m)
    constraint_pairs: list[tuple[int, int]]
    lyapunov: NDArray[np.float64]       # (S, F)
    control_norms: NDArray[np.float64]  # (S, F)
    z_norms: NDArray[np.float64]        # (S, F)
    follower_ids: list[int]
    config: SimConfig

    @property
    def sample_dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def follower_index(self, fid: int) -> int:
        try:
            return self.follower_ids.index(fid)
        except ValueError:
            raise KeyError(f"unknown follower id {fid}") from None

    def errors_for_follower(self, fid: int) -> NDArray[np.float64]:
        """Error columns of the follower's own measured edges, neighbor order."""
        self.follower_index(fid)
        cols = []
        for j in self.config.graph.neighbors(fid):
            pair = (min(fid, j), max(fid, j))
            cols.append(self.constraint_pairs.index(pair))
        return self.errors[:, cols]

    def agent_positions(self, agent_id: int) -> NDArray[np.float64]:
        return self.positions[:, agent_id - 1, :]


class _Engine:
    """Vectorized closed-loop right-hand side for one configuration.

    The profile is evaluated once per distinct time (all built-in profiles
    depend on t only), which matters because RK4 revisits the midpoint time.
    """

    def __init__(self, cfg: SimConfig):
        g = cfg.graph
        self.cfg = cfg
        self.n, self.d = g.n, g.d
        self.followers = list(g.followers)
        self.nbr = np.array(
            [[j - 1 for j in g.neighbors(i)] for i in self.followers], dtype=int
        ).reshape(len(self.followers), g.d)
        self.fol = np.array([i - 1 for i in self.followers], dtype=int)
        self.frames = np.stack(
            [cfg.initial_states[i - 1].frame.matrix for i in self.followers]
        ) if self.followers else np.zeros((0, g.d, g.d))
        self.dstar2 = np.array(
            [[cfg.spec.get(i, j) ** 2 for j in g.neighbors(i)] for i in self.followers]
        ).reshape(len(self.followers), g.d)
        per = [cfg.follower_control(i) for i in self.followers]
        col = lambda attr: np.array([getattr(c, attr) for c in per])[:, None]
        self.neg_k, self.neg_kp = -col("k"), -col("k_prime")
        self.gamma, self.eps = col("gamma"), col("eps")
        self.alpha_m1 = col("alpha") - 1.0
        self.one_m_alpha = -self.alpha_m1
        self.fixed = cfg.law in ("fixed_time", "modulated_fixed_time")
        self.uses_h = cfg.law in ("modulated", "modulated_fixed_time")
        self._pcache: tuple[float, float, NDArray[np.float64]] | None = None

    def _profile_at(self, t: float) -> tuple[float, NDArray[np.float64]]:
        """(||h(t)||_1, leader velocity f(t)); cached per time."""
        c = self._pcache
        if c is None or c[0] != t:
            profile = self.cfg.profile
            if self.uses_h:
                h = profile.known_signal(t)
                f = profile.modulation_matrix(t) @ h
                c = (t, float(np.abs(h).sum()), f)
            else:
                c = (t, 1.0, profile.velocity(None, t))
            self._pcache = c
        return c[1], c[2]

    def follower_signals(
        self, p: NDArray[np.float64], t: float
    ) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
        """Local errors e, aggregated z, and control u for every follower."""
        if not self.followers:
            z = np.zeros((0, self.d))
            return z, z, z
        q = p[self.nbr] - p[self.fol, None]          # global displacements
        loc = np.matmul(q, self.frames)              # rows are R^T q
        e = np.einsum("fki,fki->fk", loc, loc) - self.dstar2
        z = np.einsum("fk,fki->fi", e, loc)
        np.negative(z, out=z)
        zn = np.sqrt(np.einsum("fi,fi->f", z, z))[:, None]
        safe = np.where(zn > 0.0, zn, 1.0)           # z = 0 rows contribute 0 anyway
        u = z * (self.neg_k * safe**self.alpha_m1)
        if self.fixed:
            u += z * (self.neg_kp * safe**self.one_m_alpha)
        denom = np.abs(z) + self.eps
        sg = np.divide(z, denom, out=np.zeros_like(z), where=denom > 0.0)
        gain = self.gamma
        if self.uses_h:
            gain = gain * self._profile_at(t)[0]
        u -= gain * sg
        return e, z, u

    def rhs(self, p: NDArray[np.float64], t: float) -> NDArray[np.float64]:
        vel = np.empty_like(p)
        vel[: self.d] = self._profile_at(t)[1]
        if self.followers:
            _, _, u = self.follower_signals(p, t)
            vel[self.fol] = np.matmul(self.frames, u[:, :, None])[:, :, 0]
        return vel

    def rhs_with_signals(self, p: NDArray[np.float64], t: float):
        vel = np.empty_like(p)
        vel[: self.d] = self._profile_at(t)[1]
        e, z, u = self.follower_signals(p, t)
        if self.followers:
            vel[self.fol] = np.matmul(self.frames, u[:, :, None])[:, :, 0]
        return vel, e, z, u


def leader_velocity(
    profile: LeaderVelocityProfile, positions: NDArray[np.float64], t: float
) -> NDArray[np.float64]:
    """Reference velocity shared by all leaders at time t."""
    return profile.velocity(positions, t)


def closed_loop_rhs(
    positions: NDArray[np.float64], t: float, cfg: SimConfig
) -> NDArray[np.float64]:
    """Global velocities of all agents: f(t) for leaders, R_i u_i for followers.

    Convenience single-shot evaluation; simulate() builds one engine and
    reuses it across steps instead.
    """
    return _Engine(cfg).rhs(np.asarray(positions, dtype=float), t)


def step_euler(
    state: NDArray[np.float64],
    t: float,
    dt: float,
    rhs: Callable[[NDArray[np.float64], float], NDArray[np.float64]],
) -> NDArray[np.float64]:
    """One explicit Euler step."""
    return state + dt * rhs(state, t)


def step_rk4(
    state: NDArray[np.float64],
    t: float,
    dt: float,
    rhs: Callable[[NDArray[np.float64], float], NDArray[np.float64]],
) -> NDArray[np.float64]:
    """One classical four-stage Runge-Kutta step."""
    k1 = rhs(state, t)
    k2 = rhs(state + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = rhs(state + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = rhs(state + dt * k3, t + dt)
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def basin_report(cfg: SimConfig) -> str | None:
    """First-follower basin check (plane only): warn when V(0) >= threshold."""
    g = cfg.graph
    if g.d != 2 or g.n <= g.d:
        return None
    fid = g.d + 1
    pos = cfg.initial_positions()
    j1, j2 = g.neighbors(fid)
    a = cfg.spec.get(j1, j2) / 2.0
    b, c = cfg.spec.get(fid, j1), cfg.spec.get(fid, j2)
    try:
        threshold = basin_threshold_2d(a, b, c)
    except (ValueError, RuntimeError):
        return None
    e0 = [
        float(np.dot(pos[j - 1] - pos[fid - 1], pos[j - 1] - pos[fid - 1]))
        - cfg.spec.get(fid, j) ** 2
        for j in (j1, j2)
    ]
    v0 = lyapunov_value(np.array(e0))
    if v0 >= threshold:
        return (
            f"first follower starts outside the guaranteed basin: "
            f"V(0)={v0:.6g} >= threshold {threshold:.6g} (convergence not certified)"
        )
    return None


def simulate(cfg: SimConfig, validate: bool = True) -> Trajectory:
    """Integrate the closed loop from t=0 to t_end and record the run.

    Aborts with SimulationError if the state turns non-finite; the message
    carries the last valid time.
    """
    if validate:
        cfg.validate()
    eng = _Engine(cfg)
    g = cfg.graph
    pairs = augment_leader_clique(g).constraints()
    pair_i = np.array([i - 1 for i, _ in pairs], dtype=int)
    pair_j = np.array([j - 1 for _, j in pairs], dtype=int)
    pair_d2 = np.array([cfg.spec.get(i, j) ** 2 for i, j in pairs])

    steps = int(round(cfg.t_end / cfg.dt))
    rec = cfg.record_every
    n_samples = steps // rec + 1
    nf = len(eng.followers)
    times = np.zeros(n_samples)
    positions = np.zeros((n_samples, g.n, g.d))
    errors = np.zeros((n_samples, len(pairs)))
    lyap = np.zeros((n_samples, nf))
    u_norms = np.zeros((n_samples, nf))
    z_norms = np.zeros((n_samples, nf))

    p = cfg.initial_positions()
    dt = cfg.dt
    use_rk4 = cfg.integrator == "rk4"
    sample = 0
    for i in range(steps + 1):
        t = i * dt
        record = i % rec == 0
        if record or not use_rk4:
            vel, e, z, u = eng.rhs_with_signals(p, t)
        if record:
            times[sample] = t
            positions[sample] = p
            diff = p[pair_i] - p[pair_j]
            errors[sample] = (diff**2).sum(axis=1) - pair_d2
            lyap[sample] = 0.25 * (e**2).sum(axis=1)
            u_norms[sample] = np.sqrt((u**2).sum(axis=1))
            z_norms[sample] = np.sqrt((z**2).sum(axis=1))
            sample += 1
        if i == steps:
            break
        if use_rk4:
            k1 = vel if record else eng.rhs(p, t)
            k2 = eng.rhs(p + 0.5 * dt * k1, t + 0.5 * dt)
            k3 = eng.rhs(p + 0.5 * dt * k2, t + 0.5 * dt)
            k4 = eng.rhs(p + dt * k3, t + dt)
            p = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            p = p + dt * vel
        if not np.isfinite(p).all():
            raise SimulationError(
                f"non-finite state after t={t + dt:.6g}; last valid time was {t:.6g}"
            )
    return Trajectory(
        times=times,
        positions=positions,
        errors=errors,
        constraint_pairs=pairs,
        lyapunov=lyap,
        control_norms=u_norms,
        z_norms=z_norms,
        follower_ids=list(g.followers),
        config=cfg,
    )
