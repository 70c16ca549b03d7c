"""Shared test utilities: independent oracles and config builders."""

from __future__ import annotations

import numpy as np

from formtrack import (
    AgentState,
    ConstantProfile,
    ControlConfig,
    DistanceSpec,
    SimConfig,
    SinusoidProfile,
    Trajectory,
    augment_leader_clique,
    build_procedure1_graph,
    random_rotation,
)


def basin_threshold_bisection_oracle(a: float, b: float, c: float) -> float:
    """Brute-force basin threshold: grid sign changes plus bisection.

    Independent of the closed-form cubic path: scans the leader axis for
    sign changes of g(x) = ((x+a)^2-b^2)(x+a) + ((x-a)^2-c^2)(x-a), refines
    each bracket by bisection, evaluates V there, and keeps configurations
    with nonzero error.
    """

    def g(x: float) -> float:
        return ((x + a) ** 2 - b**2) * (x + a) + ((x - a) ** 2 - c**2) * (x - a)

    span = 2.0 * (a + b + c)
    xs = np.linspace(-span, span, 400_001)
    vals = np.array([g(x) for x in xs])
    roots = []
    sign_change = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
    for i in sign_change:
        lo, hi = xs[i], xs[i + 1]
        flo = g(lo)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fmid = g(mid)
            if flo * fmid <= 0:
                hi = mid
            else:
                lo, flo = mid, fmid
            if hi - lo < 1e-14:
                break
        roots.append(0.5 * (lo + hi))
    roots.extend(xs[np.flatnonzero(vals == 0.0)])
    best = None
    for x in roots:
        e = np.array([(x + a) ** 2 - b**2, (x - a) ** 2 - c**2])
        if np.linalg.norm(e) <= 1e-6:
            continue
        v = 0.25 * float((e**2).sum())
        best = v if best is None else min(best, v)
    assert best is not None, "oracle found no spurious critical configuration"
    return best


def random_realizable_triple(rng: np.random.Generator) -> tuple[float, float, float]:
    """(a, b, c) with a strict triangle margin, for threshold cross-checks."""
    while True:
        a = rng.uniform(0.3, 2.0)
        b = rng.uniform(0.3, 4.0)
        c = rng.uniform(0.3, 4.0)
        margin = 0.05
        if b + c > 2 * a + margin and 2 * a + c > b + margin and 2 * a + b > c + margin:
            return a, b, c


def first_follower_config(
    seed: int,
    *,
    eps: float = 0.0,
    dt: float = 1e-4,
    t_end: float = 1.6,
    integrator: str = "euler",
    v0_range: tuple[float, float] = (0.1, 3.6),
    amplitude: float = 1.0,
    k: float = 1.0,
    gamma: float = 2.0,
    alpha: float = 0.5,
) -> SimConfig:
    """One follower between two leaders 2 apart, all desired distances 2.

    The follower position is rejection-sampled until V(0) lands in
    v0_range; the frame is a seeded random rotation.
    """
    rng = np.random.default_rng(seed)
    graph = build_procedure1_graph(3, 2)
    spec = DistanceSpec(
        {pair: 2.0 for pair in augment_leader_clique(graph).constraints()}
    )
    leaders = np.array([[-1.0, 0.0], [1.0, 0.0]])
    freqs = rng.uniform(0.1, 2.0, 2)
    frame = random_rotation(int(rng.integers(0, 2**32)), 2)
    while True:
        x = rng.uniform(-3.0, 4.0, 2)
        e0 = np.array([((leaders[j] - x) ** 2).sum() - 4.0 for j in range(2)])
        v0 = 0.25 * float((e0**2).sum())
        if v0_range[0] < v0 < v0_range[1]:
            break
    states = [
        AgentState(id=1, position=leaders[0], role="leader"),
        AgentState(id=2, position=leaders[1], role="leader"),
        AgentState(id=3, position=x, role="follower", frame=frame),
    ]
    profile = (
        SinusoidProfile(amplitude=amplitude, frequencies=freqs)
        if amplitude > 0
        else ConstantProfile(v=np.zeros(2))
    )
    return SimConfig(
        graph=graph,
        spec=spec,
        initial_states=states,
        profile=profile,
        control=ControlConfig(k=k, alpha=alpha, gamma=gamma, eps=eps),
        law="basic",
        dt=dt,
        t_end=t_end,
        integrator=integrator,
        seed=seed,
    )


def synthetic_trajectory(
    times: np.ndarray,
    follower_errors: np.ndarray,
    positions: np.ndarray | None = None,
) -> Trajectory:
    """Minimal n=3 planar Trajectory carrying hand-made series.

    follower_errors is (S, 2) for the single follower; positions default to
    zeros. Lyapunov/z/u series are derived consistently from the errors.
    """
    cfg = first_follower_config(0, t_end=1.0, dt=0.5)
    s = len(times)
    if positions is None:
        positions = np.zeros((s, 3, 2))
    pairs = [(1, 2), (1, 3), (2, 3)]
    errors = np.zeros((s, 3))
    errors[:, 1] = follower_errors[:, 0]
    errors[:, 2] = follower_errors[:, 1]
    lyap = 0.25 * (follower_errors**2).sum(axis=1, keepdims=True)
    return Trajectory(
        times=np.asarray(times, dtype=float),
        positions=positions,
        errors=errors,
        constraint_pairs=pairs,
        lyapunov=lyap,
        control_norms=np.zeros((s, 1)),
        z_norms=np.zeros((s, 1)),
        follower_ids=[3],
        config=cfg,
    )
