"""Scenario files: a YAML schema that loads to a validated SimConfig.

Randomized fields (profile frequencies, follower positions, follower
frames) are always drawn from the scenario seed in that fixed order, so a
scenario with `random` entries is still fully reproducible. Validation
covers the three standing assumptions of the model:

  1. the augmented constraint graph is rigid (numeric rank test, at the
     desired realization when given, else at a seeded generic one),
  2. the desired distance set is realizable (checked when a desired
     realization is supplied),
  3. leaders start at their desired mutual spacing and the reference
     velocity respects the known bound gamma.

`check` additionally reports, as a warning only, whether the first follower
starts inside the guaranteed convergence basin (plane only).
"""

from __future__ import annotations

import math
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .control import (
    ConstantProfile,
    ControlConfig,
    LeaderVelocityProfile,
    ModulatedProfile,
    SinusoidProfile,
)
from .graph import (
    AugmentedGraph,
    DistanceSpec,
    Realization,
    augment_leader_clique,
    build_procedure1_graph,
    rigidity_rank_check,
    verify_acyclic,
    verify_realizable,
)
from .kinematics import AgentState, FrameRotation, random_rotation
from .simulate import SimConfig, ValidationError, basin_report

BUNDLED = ("sim1", "sim2a", "sim2b")
FREQ_RANGE = (0.1, 2.0)  # seeded draw range for `random` frequencies
REALIZABILITY_TOL = 1e-9


class ScenarioError(ValueError):
    """A scenario file failed to parse or validate; message names the field."""


def resolve_scenario(name_or_path: str | Path) -> Path:
    """Map a bundled scenario name or filesystem path to a readable file."""
    p = Path(name_or_path)
    if p.exists():
        return p
    if str(name_or_path) in BUNDLED:
        ref = resources.files("formtrack.scenarios") / f"{name_or_path}.yaml"
        with resources.as_file(ref) as concrete:
            return Path(concrete)
    raise ScenarioError(
        f"scenario {name_or_path!r} is neither a file nor one of {BUNDLED}"
    )


def _scenario_text(name_or_path: str | Path) -> tuple[str, str]:
    """(contents, display name); reads bundled names without a temp file."""
    p = Path(name_or_path)
    if p.exists():
        return p.read_text(), str(p)
    if str(name_or_path) in BUNDLED:
        ref = resources.files("formtrack.scenarios") / f"{name_or_path}.yaml"
        return ref.read_text(), str(name_or_path)
    raise ScenarioError(
        f"scenario {name_or_path!r} is neither a file nor one of {BUNDLED}"
    )


def _section(doc: dict, key: str) -> dict:
    if key not in doc:
        raise ScenarioError(f"{key}: section missing")
    if not isinstance(doc[key], dict):
        raise ScenarioError(f"{key}: expected a mapping")
    return doc[key]


def _get(section: dict, key: str, path: str, default=None, required: bool = False):
    if key not in section:
        if required:
            raise ScenarioError(f"{path}.{key}: field missing")
        return default
    return section[key]


def _parse_pair(token: str, path: str) -> tuple[int, int]:
    parts = str(token).split("-")
    if len(parts) != 2:
        raise ScenarioError(f"{path}: pair keys look like 'i-j', got {token!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise ScenarioError(f"{path}: non-integer vertex in {token!r}") from exc


def _build_distances(doc: dict, ag: AugmentedGraph) -> dict[tuple[int, int], float]:
    sec = _section(doc, "distances")
    default = _get(sec, "default", "distances")
    pairs = _get(sec, "pairs", "distances", default={}) or {}
    out: dict[tuple[int, int], float] = {}
    for token, val in pairs.items():
        i, j = _parse_pair(token, f"distances.pairs.{token}")
        out[(min(i, j), max(i, j))] = float(val)
    for pair in ag.constraints():
        if pair not in out:
            if default is None:
                raise ScenarioError(
                    f"distances: pair {pair[0]}-{pair[1]} has no entry and no default"
                )
            out[pair] = float(default)
    return out


def _build_profile(
    sec: dict, d: int, gamma: float, rng: np.random.Generator
) -> LeaderVelocityProfile:
    kind = _get(sec, "kind", "leaders.profile", required=True)
    if kind == "constant":
        v = np.asarray(_get(sec, "v", "leaders.profile", required=True), dtype=float)
        if v.shape != (d,):
            raise ScenarioError(f"leaders.profile.v: expected {d} components")
        return ConstantProfile(v=v)
    if kind == "sinusoid":
        amplitude = float(_get(sec, "amplitude", "leaders.profile", required=True))
        freqs = _get(sec, "frequencies", "leaders.profile", default="random")
        if isinstance(freqs, str):
            if freqs != "random":
                raise ScenarioError(
                    f"leaders.profile.frequencies: 'random' or a list, got {freqs!r}"
                )
            freqs = rng.uniform(*FREQ_RANGE, d)
        freqs = np.asarray(freqs, dtype=float)
        if freqs.shape != (d,):
            raise ScenarioError(f"leaders.profile.frequencies: expected {d} values")
        return SinusoidProfile(amplitude=amplitude, frequencies=freqs)
    if kind == "modulated":
        q = int(_get(sec, "q", "leaders.profile", default=2))
        scale = _get(sec, "scale", "leaders.profile", default="auto")
        if scale == "auto":
            scale = gamma / math.sqrt(d * q)
        scale = float(scale)
        freqs = _get(sec, "frequencies", "leaders.profile", default="random")
        if isinstance(freqs, str):
            if freqs != "random":
                raise ScenarioError(
                    f"leaders.profile.frequencies: 'random' or a list, got {freqs!r}"
                )
            freqs = rng.uniform(*FREQ_RANGE, d * q)
        freqs = np.asarray(freqs, dtype=float)
        if freqs.shape != (d * q,):
            raise ScenarioError(f"leaders.profile.frequencies: expected {d * q} values")
        h_freqs = np.asarray(
            _get(sec, "h_frequencies", "leaders.profile", default=[1.0, 0.5][:q]),
            dtype=float,
        )
        if h_freqs.shape != (q,):
            raise ScenarioError(f"leaders.profile.h_frequencies: expected {q} values")
        return ModulatedProfile(
            d=d, q=q, scale=scale, g_frequencies=freqs, h_frequencies=h_freqs
        )
    raise ScenarioError(f"leaders.profile.kind: unknown kind {kind!r}")


def _build_followers(
    doc: dict, n: int, d: int, rng: np.random.Generator
) -> tuple[np.ndarray, list[FrameRotation]]:
    sec = _section(doc, "followers")
    count = n - d
    pos_field = _get(sec, "positions", "followers", default="random")
    if isinstance(pos_field, str):
        if pos_field != "random":
            raise ScenarioError(
                f"followers.positions: 'random' or a list, got {pos_field!r}"
            )
        box = _get(sec, "box", "followers", required=True)
        lo, hi = (np.asarray(b, dtype=float) for b in box)
        if lo.shape != (d,) or hi.shape != (d,):
            raise ScenarioError(f"followers.box: expected two {d}-vectors")
        positions = rng.uniform(lo, hi, (count, d))
    else:
        positions = np.asarray(pos_field, dtype=float)
        if positions.shape != (count, d):
            raise ScenarioError(
                f"followers.positions: expected {count} x {d}, got {positions.shape}"
            )
    frames_field = _get(sec, "frames", "followers", default="random")
    if isinstance(frames_field, str):
        if frames_field != "random":
            raise ScenarioError(f"followers.frames: 'random' or a list, got {frames_field!r}")
        seeds = rng.integers(0, 2**32, count)
        frames = [random_rotation(int(s), d) for s in seeds]
    else:
        if len(frames_field) != count:
            raise ScenarioError(f"followers.frames: expected {count} matrices")
        try:
            frames = [FrameRotation(np.asarray(m, dtype=float)) for m in frames_field]
        except ValueError as exc:
            raise ScenarioError(f"followers.frames: {exc}") from exc
    return positions, frames


def load_scenario(name_or_path: str | Path) -> SimConfig:
    """Parse, randomize, and validate a scenario into a runnable SimConfig."""
    text, name = _scenario_text(name_or_path)
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{name}: YAML parse error: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{name}: expected a mapping at the top level")

    gsec = _section(doc, "graph")
    try:
        n = int(_get(gsec, "n", "graph", required=True))
        d = int(_get(gsec, "d", "graph", required=True))
        graph = build_procedure1_graph(n, d)
    except ValueError as exc:
        raise ScenarioError(f"graph: {exc}") from exc
    if not verify_acyclic(graph):
        raise ScenarioError("graph: sensing graph has a directed cycle")
    ag = augment_leader_clique(graph)

    csec = _section(doc, "control")
    law = _get(csec, "law", "control", default="basic")
    try:
        control = ControlConfig(
            k=float(_get(csec, "k", "control", default=1.0)),
            alpha=float(_get(csec, "alpha", "control", default=0.5)),
            gamma=float(_get(csec, "gamma", "control", required=True)),
            k_prime=float(_get(csec, "k_prime", "control", default=0.0)),
            eps=float(_get(csec, "eps", "control", default=1e-3)),
        )
    except ValueError as exc:
        raise ScenarioError(f"control: {exc}") from exc

    try:
        spec = DistanceSpec(distances=_build_distances(doc, ag))
        spec.validate_cover(ag)
    except ValueError as exc:
        raise ScenarioError(f"distances: {exc}") from exc

    ssec = _section(doc, "sim")
    seed = int(_get(ssec, "seed", "sim", default=0))
    rng = np.random.default_rng(seed)

    lsec = _section(doc, "leaders")
    lead_pos = np.asarray(_get(lsec, "positions", "leaders", required=True), dtype=float)
    if lead_pos.shape != (d, d):
        raise ScenarioError(f"leaders.positions: expected {d} x {d}, got {lead_pos.shape}")
    profile = _build_profile(
        _section(lsec, "profile") if "profile" in lsec else {"kind": "constant", "v": [0.0] * d},
        d,
        control.gamma,
        rng,
    )

    fol_pos, frames = _build_followers(doc, n, d, rng)

    # assumptions 1 and 2: rigidity and realizability of the desired shape
    desired = doc.get("desired_realization")
    if desired is not None:
        realization = Realization(np.asarray(desired, dtype=float))
        if realization.positions.shape != (n, d):
            raise ScenarioError(
                f"desired_realization: expected {n} x {d}, got {realization.positions.shape}"
            )
        if not verify_realizable(spec, realization, tol=REALIZABILITY_TOL):
            raise ScenarioError(
                "desired_realization: assumption 2 violated: realization does not "
                "meet the desired distances"
            )
        spec.desired_realization = realization
        rigid_at = realization
    else:
        rigid_at = Realization(rng.normal(0.0, 1.0, (n, d)))
    if not rigidity_rank_check(rigid_at, ag):
        raise ScenarioError(
            "graph/distances: assumption 1 violated: augmented constraint graph "
            "fails the numeric rigidity rank test"
        )

    states = []
    for i in range(1, n + 1):
        if i <= d:
            states.append(AgentState(id=i, position=lead_pos[i - 1], role="leader"))
        else:
            states.append(
                AgentState(
                    id=i,
                    position=fol_pos[i - d - 1],
                    role="follower",
                    frame=frames[i - d - 1],
                )
            )

    cfg = SimConfig(
        graph=graph,
        spec=spec,
        initial_states=states,
        profile=profile,
        control=control,
        law=str(law),
        dt=float(_get(ssec, "dt", "sim", required=True)),
        t_end=float(_get(ssec, "t_end", "sim", required=True)),
        integrator=str(_get(ssec, "integrator", "sim", default="rk4")),
        seed=seed,
        record_every=int(_get(ssec, "record_every", "sim", default=1)),
    )
    try:
        cfg.validate()
    except ValidationError as exc:
        raise ScenarioError(str(exc)) from exc
    warning = basin_report(cfg)
    if warning:
        cfg.warnings.append(warning)
    return cfg
