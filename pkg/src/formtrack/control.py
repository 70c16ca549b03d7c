"""Distance-error control laws, Lyapunov quantities, and basin diagnostics.

Each follower aggregates its squared distance errors e_ji = d_ji^2 - d*_ji^2
into z = -sum_j e_ji p_ji (all in its own frame) and applies one of four
laws built from -k sgn^alpha(z), an optional fixed-time term -k' sgn^beta(z)
with beta = 2 - alpha, and a robustness term that dominates the unknown
leader velocity: -gamma sgn(z), or -gamma ||h||_1 sgn(z) when the leader
velocity factors as G(p,t) h(t) with ||G||_F <= gamma and h known.

Units, tracked in documentation only: e is length^2, z is length^3, the
Lyapunov value V = (1/4) sum e^2 is length^4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import least_squares

from .graph import DistanceSpec
from .kinematics import sgn_alpha, sgn_elementwise

# classification tolerances for z = 0 critical configurations
Z_MEMBERSHIP_TOL = 1e-9   # ||z|| below this counts as a critical configuration
E_EXCLUSION_TOL = 1e-6    # ||e|| above this excludes the desired set
MERGE_TOL = 1e-6          # critical points closer than this are duplicates


@dataclass(frozen=True)
class ControlConfig:
    """Gains and exponents shared by the control laws.

    beta is pinned to 2 - alpha; k_prime = 0 disables the fixed-time term.
    eps is the signum boundary-layer width (0 = exact signum).
    """

    k: float
    alpha: float
    gamma: float
    k_prime: float = 0.0
    eps: float = 1e-3

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise ValueError(f"k must be > 0, got {self.k}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.k_prime < 0:
            raise ValueError(f"k_prime must be >= 0, got {self.k_prime}")
        if self.eps < 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")

    @property
    def beta(self) -> float:
        return 2.0 - self.alpha


# ---------------------------------------------------------------------------
# leader velocity profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantProfile:
    """Leaders move at a fixed velocity vector."""

    v: NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))

    def velocity(self, positions: NDArray[np.float64], t: float) -> NDArray[np.float64]:
        return self.v.copy()


@dataclass(frozen=True)
class SinusoidProfile:
    """Per-component sinusoid: amplitude * sin(a_k t) / cos(a_k t), alternating.

    Component 0 uses sin, component 1 cos, and so on, so in the plane this is
    amplitude * [sin(a1 t), cos(a2 t)].
    """

    amplitude: float
    frequencies: NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(self, "frequencies", np.asarray(self.frequencies, dtype=float))

    def velocity(self, positions: NDArray[np.float64], t: float) -> NDArray[np.float64]:
        args = self.frequencies * t
        out = np.empty_like(args)
        out[0::2] = np.sin(args[0::2])
        out[1::2] = np.cos(args[1::2])
        return self.amplitude * out


@dataclass(frozen=True)
class ModulatedProfile:
    """Leader velocity G(t) h(t): unknown bounded matrix times a known signal.

    G is d x q with entries scale * sin/cos(a_m t), alternating over the
    flattened q x d layout before transposition, so ||G||_F <= scale*sqrt(dq)
    for all t. h_j(t) = sin(w_j t) for even j, cos(w_j t) for odd j, hence
    ||h||_inf <= 1.
    """

    d: int
    q: int
    scale: float
    g_frequencies: NDArray[np.float64]  # flat, length q*d
    h_frequencies: NDArray[np.float64]  # length q

    def __post_init__(self) -> None:
        g = np.asarray(self.g_frequencies, dtype=float)
        h = np.asarray(self.h_frequencies, dtype=float)
        if g.shape != (self.q * self.d,):
            raise ValueError(f"need {self.q * self.d} G frequencies, got {g.shape}")
        if h.shape != (self.q,):
            raise ValueError(f"need {self.q} h frequencies, got {h.shape}")
        object.__setattr__(self, "g_frequencies", g)
        object.__setattr__(self, "h_frequencies", h)

    def modulation_matrix(self, t: float) -> NDArray[np.float64]:
        args = self.g_frequencies * t
        flat = np.empty_like(args)
        flat[0::2] = np.sin(args[0::2])
        flat[1::2] = np.cos(args[1::2])
        return self.scale * flat.reshape(self.q, self.d).T

    def known_signal(self, t: float) -> NDArray[np.float64]:
        args = self.h_frequencies * t
        out = np.empty_like(args)
        out[0::2] = np.sin(args[0::2])
        out[1::2] = np.cos(args[1::2])
        return out

    def frobenius_bound(self) -> float:
        return self.scale * math.sqrt(self.d * self.q)

    def velocity(self, positions: NDArray[np.float64], t: float) -> NDArray[np.float64]:
        return self.modulation_matrix(t) @ self.known_signal(t)


LeaderVelocityProfile = ConstantProfile | SinusoidProfile | ModulatedProfile


# ---------------------------------------------------------------------------
# error signals
# ---------------------------------------------------------------------------


def squared_distance_errors(
    displacements: list[NDArray[np.float64]] | NDArray[np.float64],
    desired: list[float] | NDArray[np.float64],
) -> NDArray[np.float64]:
    """e_k = ||p_jk_i||^2 - d*_jk^2 for each measured neighbor."""
    disp = np.atleast_2d(np.asarray(displacements, dtype=float))
    want = np.asarray(desired, dtype=float)
    if disp.shape[0] != want.shape[0]:
        raise ValueError(
            f"{disp.shape[0]} displacements vs {want.shape[0]} desired distances"
        )
    return (disp**2).sum(axis=1) - want**2


def compute_z(
    e: NDArray[np.float64],
    displacements: list[NDArray[np.float64]] | NDArray[np.float64],
) -> NDArray[np.float64]:
    """Aggregated signal z = -sum_k e_k * displacement_k."""
    e = np.asarray(e, dtype=float)
    disp = np.atleast_2d(np.asarray(displacements, dtype=float))
    if disp.shape[0] != e.shape[0]:
        raise ValueError(f"{disp.shape[0]} displacements vs {e.shape[0]} errors")
    return -(e[:, None] * disp).sum(axis=0)


@dataclass(frozen=True)
class ErrorState:
    """Errors e, displacement matrix P (columns = neighbors), and z = -P e."""

    e: NDArray[np.float64]
    P: NDArray[np.float64]
    z: NDArray[np.float64]

    @classmethod
    def from_displacements(
        cls,
        displacements: list[NDArray[np.float64]] | NDArray[np.float64],
        desired: list[float] | NDArray[np.float64],
    ) -> "ErrorState":
        disp = np.atleast_2d(np.asarray(displacements, dtype=float))
        e = squared_distance_errors(disp, desired)
        return cls(e=e, P=disp.T.copy(), z=-(disp.T @ e))


# ---------------------------------------------------------------------------
# control laws
# ---------------------------------------------------------------------------


def control_basic(z: NDArray[np.float64], cfg: ControlConfig) -> NDArray[np.float64]:
    """u = -k sgn^alpha(z) - gamma sgn(z)."""
    return -cfg.k * sgn_alpha(z, cfg.alpha) - cfg.gamma * sgn_elementwise(z, cfg.eps)


def control_fixed_time(z: NDArray[np.float64], cfg: ControlConfig) -> NDArray[np.float64]:
    """u = -k sgn^alpha(z) - k' sgn^beta(z) - gamma sgn(z), beta = 2 - alpha."""
    return control_basic(z, cfg) - cfg.k_prime * sgn_alpha(np.asarray(z, float), cfg.beta)


def control_modulated(
    z: NDArray[np.float64], h_now: NDArray[np.float64], cfg: ControlConfig
) -> NDArray[np.float64]:
    """u = -k sgn^alpha(z) - gamma ||h||_1 sgn(z) for factored leader velocity."""
    h1 = float(np.abs(np.asarray(h_now, dtype=float)).sum())
    return -cfg.k * sgn_alpha(z, cfg.alpha) - cfg.gamma * h1 * sgn_elementwise(z, cfg.eps)


def control_modulated_fixed_time(
    z: NDArray[np.float64], h_now: NDArray[np.float64], cfg: ControlConfig
) -> NDArray[np.float64]:
    """Modulated law plus the fixed-time term -k' sgn^beta(z)."""
    return control_modulated(z, h_now, cfg) - cfg.k_prime * sgn_alpha(
        np.asarray(z, float), cfg.beta
    )


def lyapunov_value(e: NDArray[np.float64]) -> float:
    """V = (1/4) sum_k e_k^2; zero exactly at the desired distances."""
    e = np.asarray(e, dtype=float)
    return 0.25 * float((e**2).sum())


# ---------------------------------------------------------------------------
# basin threshold (smallest Lyapunov value over z = 0, e != 0 configurations)
# ---------------------------------------------------------------------------


def _depressed_cubic_roots(p: float, q: float) -> list[float]:
    """Real roots of x^3 + p x + q = 0, closed form plus Newton polish."""
    scale = max(1.0, abs(p), abs(q))
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    disc_scale = max(1e-300, (q / 2.0) ** 2 + abs(p / 3.0) ** 3)
    if abs(p) < 1e-14 * scale and abs(q) < 1e-14 * scale:
        roots = [0.0]
    elif disc > 1e-12 * disc_scale:
        s = math.sqrt(disc)
        roots = [math.copysign(abs(-q / 2 + s) ** (1 / 3), -q / 2 + s)
                 + math.copysign(abs(-q / 2 - s) ** (1 / 3), -q / 2 - s)]
    elif disc < -1e-12 * disc_scale:
        r = 2.0 * math.sqrt(-p / 3.0)
        phi = math.acos(min(1.0, max(-1.0, 3.0 * q / (p * r))))
        roots = [r * math.cos(phi / 3.0 - 2.0 * math.pi * k / 3.0) for k in range(3)]
    else:
        # borderline double root
        roots = [3.0 * q / p, -3.0 * q / (2.0 * p)]
    polished = []
    for x in roots:
        for _ in range(3):
            fx = x**3 + p * x + q
            dfx = 3 * x**2 + p
            if abs(dfx) < 1e-30:
                break
            x -= fx / dfx
        polished.append(x)
    # drop duplicates from repeated-root branches
    out: list[float] = []
    for x in sorted(polished):
        if not out or abs(x - out[-1]) > 1e-9 * scale:
            out.append(x)
    return out


def _validate_triangle(a: float, b: float, c: float) -> None:
    if min(a, b, c) <= 0:
        raise ValueError(f"distances must be positive, got a={a}, b={b}, c={c}")
    if not (b + c > 2 * a and 2 * a + c > b and 2 * a + b > c):
        raise ValueError(
            f"no nondegenerate triangle with leader spacing {2 * a} and legs {b}, {c}"
        )


def basin_critical_points_2d(
    a: float, b: float, c: float
) -> list[tuple[float, NDArray[np.float64], float]]:
    """Critical configurations with z = 0 but e != 0, for one planar follower.

    Leaders sit at (-a, 0) and (a, 0) with desired leg distances b and c.
    Configurations with z = 0 and e != 0 all lie on the leader axis, where
    they solve the cubic ((x+a)^2 - b^2)(x+a) + ((x-a)^2 - c^2)(x-a) = 0.
    Returns (x, e, V) per qualifying root (at most three).
    """
    _validate_triangle(a, b, c)
    # expanded: 2x^3 + (6a^2 - b^2 - c^2) x - a(b^2 - c^2) = 0
    p = (6 * a**2 - b**2 - c**2) / 2.0
    q = -(a * (b**2 - c**2)) / 2.0
    points = []
    for x in _depressed_cubic_roots(p, q):
        e = np.array([(x + a) ** 2 - b**2, (x - a) ** 2 - c**2])
        if np.linalg.norm(e) <= E_EXCLUSION_TOL:
            continue  # desired set, not a spurious critical point
        points.append((x, e, lyapunov_value(e)))
    return points


def basin_threshold_2d(a: float, b: float, c: float) -> float:
    """Smallest Lyapunov value over spurious critical configurations.

    Initial conditions with V(0) below this threshold cannot be attracted
    to a z = 0 configuration other than the desired distances.
    """
    points = basin_critical_points_2d(a, b, c)
    if not points:
        raise RuntimeError(
            "no z = 0 configurations with nonzero error found; "
            "basin threshold undefined for this distance set"
        )
    return min(v for _, _, v in points)


def basin_threshold_numeric(
    spec: DistanceSpec,
    leader_positions: NDArray[np.float64],
    *,
    starts: int = 64,
    seed: int = 0,
) -> float:
    """Basin threshold by multi-start search for z = 0, e != 0 configurations.

    Works in any supported dimension (the closed-form axis construction
    exists only in the plane). spec carries the leader pair distances
    (vertices 1..d) and the follower's distances (vertex d+1). Leaders must
    already sit at their desired mutual distances.
    """
    leaders = np.atleast_2d(np.asarray(leader_positions, dtype=float))
    d = leaders.shape[1]
    if leaders.shape[0] != d:
        raise ValueError(f"need {d} leaders in R^{d}, got {leaders.shape[0]}")
    fid = d + 1
    for i in range(1, d + 1):
        for j in range(i + 1, d + 1):
            want = spec.get(i, j)
            have = float(np.linalg.norm(leaders[j - 1] - leaders[i - 1]))
            if abs(have - want) > 1e-8:
                raise ValueError(
                    f"leaders {i},{j} at distance {have}, desired {want}"
                )
    dstar = np.array([spec.get(j, fid) for j in range(1, d + 1)])

    def z_of(x: NDArray[np.float64]) -> NDArray[np.float64]:
        qcols = leaders - x
        e = (qcols**2).sum(axis=1) - dstar**2
        return -(e[:, None] * qcols).sum(axis=0)

    def jac_of(x: NDArray[np.float64]) -> NDArray[np.float64]:
        qcols = leaders - x
        e = (qcols**2).sum(axis=1) - dstar**2
        return 2.0 * qcols.T @ qcols + e.sum() * np.eye(d)

    rng = np.random.default_rng(seed)
    center = leaders.mean(axis=0)
    radius = 2.0 * float(dstar.max())
    found: list[NDArray[np.float64]] = []
    for _ in range(starts):
        direction = rng.normal(size=d)
        direction /= np.linalg.norm(direction)
        x0 = center + radius * rng.uniform() ** (1.0 / d) * direction
        res = least_squares(z_of, x0, jac=jac_of, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        x = res.x
        if np.linalg.norm(z_of(x)) > Z_MEMBERSHIP_TOL:
            continue
        if any(np.linalg.norm(x - y) < MERGE_TOL for y in found):
            continue
        found.append(x)
    values = []
    for x in found:
        qcols = leaders - x
        e = (qcols**2).sum(axis=1) - dstar**2
        if np.linalg.norm(e) > E_EXCLUSION_TOL:
            values.append(lyapunov_value(e))
    if not values:
        raise RuntimeError(
            "multi-start search found no z = 0 configurations with nonzero error"
        )
    return min(values)


# ---------------------------------------------------------------------------
# finite-time rate diagnostics
# ---------------------------------------------------------------------------


def convergence_gain_bound(
    p_star: NDArray[np.float64], v_radius: float, det_margin: float
) -> float:
    """Lower bound sigma with ||z||^2 >= sigma * V inside the V <= v_radius set.

    p_star is the desired displacement matrix (columns = neighbor offsets at
    the desired shape); det_margin must lie in (0, det(P*)^2) and v_radius is
    the Lyapunov sublevel radius the bound is valid on. Feeds the decay rate
    k * sigma^((alpha+1)/2). Diagnostic: both knobs are caller-chosen.
    """
    p_star = np.asarray(p_star, dtype=float)
    d = p_star.shape[0]
    if p_star.shape != (d, d):
        raise ValueError(f"P* must be square, got {p_star.shape}")
    det2 = float(np.linalg.det(p_star)) ** 2
    if det2 <= 0 or not np.isfinite(det2):
        raise ValueError("P* is singular; the bound needs a nondegenerate shape")
    if not 0.0 < det_margin < det2:
        raise ValueError(f"det_margin must be in (0, {det2}), got {det_margin}")
    if v_radius < 0:
        raise ValueError(f"v_radius must be >= 0, got {v_radius}")
    zeta = det2 - det_margin
    fro2 = float((p_star**2).sum())
    denom = (math.sqrt(4.0 * d * v_radius) + fro2) ** (d - 1)
    return 4.0 * zeta * (d - 1) ** (d - 1) / denom


def finite_time_bound(v_start: float, t_start: float, rate: float, exponent: float) -> float:
    """Upper bound on the vanishing time of V' <= -rate * V^exponent.

    T = t_start + V^(1-exponent) / (rate * (1 - exponent)); exponent must be
    in (0, 1) and rate positive.
    """
    if rate <= 0:
        raise ValueError(f"rate must be > 0, got {rate}")
    if not 0.0 < exponent < 1.0:
        raise ValueError(f"exponent must be in (0, 1), got {exponent}")
    if v_start < 0:
        raise ValueError(f"v_start must be >= 0, got {v_start}")
    return t_start + v_start ** (1.0 - exponent) / (rate * (1.0 - exponent))


def check_basin(v0: float, threshold: float) -> bool:
    """True iff V(0) is strictly inside the guaranteed convergence basin."""
    if threshold <= 0:
        raise ValueError(f"threshold must be > 0, got {threshold}")
    return v0 < threshold
