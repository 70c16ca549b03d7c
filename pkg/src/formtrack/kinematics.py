"""Local reference frames and the signum-family vector operations.

The controllers regulate squared distances measured in each follower's own
frame, so everything here is built around a proper rotation per agent and
two nonlinearities: the power signum u ↦ u/‖u‖^{1-α} (global 2-norm) and the
componentwise signum with an optional boundary layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.stats import special_ortho_group

ORTHONORMALITY_TOL = 1e-12


@dataclass(frozen=True)
class FrameRotation:
    """Proper rotation (local frame -> global frame).

    matrix must be orthogonal with determinant +1 within 1e-12.
    """

    matrix: NDArray[np.float64]

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"rotation matrix must be square, got shape {m.shape}")
        if not np.allclose(m.T @ m, np.eye(m.shape[0]), atol=1e-9):
            raise ValueError("rotation matrix is not orthogonal")
        if abs(np.linalg.det(m) - 1.0) > 1e-9:
            raise ValueError("rotation matrix must have determinant +1")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, d: int) -> "FrameRotation":
        return cls(np.eye(d))

    def to_local(self, v: NDArray[np.float64]) -> NDArray[np.float64]:
        """Express a global vector in this frame (R^T v)."""
        return self.matrix.T @ np.asarray(v, dtype=float)

    def to_global(self, v: NDArray[np.float64]) -> NDArray[np.float64]:
        """Express a local vector in the global frame (R v)."""
        return self.matrix @ np.asarray(v, dtype=float)


@dataclass
class AgentState:
    """One agent: vertex id (1-based), global position, role, local frame.

    Leaders know the global frame, so their frame is the identity (or left
    as default); followers carry an arbitrary constant rotation.
    """

    id: int
    position: NDArray[np.float64]
    role: str  # "leader" | "follower"
    frame: FrameRotation | None = field(default=None)

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=float)
        if self.role not in ("leader", "follower"):
            raise ValueError(f"role must be 'leader' or 'follower', got {self.role!r}")
        d = self.position.shape[0]
        if self.frame is None:
            self.frame = FrameRotation.identity(d)
        elif self.role == "leader" and not np.allclose(self.frame.matrix, np.eye(d)):
            raise ValueError("leaders use the global frame; non-identity frame given")
        if self.frame.dim != d:
            raise ValueError("frame dimension does not match position dimension")


def local_displacement(
    p_j: NDArray[np.float64],
    p_i: NDArray[np.float64],
    rotation: FrameRotation,
) -> NDArray[np.float64]:
    """Relative position of agent j seen from agent i's frame: R_i^T (p_j - p_i)."""
    p_j = np.asarray(p_j, dtype=float)
    p_i = np.asarray(p_i, dtype=float)
    if p_j.shape != p_i.shape:
        raise ValueError(f"dimension mismatch: {p_j.shape} vs {p_i.shape}")
    return rotation.to_local(p_j - p_i)


def sgn_alpha(u: NDArray[np.float64], alpha: float) -> NDArray[np.float64]:
    """Power signum u/‖u‖^{1-alpha}; continuously extended to 0 at the origin.

    ‖sgn_alpha(u)‖ = ‖u‖^alpha. Exponents in (0, 2] are accepted: the
    fixed-time laws reuse the same formula with beta = 2 - alpha.
    """
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must be in (0, 2], got {alpha}")
    u = np.asarray(u, dtype=float)
    n = float(np.linalg.norm(u))
    if n == 0.0:
        return np.zeros_like(u)
    return u * n ** (alpha - 1.0)


def sgn_elementwise(u: NDArray[np.float64], eps: float = 0.0) -> NDArray[np.float64]:
    """Componentwise signum, optionally smoothed by a boundary layer.

    eps = 0 gives the exact signum (0 at 0); eps > 0 gives u_k/(|u_k| + eps),
    which preserves sign and odd symmetry and stays inside [-1, 1].
    """
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    u = np.asarray(u, dtype=float)
    if eps == 0.0:
        return np.sign(u)
    return u / (np.abs(u) + eps)


def random_rotation(seed: int, d: int) -> FrameRotation:
    """Haar-uniform proper rotation in R^d, deterministic per seed."""
    if d not in (2, 3):
        raise ValueError(f"d must be 2 or 3, got {d}")
    rng = np.random.default_rng(seed)
    return FrameRotation(special_ortho_group.rvs(d, random_state=rng))
