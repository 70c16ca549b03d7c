"""Leader-follower sensing graphs, desired distance sets, and rigidity checks.

Vertices are numbered 1..n; vertices 1..d are leaders, the rest followers.
The construction procedure attaches each follower i to the d preceding
vertices, which keeps the directed graph acyclic and every follower with
exactly d neighbors. For distance bookkeeping the leader pairs are added as
extra constraints (the leaders hold their mutual spacing by assumption), and
constraints are stored once per unordered pair while the directed edges are
kept for control (who measures whom).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

# numeric rank threshold factor: max(m, dn) * sigma_max * RANK_RTOL
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class FormationGraph:
    """Directed sensing graph: edge (i, j) means i measures and controls d_ij."""

    n: int
    d: int
    edges: tuple[tuple[int, int], ...]

    @property
    def leaders(self) -> range:
        return range(1, self.d + 1)

    @property
    def followers(self) -> range:
        return range(self.d + 1, self.n + 1)

    def neighbors(self, i: int) -> list[int]:
        """Out-neighbors of vertex i, in edge order."""
        return [j for (a, j) in self.edges if a == i]


@dataclass(frozen=True)
class AugmentedGraph:
    """Base graph plus the leader clique (all ordered leader pairs)."""

    base: FormationGraph
    extra_edges: tuple[tuple[int, int], ...]

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return self.base.edges + self.extra_edges

    def constraints(self) -> list[tuple[int, int]]:
        """Unordered distance constraints (i < j), sorted."""
        return sorted({(min(i, j), max(i, j)) for i, j in self.edges})


@dataclass(frozen=True)
class Realization:
    """Stacked coordinate vector p in R^{d*n}; agent i occupies block i-1."""

    positions: NDArray[np.float64]  # shape (n, d)

    def __post_init__(self) -> None:
        p = np.atleast_2d(np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "positions", p)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def stacked(self) -> NDArray[np.float64]:
        return self.positions.reshape(-1)


@dataclass
class DistanceSpec:
    """Desired distances over the augmented graph's unordered constraints.

    Keys are normalized to (min, max); every constraint of the augmented
    graph must carry exactly one positive distance.
    """

    distances: dict[tuple[int, int], float]
    desired_realization: Realization | None = field(default=None)

    def __post_init__(self) -> None:
        norm: dict[tuple[int, int], float] = {}
        for (i, j), val in self.distances.items():
            if i == j:
                raise ValueError(f"self-distance ({i},{j}) is meaningless")
            key = (min(i, j), max(i, j))
            if key in norm and not np.isclose(norm[key], val):
                raise ValueError(f"conflicting distances for pair {key}")
            if val <= 0:
                raise ValueError(f"distance for pair {key} must be > 0, got {val}")
            norm[key] = float(val)
        self.distances = norm

    def get(self, i: int, j: int) -> float:
        return self.distances[(min(i, j), max(i, j))]

    def validate_cover(self, ag: AugmentedGraph) -> None:
        """Require exactly one distance per unordered constraint of ag."""
        need = set(ag.constraints())
        have = set(self.distances)
        if need != have:
            missing = sorted(need - have)
            extra = sorted(have - need)
            raise ValueError(
                f"distance set does not match constraints: missing {missing}, extra {extra}"
            )

    @classmethod
    def from_realization(cls, ag: AugmentedGraph, r: Realization) -> "DistanceSpec":
        """Read the desired distances off a realization of the augmented graph."""
        dist = {
            (i, j): float(np.linalg.norm(r.positions[j - 1] - r.positions[i - 1]))
            for i, j in ag.constraints()
        }
        return cls(distances=dist, desired_realization=r)


def build_procedure1_graph(n: int, d: int) -> FormationGraph:
    """Attach each vertex i > d to the d preceding vertices {i-d, ..., i-1}."""
    if d not in (2, 3):
        raise ValueError(f"ambient dimension must be 2 or 3, got {d}")
    if n < d:
        raise ValueError(f"need at least d={d} agents, got n={n}")
    edges = tuple((i, j) for i in range(d + 1, n + 1) for j in range(i - d, i))
    return FormationGraph(n=n, d=d, edges=edges)


def augment_leader_clique(g: FormationGraph) -> AugmentedGraph:
    """Add all ordered leader pairs; leaders keep their spacing by assumption."""
    extra = tuple(
        (i, j) for i in range(1, g.d + 1) for j in range(1, g.d + 1) if i != j
    )
    return AugmentedGraph(base=g, extra_edges=extra)


def verify_acyclic(g: FormationGraph) -> bool:
    """True iff the directed edge set has no cycle (Kahn's algorithm)."""
    out: dict[int, list[int]] = {v: [] for v in range(1, g.n + 1)}
    indeg = {v: 0 for v in range(1, g.n + 1)}
    for i, j in g.edges:
        out[i].append(j)
        indeg[j] += 1
    queue = [v for v, k in indeg.items() if k == 0]
    seen = 0
    while queue:
        v = queue.pop()
        seen += 1
        for w in out[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    return seen == g.n


def rigidity_matrix(r: Realization, ag: AugmentedGraph) -> NDArray[np.float64]:
    """Jacobian-style matrix of the distance constraints, one row per pair.

    Row for constraint (i, j) holds (p_i - p_j)^T in block i and the
    negation in block j.
    """
    n, d = ag.base.n, ag.base.d
    if r.n != n or r.d != d:
        raise ValueError(
            f"realization shape {(r.n, r.d)} does not match graph {(n, d)}"
        )
    cons = ag.constraints()
    m = np.zeros((len(cons), n * d))
    for row, (i, j) in enumerate(cons):
        diff = r.positions[i - 1] - r.positions[j - 1]
        m[row, (i - 1) * d : i * d] = diff
        m[row, (j - 1) * d : j * d] = -diff
    return m


def rigidity_rank_check(r: Realization, ag: AugmentedGraph) -> bool:
    """True iff the rigidity matrix has full expected rank d*n - d(d+1)/2.

    Degenerate (e.g. collocated or collinear) realizations legitimately
    return False; they are data, not construction errors.
    """
    m = rigidity_matrix(r, ag)
    if m.size == 0:
        return False
    s = np.linalg.svd(m, compute_uv=False)
    tol = max(m.shape) * (s[0] if s.size else 0.0) * RANK_RTOL
    rank = int(np.sum(s > tol))
    n, d = ag.base.n, ag.base.d
    return rank == n * d - d * (d + 1) // 2


def verify_realizable(spec: DistanceSpec, r: Realization, tol: float = 1e-9) -> bool:
    """True iff every specified distance is met by the realization within tol."""
    for (i, j), want in spec.distances.items():
        if i > r.n or j > r.n:
            raise ValueError(f"pair ({i},{j}) outside realization with n={r.n}")
        have = float(np.linalg.norm(r.positions[j - 1] - r.positions[i - 1]))
        if abs(have - want) > tol:
            return False
    return True
