"""Network topologies, graph shift operators and combination-weight rules.

Combination matrices follow the column convention: ``C[j, k]`` is the weight
node ``k`` gives to the estimate received from node ``j``, so every column of a
valid matrix sums to one over the neighborhood of its node.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components

__all__ = [
    "NetworkTopology",
    "ShiftOperator",
    "AcwState",
    "WeightReport",
    "build_random_geometric_network",
    "normalized_adjacency_shift",
    "uniform_weights",
    "metropolis_weights",
    "acw_update",
    "validate_weights",
]


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkTopology:
    """Undirected connected graph with self-inclusive neighborhoods.

    Parameters
    ----------
    V : int
        Number of nodes, labelled ``0 .. V-1``.
    edges : tuple of (int, int)
        Undirected edges with ``i < j``, no self-loops, sorted.
    """

    V: int
    edges: tuple[tuple[int, int], ...]
    adjacency: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.V < 1:
            raise TopologyError(f"V must be positive, got {self.V}")
        canon = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise TopologyError(f"self-loop at node {i}")
            if not (0 <= i < self.V and 0 <= j < self.V):
                raise TopologyError(f"edge ({i}, {j}) outside 0..{self.V - 1}")
            canon.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", tuple(sorted(canon)))
        adj = np.zeros((self.V, self.V), dtype=bool)
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = True
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        if self.V > 1:
            n_comp, _ = connected_components(adj, directed=False)
            if n_comp != 1:
                raise TopologyError(f"graph is not connected ({n_comp} components)")

    @property
    def mask(self) -> np.ndarray:
        """Boolean ``V x V`` neighborhood mask, diagonal included."""
        return self.adjacency | np.eye(self.V, dtype=bool)

    @property
    def neighbors(self) -> list[list[int]]:
        m = self.mask
        return [list(np.flatnonzero(m[:, k])) for k in range(self.V)]

    @property
    def sizes(self) -> np.ndarray:
        """``|N_k|`` for every node (self included)."""
        return self.mask.sum(axis=0)

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=0)

    def to_dict(self) -> dict:
        return {"V": self.V, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, doc: dict) -> "NetworkTopology":
        return cls(int(doc["V"]), tuple(tuple(e) for e in doc["edges"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "NetworkTopology":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class ShiftOperator:
    A: np.ndarray
    scale: float  # |lambda_max| of the raw adjacency


@dataclass
class AcwState:
    """Mutable state of the adaptive combination weights rule.

    Arrays may carry leading batch dimensions (one slice per realization).
    ``sigma_hat_sq[..., j, k]`` tracks the deviation of neighbor ``j`` as seen
    from node ``k``; ``psi_bar[..., k, :]`` is the last local estimate produced
    while node ``k`` was sampled.
    """

    mask: np.ndarray
    nu: np.ndarray
    delta_c: float
    sigma_hat_sq: np.ndarray
    psi_bar: np.ndarray

    @classmethod
    def create(cls, topology: NetworkTopology, M: int, nu=0.2, delta_c=1e-5, batch=()):
        V = topology.V
        nu = np.broadcast_to(np.asarray(nu, dtype=float), (V,)).copy()
        if np.any(nu <= 0):
            raise ValueError("ACW forgetting factors must be positive")
        if delta_c <= 0:
            raise ValueError("delta_c must be positive")
        return cls(
            mask=topology.mask,
            nu=nu,
            delta_c=float(delta_c),
            sigma_hat_sq=np.zeros(tuple(batch) + (V, V)),
            psi_bar=np.zeros(tuple(batch) + (V, M)),
        )


@dataclass
class WeightReport:
    ok: bool
    reason: str | None = None
    index: tuple | None = None

    def __bool__(self):
        return self.ok


def build_random_geometric_network(V: int, target_mean_degree: float, seed: int,
                                   max_attempts: int = 1000) -> NetworkTopology:
    """Seeded connected random geometric graph on the unit square.

    Node positions are drawn uniformly and the connection radius is the
    smallest one giving ``round(V * target / 2)`` edges; it is then grown until
    the graph is connected. Positions are redrawn (same seed stream) when
    connecting the graph pushes the mean degree more than one above target.
    """
    if V < 2:
        raise TopologyError(f"need at least 2 nodes, got {V}")
    if not 1 <= target_mean_degree <= V - 1:
        raise TopologyError(f"target mean degree must lie in [1, {V - 1}]")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(V, k=1)
    n_target = int(round(V * target_mean_degree / 2))
    for _ in range(max_attempts):
        pos = rng.uniform(size=(V, 2))
        dist = np.linalg.norm(pos[iu] - pos[ju], axis=1)
        order = np.argsort(dist, kind="stable")
        adj = np.zeros((V, V), dtype=bool)
        n_edges = 0
        for idx in order:
            adj[iu[idx], ju[idx]] = adj[ju[idx], iu[idx]] = True
            n_edges += 1
            if n_edges >= n_target and connected_components(adj, directed=False)[0] == 1:
                break
        if abs(2 * n_edges / V - target_mean_degree) <= 1:
            edges = tuple(zip(*np.nonzero(np.triu(adj))))
            return NetworkTopology(V, tuple((int(i), int(j)) for i, j in edges))
    raise TopologyError("could not reach the target degree with a connected graph")


def normalized_adjacency_shift(topology: NetworkTopology) -> ShiftOperator:
    """Unweighted adjacency divided by its largest-magnitude eigenvalue."""
    adj = topology.adjacency.astype(float)
    lam = np.max(np.abs(np.linalg.eigvalsh(adj)))
    if lam == 0:
        raise TopologyError("edgeless graph has no normalizable shift operator")
    return ShiftOperator(A=adj / lam, scale=float(lam))


def uniform_weights(topology: NetworkTopology) -> np.ndarray:
    m = topology.mask.astype(float)
    return m / m.sum(axis=0, keepdims=True)


def metropolis_weights(topology: NetworkTopology) -> np.ndarray:
    sizes = topology.sizes.astype(float)
    C = np.where(topology.adjacency, 1.0 / np.maximum.outer(sizes, sizes), 0.0)
    C[np.diag_indices(topology.V)] = 1.0 - C.sum(axis=0)
    return C


def acw_update(state: AcwState, psi: np.ndarray, w: np.ndarray, sbar: np.ndarray) -> np.ndarray:
    """Advance the ACW recursion and return the new combination matrix.

    ``psi`` holds the fresh local estimates psi_j(n+1), ``w`` the combined
    estimates w_k(n) and ``sbar`` the sampling bits of iteration n. The
    diagonal uses the censoring-aware surrogate psi_bar_k, which only follows
    psi_k while node k is sampled.
    """
    sb = np.asarray(sbar, dtype=bool)[..., None]
    state.psi_bar = np.where(sb, psi, state.psi_bar)

    # ||psi_j - w_k||^2 off the diagonal by expansion, exact on the diagonal
    psi_sq = np.einsum("...jm,...jm->...j", psi, psi)
    w_sq = np.einsum("...km,...km->...k", w, w)
    cross = psi @ np.swapaxes(w, -1, -2)
    dist = np.maximum(psi_sq[..., :, None] + w_sq[..., None, :] - 2.0 * cross, 0.0)
    diff = state.psi_bar - w
    V = dist.shape[-1]
    dist[..., np.arange(V), np.arange(V)] = np.einsum("...km,...km->...k", diff, diff)

    nu = state.nu  # indexed by the receiving node k (last axis)
    state.sigma_hat_sq = (1.0 - nu) * state.sigma_hat_sq + nu * dist
    inv = np.where(state.mask, 1.0 / (state.delta_c + state.sigma_hat_sq), 0.0)
    return inv / inv.sum(axis=-2, keepdims=True)


def validate_weights(C: np.ndarray, topology: NetworkTopology, tol: float = 1e-12) -> WeightReport:
    """Check nonnegativity, column stochasticity and neighborhood support.

    ``C`` may carry leading batch dimensions; the first violation found is
    reported with its full index.
    """
    C = np.asarray(C)
    if C.shape[-2:] != (topology.V, topology.V):
        raise ValueError(f"weight matrix shape {C.shape} does not match V={topology.V}")
    neg = np.argwhere(C < 0)
    if len(neg):
        return WeightReport(False, "negative weight", tuple(int(i) for i in neg[0]))
    outside = np.argwhere((C != 0) & ~topology.mask)
    if len(outside):
        return WeightReport(False, "weight outside neighborhood", tuple(int(i) for i in outside[0]))
    bad = np.argwhere(np.abs(C.sum(axis=-2) - 1.0) > tol)
    if len(bad):
        return WeightReport(False, "column does not sum to one", tuple(int(i) for i in bad[0]))
    return WeightReport(True)
