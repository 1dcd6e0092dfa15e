"""Layer graphs and the duplex coupling structure.

Node indices are 1-based in every user-facing argument and output (edge
lists, cluster sets) and 0-based internally; the conversion happens at
construction time only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TopologyError",
    "Graph",
    "InterLayerCoupling",
    "DuplexTopology",
    "CouplingStrengths",
    "build_graph",
    "laplacian",
    "build_duplex",
]


class TopologyError(ValueError):
    """Raised for malformed graphs or inconsistent duplex structure."""


@dataclass(frozen=True)
class Graph:
    """Undirected, unweighted graph given by a dense 0/1 adjacency matrix."""

    n_nodes: int
    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=np.int64)
        if a.shape != (self.n_nodes, self.n_nodes):
            raise TopologyError(f"adjacency shape {a.shape} != ({self.n_nodes}, {self.n_nodes})")
        if not np.array_equal(a, a.T):
            raise TopologyError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise TopologyError("adjacency must have a zero diagonal")
        if not np.all((a == 0) | (a == 1)):
            raise TopologyError("adjacency entries must be 0 or 1")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def edges(self) -> list[tuple[int, int]]:
        """Edge list with 1-based endpoints, i < j."""
        i, j = np.nonzero(np.triu(self.adjacency))
        return [(int(a) + 1, int(b) + 1) for a, b in zip(i, j)]


@dataclass(frozen=True)
class InterLayerCoupling:
    """Diagonal 0/1 drive pattern: kappa[i] = 1 iff bottom node i is driven."""

    kappa: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kappa, dtype=np.int64).ravel()
        if not np.all((k == 0) | (k == 1)):
            raise TopologyError("kappa entries must be 0 or 1")
        k.setflags(write=False)
        object.__setattr__(self, "kappa", k)

    @property
    def n(self) -> int:
        return self.kappa.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.kappa)

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.kappa == 1))


@dataclass(frozen=True)
class DuplexTopology:
    """Two same-size layers plus the diagonal top-to-bottom drive pattern."""

    top: Graph
    bottom: Graph
    inter: InterLayerCoupling

    def __post_init__(self):
        if not (self.top.n_nodes == self.bottom.n_nodes == self.inter.n):
            raise TopologyError(
                f"layer sizes differ: top={self.top.n_nodes}, "
                f"bottom={self.bottom.n_nodes}, kappa={self.inter.n}"
            )

    @property
    def n_nodes(self) -> int:
        return self.top.n_nodes


@dataclass(frozen=True)
class CouplingStrengths:
    """Intra-layer strengths (alpha: top, beta: bottom) and inter-layer sigma."""

    alpha: float
    beta: float
    sigma: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "sigma"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise TopologyError(f"{name} must be finite and >= 0, got {v}")


def build_graph(n_nodes: int, edges) -> Graph:
    """Build a Graph from 1-based undirected edge pairs.

    Rejects out-of-range endpoints, self-loops and duplicate edges.
    """
    if n_nodes < 1:
        raise TopologyError("n_nodes must be positive")
    a = np.zeros((n_nodes, n_nodes), dtype=np.int64)
    for i, j in edges:
        if not (1 <= i <= n_nodes and 1 <= j <= n_nodes):
            raise TopologyError(f"edge ({i}, {j}) out of range 1..{n_nodes}")
        if i == j:
            raise TopologyError(f"self-loop at node {i}")
        if a[i - 1, j - 1]:
            raise TopologyError(f"duplicate edge ({i}, {j})")
        a[i - 1, j - 1] = a[j - 1, i - 1] = 1
    return Graph(n_nodes, a)


def laplacian(g: Graph) -> np.ndarray:
    """Graph Laplacian L = diag(degrees) - A, integer-valued."""
    return np.diag(g.degrees) - g.adjacency


def build_duplex(top: Graph, bottom: Graph, kappa) -> DuplexTopology:
    """Assemble and validate a duplex from two layers and a drive vector."""
    return DuplexTopology(top, bottom, InterLayerCoupling(np.asarray(kappa)))
