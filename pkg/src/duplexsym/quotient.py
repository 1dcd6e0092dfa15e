"""Characteristic matrices, cluster projectors and the reduced dynamics.

For an invariant duplex pattern the full system restricted to the pattern
manifold closes on one representative state per cluster; the reduced
coupling matrices are the pseudoinverse-compressed versions of A, L and K.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compat import DuplexClusters
from .symmetry import Partition
from .topology import CouplingStrengths, DuplexTopology, laplacian

__all__ = [
    "CharacteristicMatrix",
    "Projector",
    "QuotientSystem",
    "NotEquitableError",
    "characteristic_matrix",
    "projector",
    "quotient_matrices",
    "quotient_rhs",
]

RELATION_TOL = 1e-10


class NotEquitableError(ValueError):
    """A defining relation failed: the partition is not a quotient of the graph."""


@dataclass(frozen=True)
class CharacteristicMatrix:
    """N x k cluster membership indicator matrix (one 1 per row)."""

    e: np.ndarray
    partition: Partition

    def __post_init__(self):
        e = np.asarray(self.e, dtype=np.int64)
        if np.any(e.sum(axis=1) != 1):
            raise ValueError("every row must contain exactly one 1")
        gram = e.T @ e
        if np.any(gram - np.diag(np.diag(gram))):
            raise ValueError("E^T E must be diagonal")
        e.setflags(write=False)
        object.__setattr__(self, "e", e)

    @property
    def cluster_sizes(self) -> np.ndarray:
        return self.e.sum(axis=0)

    @property
    def pinv(self) -> np.ndarray:
        """(E^T E)^{-1} E^T, exact since E^T E is diagonal with integer entries."""
        return self.e.T / self.cluster_sizes[:, None]


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector onto the cluster indicator subspace."""

    pi: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pi, dtype=float)
        if np.max(np.abs(p - p.T)) > 1e-12:
            raise ValueError("projector must be symmetric")
        if np.max(np.abs(p @ p - p)) > 1e-12:
            raise ValueError("projector must be idempotent")
        ones = np.ones(p.shape[0])
        if np.max(np.abs(p @ ones - ones)) > 1e-12:
            raise ValueError("projector must fix the all-ones vector")
        p.setflags(write=False)
        object.__setattr__(self, "pi", p)


@dataclass(frozen=True)
class QuotientSystem:
    """Reduced coupling matrices of an invariant duplex pattern."""

    a_r: np.ndarray  # k_T x k_T
    l_s: np.ndarray  # k_B x k_B
    k_r: np.ndarray  # k_B x k_T
    k_s: np.ndarray  # k_B x k_B, diagonal
    clusters: DuplexClusters

    @property
    def k_top(self) -> int:
        return self.a_r.shape[0]

    @property
    def k_bottom(self) -> int:
        return self.l_s.shape[0]


def characteristic_matrix(p: Partition) -> CharacteristicMatrix:
    """Indicator matrix whose column l marks the nodes of cluster l."""
    e = np.zeros((p.n, p.num_clusters), dtype=np.int64)
    for l, cluster in enumerate(p.clusters):
        for i in cluster:
            e[i - 1, l] = 1
    return CharacteristicMatrix(e, p)


def projector(e: CharacteristicMatrix) -> Projector:
    """Pi = E (E^T E)^{-1} E^T; block-constant 1/|cluster| within clusters."""
    return Projector(e.e @ e.pinv)


def quotient_matrices(duplex: DuplexTopology, clusters: DuplexClusters) -> QuotientSystem:
    """Compress A, L, K through the characteristic matrices of the pattern.

    Raises NotEquitableError if a defining relation (e.g. A E_T = E_T A_r)
    has residual above RELATION_TOL, which means the supplied partition was
    not actually invariant.
    """
    e_t = characteristic_matrix(clusters.top)
    e_b = characteristic_matrix(clusters.bottom)
    a = duplex.top.adjacency.astype(float)
    lap = laplacian(duplex.bottom).astype(float)
    k = duplex.inter.matrix.astype(float)

    a_r = e_t.pinv @ a @ e_t.e
    l_s = e_b.pinv @ lap @ e_b.e
    k_r = e_b.pinv @ k @ e_t.e
    k_s = e_b.pinv @ k @ e_b.e

    residuals = {
        "A E_T = E_T A_r": np.max(np.abs(a @ e_t.e - e_t.e @ a_r)),
        "L E_B = E_B L_s": np.max(np.abs(lap @ e_b.e - e_b.e @ l_s)),
        "K E_T = E_B K_r": np.max(np.abs(k @ e_t.e - e_b.e @ k_r)),
        "K E_B = E_B K_s": np.max(np.abs(k @ e_b.e - e_b.e @ k_s)),
    }
    bad = {name: r for name, r in residuals.items() if r > RELATION_TOL}
    if bad:
        raise NotEquitableError(f"defining relations failed: {bad}")
    return QuotientSystem(a_r=a_r, l_s=l_s, k_r=k_r, k_s=k_s, clusters=clusters)


def quotient_rhs(
    q: QuotientSystem,
    r: np.ndarray,
    s: np.ndarray,
    top_field,
    bottom_field,
    intra_fn,
    d_matrix: np.ndarray,
    cs: CouplingStrengths,
    sigma: float | None = None,
):
    """Time derivative of the reduced cluster states.

    r: (k_T, n) top cluster states; s: (k_B, n) bottom cluster states.
    top_field/bottom_field map an (m, n) state block to its isolated
    derivatives; intra_fn is the shared intra-layer coupling output.
    """
    if r.shape[0] != q.k_top or s.shape[0] != q.k_bottom:
        raise ValueError(
            f"expected r with {q.k_top} rows and s with {q.k_bottom} rows, "
            f"got {r.shape} and {s.shape}"
        )
    sig = cs.sigma if sigma is None else sigma
    dr = top_field(r) + cs.alpha * (q.a_r @ intra_fn(r))
    ds = (
        bottom_field(s)
        - cs.beta * (q.l_s @ intra_fn(s))
        + sig * (q.k_r @ (r @ d_matrix.T))
        - sig * (q.k_s @ (s @ d_matrix.T))
    )
    return dr, ds
