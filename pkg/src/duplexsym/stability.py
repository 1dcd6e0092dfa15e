"""Linear stability of duplex patterns via transverse Lyapunov exponents.

The orthonormal basis per layer stacks normalized cluster indicators
(parallel directions, spanning the pattern manifold) with a within-cluster
orthogonal complement (transverse directions).  In these coordinates the
coupling matrices block-diagonalize, the top transverse block is autonomous
and the bottom transverse block is driven by the top one only, so exponents
are estimated per connected transverse sub-block along the quotient flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .compat import DuplexClusters, is_pattern_invariant
from .dynamics import DEFAULT_D_MATRIX, HRParams, hr_jacobian, spread_cluster_bases
from .quotient import QuotientSystem, quotient_matrices
from .symmetry import Partition, PatternState
from .topology import CouplingStrengths, DuplexTopology, laplacian

__all__ = [
    "StabilityBasis",
    "LayerBasis",
    "ClusterExponents",
    "StabilityMap",
    "NotOrbitPartitionError",
    "layer_basis",
    "stability_basis",
    "variational_rhs",
    "transverse_lyapunov",
    "stability_map",
    "duplex_clusters_for_pattern",
]

BLOCK_TOL = 1e-10
SUPPORT_TOL = 1e-12


class NotOrbitPartitionError(ValueError):
    """The basis failed to block-diagonalize the coupling matrix."""


@dataclass(frozen=True)
class LayerBasis:
    """Orthonormal basis of one layer, parallel columns first."""

    t: np.ndarray               # N x N orthogonal
    k: int                      # number of parallel columns (= clusters)
    dir_cluster: np.ndarray     # cluster index per transverse column (len N - k)
    partition: Partition

    @property
    def n_transverse(self) -> int:
        return self.t.shape[0] - self.k

    @property
    def transverse(self) -> np.ndarray:
        return self.t[:, self.k:]


@dataclass(frozen=True)
class StabilityBasis:
    top: LayerBasis
    bottom: LayerBasis


def layer_basis(partition: Partition, coupling: np.ndarray) -> LayerBasis:
    """Parallel indicator columns plus per-cluster Gram-Schmidt complement.

    Raises NotOrbitPartitionError if the parallel/transverse off-diagonal
    blocks of T^T coupling T exceed BLOCK_TOL.
    """
    n = partition.n
    k = partition.num_clusters
    t = np.zeros((n, n))
    for l, cluster in enumerate(partition.clusters):
        idx = [i - 1 for i in cluster]
        t[idx, l] = 1.0 / np.sqrt(len(cluster))

    col = k
    dir_cluster = []
    for l, cluster in enumerate(partition.clusters):
        idx = [i - 1 for i in cluster]
        for i in idx[1:]:
            v = np.zeros(n)
            v[i] = 1.0
            for j in range(col):
                v -= (t[:, j] @ v) * t[:, j]
            nrm = np.linalg.norm(v)
            if nrm < 1e-12:
                raise NotOrbitPartitionError("degenerate Gram-Schmidt step")
            t[:, col] = v / nrm
            dir_cluster.append(l)
            col += 1
    assert col == n

    gram = t.T @ t - np.eye(n)
    if np.max(np.abs(gram)) > 1e-12:
        raise NotOrbitPartitionError("basis columns are not orthonormal")
    b = t.T @ coupling @ t
    off = max(np.max(np.abs(b[:k, k:]), initial=0.0), np.max(np.abs(b[k:, :k]), initial=0.0))
    if off > BLOCK_TOL:
        raise NotOrbitPartitionError(
            f"parallel/transverse block residual {off:.2e} exceeds {BLOCK_TOL:.0e}; "
            "partition is not an orbit partition of this graph"
        )
    return LayerBasis(t=t, k=k, dir_cluster=np.array(dir_cluster, dtype=np.int64),
                      partition=partition)


def stability_basis(duplex: DuplexTopology, clusters: DuplexClusters) -> StabilityBasis:
    return StabilityBasis(
        top=layer_basis(clusters.top, duplex.top.adjacency.astype(float)),
        bottom=layer_basis(clusters.bottom, laplacian(duplex.bottom).astype(float)),
    )


def _g_matrices(basis: LayerBasis) -> list[np.ndarray]:
    """G^l = T^T diag(indicator_l) T per cluster."""
    out = []
    for cluster in basis.partition.clusters:
        f = np.zeros(basis.t.shape[0])
        f[[i - 1 for i in cluster]] = 1.0
        out.append(basis.t.T @ (f[:, None] * basis.t))
    return out


H_FIRST = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


def variational_rhs(
    basis: StabilityBasis,
    r: np.ndarray,
    s: np.ndarray,
    xi_top: np.ndarray,
    xi_bottom: np.ndarray,
    duplex: DuplexTopology,
    cs: CouplingStrengths,
    top_params: HRParams,
    bottom_params: HRParams,
    d_matrix: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Full linear flow near the pattern, in basis coordinates.

    xi_top, xi_bottom: (N, 3) perturbation components per basis column
    (parallel columns first).  Reference implementation used for tests and
    cross-checks; the compiled path evolves the transverse blocks only.
    """
    d = DEFAULT_D_MATRIX if d_matrix is None else np.asarray(d_matrix, dtype=float)
    a = duplex.top.adjacency.astype(float)
    lap = laplacian(duplex.bottom).astype(float)
    kmat = duplex.inter.matrix.astype(float)
    tt, tb = basis.top.t, basis.bottom.t
    b = tt.T @ a @ tt
    m = tb.T @ lap @ tb
    k_t = tb.T @ kmat @ tt
    k_b = tb.T @ kmat @ tb

    g_top = _g_matrices(basis.top)
    g_bot = _g_matrices(basis.bottom)

    dxi_t = np.zeros_like(xi_top)
    for l, gl in enumerate(g_top):
        jac = hr_jacobian(top_params, r[l])
        dxi_t += (gl @ xi_top) @ jac.T + cs.alpha * ((b @ gl) @ xi_top) @ H_FIRST.T
    dxi_b = np.zeros_like(xi_bottom)
    for l, gl in enumerate(g_bot):
        jac = hr_jacobian(bottom_params, s[l])
        dxi_b += (gl @ xi_bottom) @ jac.T - cs.beta * ((m @ gl) @ xi_bottom) @ H_FIRST.T
    dxi_b += cs.sigma * (k_t @ xi_top) @ d.T - cs.sigma * (k_b @ xi_bottom) @ d.T
    return dxi_t, dxi_b


@dataclass(frozen=True)
class ClusterRecord:
    layer: str
    cluster: tuple            # 1-based node indices
    lam: float                # largest exponent of the cluster's own block
    lam_effective: float      # includes upstream top blocks that force it
    component: tuple          # all clusters sharing the block (intertwined set)
    converged: bool


@dataclass(frozen=True)
class ClusterExponents:
    records: tuple
    horizon: float
    renorm_interval: float

    def lam(self, layer: str, cluster) -> float:
        key = tuple(sorted(cluster))
        for rec in self.records:
            if rec.layer == layer and rec.cluster == key:
                return rec.lam_effective
        raise KeyError((layer, key))

    @property
    def all_negative(self) -> bool:
        return all(rec.lam_effective < 0 for rec in self.records)


def _merge_records(records) -> list:
    """One record per (layer, cluster): a cluster whose directions split over
    several uncoupled blocks keeps the worst (largest) exponent."""
    merged: dict = {}
    for rec in records:
        key = (rec.layer, rec.cluster)
        prev = merged.get(key)
        if prev is None:
            merged[key] = rec
        else:
            merged[key] = ClusterRecord(
                rec.layer, rec.cluster,
                max(prev.lam, rec.lam),
                max(prev.lam_effective, rec.lam_effective),
                tuple(sorted(set(prev.component) | set(rec.component))),
                prev.converged and rec.converged,
            )
    return list(merged.values())


def _components(coupling: np.ndarray, tol: float = BLOCK_TOL) -> list[list[int]]:
    m = coupling.shape[0]
    seen = [False] * m
    comps = []
    for start in range(m):
        if seen[start]:
            continue
        stack, comp = [start], []
        seen[start] = True
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in range(m):
                if not seen[j] and (abs(coupling[i, j]) > tol or abs(coupling[j, i]) > tol):
                    seen[j] = True
                    stack.append(j)
        comps.append(sorted(comp))
    return comps


def transverse_lyapunov(
    duplex: DuplexTopology,
    clusters: DuplexClusters,
    top_params: HRParams,
    bottom_params: HRParams,
    cs: CouplingStrengths,
    horizon: float = 5000.0,
    renorm_interval: float = 1.0,
    transient: float = 1000.0,
    dt: float = 0.01,
    d_matrix: np.ndarray | None = None,
    seed: int = 7,
    quotient: QuotientSystem | None = None,
) -> ClusterExponents:
    """Largest transverse Lyapunov exponent per nontrivial cluster.

    The quotient flow and the transverse variational blocks are co-integrated
    with periodic QR renormalization; each connected transverse sub-block
    yields one set of exponents, attributed to the clusters supporting its
    directions (a multi-cluster block is an intertwined set).  For bottom
    clusters the effective exponent also takes the maximum over the top
    blocks that force them through the inter-layer coupling.
    """
    d = DEFAULT_D_MATRIX if d_matrix is None else np.asarray(d_matrix, dtype=float)
    basis = stability_basis(duplex, clusters)
    q = quotient if quotient is not None else quotient_matrices(duplex, clusters)

    kt, kb = basis.top.k, basis.bottom.k
    b_full = basis.top.t.T @ duplex.top.adjacency.astype(float) @ basis.top.t
    m_full = basis.bottom.t.T @ laplacian(duplex.bottom).astype(float) @ basis.bottom.t
    kmat = duplex.inter.matrix.astype(float)
    kt_cross = (basis.bottom.t.T @ kmat @ basis.top.t)[kb:, kt:]  # transverse rows/cols

    b_perp = b_full[kt:, kt:]
    m_perp = m_full[kb:, kb:]

    kappa = duplex.inter.kappa
    kappa_per_bottom_cluster = np.array(
        [kappa[clusters.bottom.clusters[l][0] - 1] for l in range(kb)], dtype=float
    )

    rng = np.random.default_rng(seed)
    r0 = spread_cluster_bases(kt, seed=seed)
    s0 = spread_cluster_bases(kb, seed=seed + 1)

    renorm_every = max(1, int(round(renorm_interval / dt)))
    n_steps = int(round(horizon / dt))
    n_steps -= n_steps % renorm_every
    transient_steps = int(round(transient / dt))
    total_time = n_steps * dt

    def run_block(is_top: bool, dirs: list[int]):
        if is_top:
            coupling = b_perp[np.ix_(dirs, dirs)]
            dir_cluster = basis.top.dir_cluster[dirs]
            damp = np.zeros(len(dirs))
        else:
            coupling = m_perp[np.ix_(dirs, dirs)]
            dir_cluster = basis.bottom.dir_cluster[dirs]
            damp = -cs.sigma * kappa_per_bottom_cluster[dir_cluster]
        logs = _kernels.lyap_block(
            q.a_r, q.l_s, q.k_r, q.k_s,
            top_params.as_array(), bottom_params.as_array(), d,
            cs.alpha, cs.beta, cs.sigma,
            r0, s0, is_top, np.ascontiguousarray(coupling),
            np.ascontiguousarray(dir_cluster), damp,
            dt, transient_steps, n_steps, renorm_every,
        )
        exps = logs[-1] / total_time
        lam = float(np.max(exps))
        # convergence: running max-exponent estimate over the final half
        times = renorm_every * dt * np.arange(1, logs.shape[0] + 1)
        running = np.max(logs, axis=1) / times
        half = logs.shape[0] // 2
        spread = np.max(np.abs(running[half:] - lam))
        converged = bool(spread <= 0.05 * max(abs(lam), 1e-3))
        return lam, converged, dir_cluster

    records = []
    top_block_of_dir = {}
    top_results = []
    for comp in _components(b_perp):
        lam, conv, _ = run_block(True, comp)
        comp_clusters = tuple(sorted({
            clusters.top.clusters[basis.top.dir_cluster[i]] for i in comp
        }))
        top_results.append((comp, lam, conv, comp_clusters))
        for i in comp:
            top_block_of_dir[i] = lam
        for cl in comp_clusters:
            records.append(ClusterRecord("top", cl, lam, lam, comp_clusters, conv))
    records = _merge_records(records)

    for comp in _components(m_perp):
        lam, conv, _ = run_block(False, comp)
        comp_clusters = tuple(sorted({
            clusters.bottom.clusters[basis.bottom.dir_cluster[i]] for i in comp
        }))
        upstream = [
            top_block_of_dir[j]
            for i in comp
            for j in range(kt_cross.shape[1])
            if abs(kt_cross[i, j]) > BLOCK_TOL
        ]
        lam_eff = max([lam] + upstream) if cs.sigma > 0 else lam
        for cl in comp_clusters:
            records.append(ClusterRecord("bottom", cl, lam, lam_eff, comp_clusters, conv))

    return ClusterExponents(tuple(_merge_records(records)), horizon=total_time,
                            renorm_interval=renorm_every * dt)


def duplex_clusters_for_pattern(pattern: PatternState, duplex: DuplexTopology) -> DuplexClusters:
    """Duplex clusters pairing a bottom pattern with its witness top pattern."""
    verdict = is_pattern_invariant(pattern, duplex)
    if not verdict.invariant:
        raise ValueError(f"pattern {pattern.label} is not invariant: {verdict.reason}")
    return DuplexClusters(top=verdict.witnesses[0], bottom=pattern.partition)


@dataclass(frozen=True)
class StabilityMap:
    """Per grid point and pattern: exponent records and a stability flag."""

    alpha_grid: np.ndarray
    sigma_grid: np.ndarray
    beta: float
    entries: tuple  # of dict records

    def stable(self, alpha: float, sigma: float, label: str) -> bool:
        for e in self.entries:
            if e["alpha"] == alpha and e["sigma"] == sigma and e["pattern"] == label:
                return e["stable"]
        raise KeyError((alpha, sigma, label))


def stability_map(
    duplex: DuplexTopology,
    patterns,  # list of (label, DuplexClusters)
    top_params: HRParams,
    bottom_params: HRParams,
    beta: float,
    alpha_grid,
    sigma_grid,
    horizon: float = 2000.0,
    **lyap_kwargs,
) -> StabilityMap:
    """Evaluate transverse exponents of each pattern over an (alpha, sigma) grid."""
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    sigma_grid = np.asarray(sigma_grid, dtype=float)
    if alpha_grid.size == 0 or sigma_grid.size == 0:
        raise ValueError("grids must be nonempty")
    entries = []
    for alpha in alpha_grid:
        for sigma in sigma_grid:
            cs = CouplingStrengths(alpha=float(alpha), beta=beta, sigma=float(sigma))
            for label, clusters in patterns:
                exps = transverse_lyapunov(
                    duplex, clusters, top_params, bottom_params, cs,
                    horizon=horizon, **lyap_kwargs,
                )
                nontrivial = [r for r in exps.records if len(r.cluster) > 1]
                entries.append({
                    "alpha": float(alpha),
                    "sigma": float(sigma),
                    "pattern": label,
                    "stable": all(r.lam_effective < 0 for r in nontrivial),
                    "exponents": [
                        {"layer": r.layer, "cluster": list(r.cluster),
                         "lambda": r.lam, "lambda_effective": r.lam_effective,
                         "converged": r.converged}
                        for r in nontrivial
                    ],
                })
    return StabilityMap(alpha_grid, sigma_grid, beta, tuple(entries))
