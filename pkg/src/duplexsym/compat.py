"""Symmetry compatibility between the layers of a duplex.

The drive pattern K constrains which bottom-layer symmetries survive: a
bottom permutation P_B is admissible only if some top permutation P_T
satisfies P_B K = K P_T.  This module computes the compatible subgroups,
their product-matrix equivalence classes, the induced duplex clusters, the
all-or-nothing drive dichotomy per bottom cluster, and the resulting
invariance verdict per bottom pattern.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import DuplexTopology, InterLayerCoupling
from .symmetry import (
    PermGroup,
    Partition,
    PatternState,
    Permutation,
    automorphisms,
    group_from_elements,
    identity_perm,
    orbit_partition,
    subgroups,
)

__all__ = [
    "CompatiblePair",
    "CompatibilityClasses",
    "DuplexClusters",
    "MixedClusterError",
    "conjugacy_holds",
    "compatibility_classes",
    "duplex_orbit_partition",
    "all_or_nothing",
    "is_pattern_invariant",
    "complete_sync_excluded",
]


class MixedClusterError(ValueError):
    """A candidate bottom cluster mixes driven and undriven nodes."""

    def __init__(self, cluster, kappa):
        self.cluster = tuple(cluster)
        self.driven = tuple(i for i in cluster if kappa[i - 1] == 1)
        self.undriven = tuple(i for i in cluster if kappa[i - 1] == 0)
        super().__init__(
            f"cluster {self.cluster} mixes driven nodes {self.driven} "
            f"with undriven nodes {self.undriven}"
        )


@dataclass(frozen=True)
class CompatiblePair:
    p_top: Permutation
    p_bottom: Permutation


@dataclass(frozen=True)
class CompatibilityClasses:
    """Compatible subgroups and their paired product-matrix classes.

    ``classes[i]`` is a pair (top-class, bottom-class): every top element of
    class i shares one matrix K P_T, every bottom element shares P_B K, and
    the two products coincide, so any cross pairing satisfies the conjugacy
    relation.
    """

    h_top: PermGroup
    h_bottom: PermGroup
    classes: tuple  # tuple of (frozenset[Permutation], frozenset[Permutation])


@dataclass(frozen=True)
class DuplexClusters:
    top: Partition
    bottom: Partition

    def __post_init__(self):
        if self.top.num_clusters > self.bottom.num_clusters:
            raise ValueError("duplex clusters must satisfy k_T <= k_B")
        if self.top.n != self.bottom.n:
            raise ValueError("layer sizes differ")


def conjugacy_holds(p_bottom: Permutation, p_top: Permutation, kappa: InterLayerCoupling) -> bool:
    """True iff P_B K == K P_T entrywise for K = diag(kappa).

    Equivalent index form: for every node j, kappa[p_B(j)] == kappa[j] on the
    support of P_B's action, and P_T agrees with P_B on driven nodes while
    mapping undriven nodes to undriven nodes.
    """
    k = kappa.kappa
    for j in range(len(p_bottom)):
        # column j of P_B K is kappa_j at row p_B(j); of K P_T is kappa_{p_T(j)} at row p_T(j)
        if k[j] == 1:
            if k[p_top[j]] != 1 or p_top[j] != p_bottom[j]:
                return False
        else:
            if k[p_top[j]] != 0:
                return False
    return True


def _right_product_key(p_top: Permutation, k: np.ndarray):
    """Hashable key identifying the matrix K P_T."""
    # K P_T has entry kappa_{p(j)} at (p(j), j): keep only nonzero columns.
    return tuple((p_top[j], j) for j in range(len(p_top)) if k[p_top[j]] == 1)


def _left_product_key(p_bottom: Permutation, k: np.ndarray):
    """Hashable key identifying the matrix P_B K."""
    return tuple((p_bottom[j], j) for j in range(len(p_bottom)) if k[j] == 1)


def compatibility_classes(
    g_top: PermGroup, g_bottom: PermGroup, kappa: InterLayerCoupling
) -> CompatibilityClasses:
    """Compatible subgroups H_T, H_B and their paired product classes."""
    k = kappa.kappa
    n = g_top.n

    bottom_by_product: dict = {}
    for pb in g_bottom.elements:
        bottom_by_product.setdefault(_left_product_key(pb, k), set()).add(pb)

    top_by_product: dict = {}
    h_top_elements = set()
    h_bottom_elements = set()
    pairs = []
    for pt in g_top.elements:
        key = _right_product_key(pt, k)
        if key in bottom_by_product:
            top_by_product.setdefault(key, set()).add(pt)
            h_top_elements.add(pt)

    classes = []
    for key, tops in sorted(top_by_product.items()):
        bottoms = bottom_by_product[key]
        h_bottom_elements.update(bottoms)
        classes.append((frozenset(tops), frozenset(bottoms)))

    h_top = group_from_elements(n, h_top_elements)
    h_bottom = group_from_elements(n, h_bottom_elements)
    if not (h_top.is_group() and h_bottom.is_group()):
        raise AssertionError("compatible sets failed the subgroup check")

    # consistency: every paired (P_T, P_B) must satisfy the conjugacy relation
    for tops, bottoms in classes:
        for pt in tops:
            for pb in bottoms:
                if not conjugacy_holds(pb, pt, kappa):
                    raise AssertionError("paired classes violate the conjugacy relation")
    return CompatibilityClasses(h_top, h_bottom, tuple(classes))


def duplex_orbit_partition(classes: CompatibilityClasses) -> DuplexClusters:
    """Orbit partitions of the paired symmetry group, acting per layer.

    The block group acts diagonally: top indices are moved only by the top
    components, bottom indices only by the bottom components, so the layer
    partitions are the orbit partitions of H_T and H_B.
    """
    return DuplexClusters(
        top=orbit_partition(classes.h_top),
        bottom=orbit_partition(classes.h_bottom),
    )


def all_or_nothing(cluster, kappa: InterLayerCoupling) -> str:
    """Classify a bottom cluster as 'undriven' or 'driven' (one-to-one).

    Raises MixedClusterError when kappa is not constant on the cluster,
    which is exactly the structural test a non-invariant pattern fails.
    """
    cluster = tuple(cluster)
    if not cluster:
        raise ValueError("cluster must be nonempty")
    vals = {int(kappa.kappa[i - 1]) for i in cluster}
    if vals == {0}:
        return "undriven"
    if vals == {1}:
        return "driven"
    raise MixedClusterError(cluster, kappa.kappa)


@dataclass(frozen=True)
class InvarianceVerdict:
    invariant: bool
    pattern: PatternState
    witnesses: tuple = ()  # top Partitions realizing the compatibility
    reason: str = ""


def _realizing_subgroups(pattern: Partition, g_bottom: PermGroup):
    for h in subgroups(g_bottom):
        if orbit_partition(h) == pattern:
            yield h


def _compatible_tops(pb: Permutation, g_top: PermGroup, kappa: InterLayerCoupling):
    return [pt for pt in g_top.elements if conjugacy_holds(pb, pt, kappa)]


def is_pattern_invariant(pattern: PatternState, duplex: DuplexTopology) -> InvarianceVerdict:
    """Decide whether a bottom pattern stays flow-invariant under the duplex.

    A pattern is invariant iff some automorphism subgroup of the bottom
    layer realizing it is fully compatible: every element admits a top
    automorphism satisfying the conjugacy relation.  On failure the reason
    cites either a driven/undriven mixed cluster (the all-or-nothing
    dichotomy) or the absence of a compatible top permutation.
    """
    part = pattern.partition
    kappa = duplex.inter

    for cluster in part.clusters:
        try:
            all_or_nothing(cluster, kappa)
        except MixedClusterError as err:
            return InvarianceVerdict(
                False, pattern, reason=f"all-or-nothing violation: {err}"
            )

    g_bottom = automorphisms(duplex.bottom)
    g_top = automorphisms(duplex.top)

    realized = False
    witnesses = []
    from .symmetry import generated_group

    for h in _realizing_subgroups(part, g_bottom):
        realized = True
        tops_per_element = []
        ok = True
        for pb in sorted(h.elements):
            tops = _compatible_tops(pb, g_top, kappa)
            if not tops:
                ok = False
                break
            tops_per_element.extend(tops)
        if ok:
            witness_group = generated_group(duplex.n_nodes, tops_per_element)
            witnesses.append(orbit_partition(witness_group))
    if not realized:
        raise ValueError(
            f"pattern {pattern.label} is not the orbit partition of any bottom subgroup"
        )
    if witnesses:
        uniq = []
        for w in witnesses:
            if w not in uniq:
                uniq.append(w)
        return InvarianceVerdict(True, pattern, witnesses=tuple(uniq))
    return InvarianceVerdict(
        False,
        pattern,
        reason="no compatible top permutation for some realizing bottom symmetry",
    )


def complete_sync_excluded(duplex: DuplexTopology) -> bool:
    """True unless K is the identity and the top layer can fully synchronize.

    The bottom complete-sync state survives the drive only if every bottom
    node is driven (K = I) and the top layer's complete-sync pattern is
    itself symmetry-induced (its automorphism group is transitive).
    """
    if not duplex.inter.is_identity:
        return True
    top_orbits = orbit_partition(automorphisms(duplex.top))
    top_complete_sync_invariant = top_orbits.num_clusters == 1
    return not top_complete_sync_invariant
