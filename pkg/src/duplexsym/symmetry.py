"""Graph automorphism groups, subgroups, orbit partitions and pattern states.

Permutations are stored as tuples of 0-based images: ``p[i]`` is the node
that ``i`` is mapped to.  Groups are explicit element sets; everything here
targets the small networks (N <= 16) this package is built for.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations as all_permutations

import numpy as np

from .topology import Graph

__all__ = [
    "Permutation",
    "SymmetryError",
    "PermGroup",
    "group_from_elements",
    "generated_group",
    "pattern_sort_key",
    "Partition",
    "PatternState",
    "identity_perm",
    "compose",
    "invert",
    "perm_matrix",
    "automorphisms",
    "subgroups",
    "orbit_partition",
    "enumerate_patterns",
]

Permutation = tuple  # tuple[int, ...], a bijection on range(n)

AUTOMORPHISM_NODE_CAP = 16
SUBGROUP_ORDER_CAP = 10_000


class SymmetryError(ValueError):
    pass


def identity_perm(n: int) -> Permutation:
    return tuple(range(n))


def compose(p: Permutation, q: Permutation) -> Permutation:
    """(p o q)[i] = p[q[i]] (apply q first)."""
    return tuple(p[qi] for qi in q)


def invert(p: Permutation) -> Permutation:
    inv = [0] * len(p)
    for i, pi in enumerate(p):
        inv[pi] = i
    return tuple(inv)


def perm_matrix(p: Permutation) -> np.ndarray:
    """Matrix P with P[p[i], i] = 1, so that (P v)[p[i]] = v[i]."""
    n = len(p)
    m = np.zeros((n, n), dtype=np.int64)
    for i, pi in enumerate(p):
        m[pi, i] = 1
    return m


@dataclass(frozen=True)
class PermGroup:
    """A finite permutation group on {0, ..., n-1}, stored element-wise."""

    n: int
    elements: frozenset

    def __post_init__(self):
        if identity_perm(self.n) not in self.elements:
            raise SymmetryError("group must contain the identity")

    def __len__(self):
        return len(self.elements)

    def __contains__(self, p):
        return p in self.elements

    def __iter__(self):
        return iter(sorted(self.elements))

    def is_group(self) -> bool:
        """Explicit closure and inverse check (pairwise composition table)."""
        els = self.elements
        return all(invert(p) in els for p in els) and all(
            compose(p, q) in els for p in els for q in els
        )

    def issubset(self, other: "PermGroup") -> bool:
        return self.elements <= other.elements


def group_from_elements(n: int, elements) -> PermGroup:
    return PermGroup(n, frozenset(elements))


def generated_group(n: int, generators, order_cap: int = SUBGROUP_ORDER_CAP) -> PermGroup:
    """Close a generator set under composition (and hence inverses)."""
    els = {identity_perm(n)}
    frontier = [tuple(g) for g in generators]
    els.update(frontier)
    while frontier:
        new = []
        for g in frontier:
            for h in list(els):
                for prod in (compose(g, h), compose(h, g)):
                    if prod not in els:
                        els.add(prod)
                        new.append(prod)
            if len(els) > order_cap:
                raise SymmetryError(f"group order exceeds cap {order_cap}")
        frontier = new
    return PermGroup(n, frozenset(els))


@dataclass(frozen=True)
class Partition:
    """Disjoint cover of {1, ..., N} in canonical order.

    Clusters are stored as tuples of 1-based, ascending node indices and the
    cluster list is sorted by each cluster's minimum element.
    """

    n: int
    clusters: tuple

    def __post_init__(self):
        seen = set()
        for c in self.clusters:
            if len(c) == 0:
                raise SymmetryError("empty cluster")
            if list(c) != sorted(c):
                raise SymmetryError("cluster elements must be ascending")
            seen.update(c)
        if seen != set(range(1, self.n + 1)):
            raise SymmetryError(f"clusters must cover 1..{self.n} exactly once")
        if sum(len(c) for c in self.clusters) != self.n:
            raise SymmetryError("clusters overlap")
        if list(self.clusters) != sorted(self.clusters, key=lambda c: c[0]):
            raise SymmetryError("clusters must be sorted by minimum element")

    @classmethod
    def from_sets(cls, n: int, clusters) -> "Partition":
        canon = tuple(sorted((tuple(sorted(c)) for c in clusters), key=lambda c: c[0]))
        return cls(n, canon)

    @property
    def num_clusters(self) -> int:
        return len(self.clusters)

    @property
    def nontrivial_clusters(self) -> tuple:
        return tuple(c for c in self.clusters if len(c) > 1)

    def cluster_of(self) -> np.ndarray:
        """0-based cluster index per 0-based node."""
        out = np.empty(self.n, dtype=np.int64)
        for l, c in enumerate(self.clusters):
            for i in c:
                out[i - 1] = l
        return out

    def color_word(self) -> tuple:
        """Cluster label per node, clusters numbered by first appearance."""
        return tuple(int(v) for v in self.cluster_of())

    def refines(self, other: "Partition") -> bool:
        """True if every cluster of self lies inside a cluster of other."""
        block = {}
        for l, c in enumerate(other.clusters):
            for i in c:
                block[i] = l
        return all(len({block[i] for i in c}) == 1 for c in self.clusters)

    def is_singletons(self) -> bool:
        return self.num_clusters == self.n


@dataclass(frozen=True)
class PatternState:
    """A labeled synchrony pattern of one layer."""

    partition: Partition
    label: str
    layer: str  # "top" | "bottom"

    def __post_init__(self):
        if self.layer not in ("top", "bottom"):
            raise SymmetryError(f"layer must be 'top' or 'bottom', got {self.layer!r}")


def _commutes_with_adjacency(p: Permutation, a: np.ndarray) -> bool:
    n = len(p)
    return all(a[p[i], p[j]] == a[i, j] for i in range(n) for j in range(n))


def automorphisms(g: Graph, node_cap: int = AUTOMORPHISM_NODE_CAP) -> PermGroup:
    """All node permutations preserving adjacency.

    Depth-first search over candidate images with degree and partial
    neighborhood pruning; for N <= 8 brute force over N! is used instead.
    Every returned element is re-verified by a full commutation check.
    """
    n = g.n_nodes
    if n > node_cap:
        raise SymmetryError(f"N={n} exceeds automorphism cap {node_cap}")
    a = g.adjacency
    found = []

    if n <= 8:
        for p in all_permutations(range(n)):
            if _commutes_with_adjacency(p, a):
                found.append(p)
    else:
        deg = g.degrees

        def extend(image: list, used: set):
            i = len(image)
            if i == n:
                found.append(tuple(image))
                return
            for cand in range(n):
                if cand in used or deg[cand] != deg[i]:
                    continue
                if any(a[cand, image[j]] != a[i, j] for j in range(i)):
                    continue
                image.append(cand)
                used.add(cand)
                extend(image, used)
                image.pop()
                used.remove(cand)

        extend([], set())

    assert all(_commutes_with_adjacency(p, a) for p in found)
    return PermGroup(n, frozenset(found))


def subgroups(group: PermGroup, order_cap: int = SUBGROUP_ORDER_CAP) -> list[PermGroup]:
    """All distinct subgroups, from the trivial group up to the full group.

    Cyclic subgroups are generated first and then closed under pairwise
    joins until a fixpoint; complete for the tiny groups in scope.
    """
    if len(group) > order_cap:
        raise SymmetryError(f"group order {len(group)} exceeds cap {order_cap}")
    n = group.n
    ident = identity_perm(n)

    cyclic = set()
    for g in group.elements:
        els = {ident}
        h = g
        while h != ident:
            els.add(h)
            h = compose(h, g)
        cyclic.add(frozenset(els))

    known = set(cyclic)
    frontier = set(cyclic)
    while frontier:
        new = set()
        for h1 in frontier:
            for h2 in known:
                if h1 <= h2 or h2 <= h1:
                    continue
                joined = generated_group(n, h1 | h2, order_cap=order_cap).elements
                if joined not in known and joined not in new:
                    new.add(joined)
        known |= new
        frontier = new
    known.add(frozenset({ident}))
    known.add(group.elements)
    return sorted((PermGroup(n, els) for els in known), key=lambda h: (len(h), sorted(h.elements)))


def orbit_partition(group: PermGroup) -> Partition:
    """Nodes i, j share a cluster iff some group element maps i to j."""
    n = group.n
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for p in group.elements:
        for i, pi in enumerate(p):
            ri, rj = find(i), find(pi)
            if ri != rj:
                parent[rj] = ri

    orbits = {}
    for i in range(n):
        orbits.setdefault(find(i), []).append(i + 1)
    return Partition.from_sets(n, orbits.values())


def pattern_sort_key(p: Partition):
    """Finest patterns first, then by per-node coloring word."""
    return (-p.num_clusters, p.color_word())


def enumerate_patterns(g: Graph, layer: str = "bottom") -> list[PatternState]:
    """Distinct orbit partitions over all automorphism subgroups, labeled.

    The all-singleton partition (trivial subgroup) is always present and
    receives the label P0; the remaining patterns are numbered P1, P2, ...
    in the order of `pattern_sort_key`.
    """
    group = automorphisms(g)
    parts = {orbit_partition(h) for h in subgroups(group)}
    parts.add(Partition.from_sets(g.n_nodes, [[i] for i in range(1, g.n_nodes + 1)]))
    ordered = sorted(parts, key=pattern_sort_key)
    suffix = "T" if layer == "top" else "B"
    return [PatternState(p, f"P{i}_{suffix}", layer) for i, p in enumerate(ordered)]
