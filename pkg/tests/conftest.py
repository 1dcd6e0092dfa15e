import itertools

import numpy as np
import pytest

from duplexsym.presets import five_node, six_node


@pytest.fixture(scope="session")
def preset5():
    return five_node()


@pytest.fixture(scope="session")
def preset6():
    return six_node()


def brute_force_automorphisms(adj: np.ndarray):
    """Oracle: all node permutations preserving adjacency, by full enumeration."""
    n = adj.shape[0]
    out = []
    for perm in itertools.permutations(range(n)):
        if all(adj[perm[i], perm[j]] == adj[i, j] for i in range(n) for j in range(n)):
            out.append(tuple(perm))
    return set(out)


def brute_force_orbits(perms, n):
    """Oracle: orbit closure by repeated application of all permutations."""
    orbits = []
    remaining = set(range(n))
    while remaining:
        seed = min(remaining)
        orbit = {seed}
        frontier = {seed}
        while frontier:
            nxt = {p[i] for i in frontier for p in perms} - orbit
            orbit |= nxt
            frontier = nxt
        orbits.append(tuple(sorted(i + 1 for i in orbit)))
        remaining -= {i - 1 for i in orbits[-1]}
    return tuple(sorted(orbits, key=lambda c: c[0]))


def brute_force_subgroups(elements, compose_fn, n):
    """Oracle: all subsets containing the identity and closed under composition."""
    elements = sorted(elements)
    ident = tuple(range(n))
    subs = []
    for r in range(1, len(elements) + 1):
        for combo in itertools.combinations(elements, r):
            s = set(combo)
            if ident not in s:
                continue
            if all(compose_fn(a, b) in s for a in s for b in s):
                subs.append(frozenset(s))
    return set(subs)
