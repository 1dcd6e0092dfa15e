"""Named duplex presets used by the shipped experiments.

The five-node preset: the bottom layer is a triangle 1-2-3 with pendants 4
and 5 on node 1, whose automorphism subgroups yield exactly the catalogue
{P0 singletons, P1 (a,b,b,c,d), P2 (a,b,c,d,d), P3 (a,b,b,c,c)}; the top
layer is the star 1-2, 1-3 plus the detached pair 4-5, and the drive
targets nodes 2-5, which keeps P1-P3 invariant while excluding complete
synchronization (the drive is not constant on the full node set).  The two
top motifs synchronize at different intra-layer strengths (the pair around
alpha ~ 0.45, the star leaves around alpha ~ 1.1), so alpha selects which
bottom clusters the drive holds together and which it tears apart:
alpha=0.2 leaves both top motifs incoherent (bottom goes incoherent),
alpha=0.6 synchronizes only the pair (bottom switches to P2), alpha=1.4
synchronizes both (bottom reaches P3, or P1 when sigma is small enough
that the pair 4-5 in the bottom stays transversally unstable).

The six-node preset realizes the duplex clusters top {1,2,3}, {4,5}, {6}
and bottom {1}, {2,3}, {4,5}, {6}: the top layer is a triangle on {1,2,3}
plus the edge 4-5, the bottom layer a path-star with 2,3 hanging off 1 and
4,5 hanging off 6, and the drive targets nodes 4 and 5 only.

Both presets are verified structurally at import of the test suite, not
trusted: the symmetry and compatibility modules recompute every claim.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .compat import DuplexClusters
from .dynamics import HRParams, SigmaSchedule
from .symmetry import PatternState, Partition, enumerate_patterns
from .topology import CouplingStrengths, DuplexTopology, build_duplex, build_graph

__all__ = ["Preset", "five_node", "six_node", "PRESETS", "get_preset"]


@dataclass(frozen=True)
class Preset:
    name: str
    duplex: DuplexTopology
    top_params: HRParams
    bottom_params: HRParams
    coupling: CouplingStrengths
    schedule: SigmaSchedule
    dt: float = 0.01
    transient: float = 1000.0
    t_end: float = 3000.0
    stride: int = 10
    epsilon: float = 1e-3
    threshold: float = 1e-3
    # alpha overrides reproducing the alternative switching outcomes:
    # alpha_incoherent -> P0 verdict, alpha_coarse -> coarser-pattern verdict
    alpha_incoherent: float | None = None
    alpha_coarse: float | None = None
    # documented (alpha, sigma) candidates for the pathway search; each is
    # also the preparation point of the pattern it stabilizes
    pathway_candidates: tuple = ()

    @property
    def catalogue(self) -> list[PatternState]:
        return enumerate_patterns(self.duplex.bottom, layer="bottom")

    @property
    def complete_sync(self) -> PatternState:
        n = self.duplex.n_nodes
        return PatternState(
            Partition.from_sets(n, [list(range(1, n + 1))]), "SYNC_B", "bottom"
        )


def five_node() -> Preset:
    top = build_graph(5, [(1, 2), (1, 3), (4, 5)])
    bottom = build_graph(5, [(1, 2), (1, 3), (2, 3), (1, 4), (1, 5)])
    duplex = build_duplex(top, bottom, [0, 1, 1, 1, 1])
    return Preset(
        name="five_node",
        duplex=duplex,
        top_params=HRParams(I=3.2, r=0.01),
        bottom_params=HRParams(I=3.27, r=0.01),
        coupling=CouplingStrengths(alpha=0.6, beta=0.3, sigma=0.5),
        schedule=SigmaSchedule(t_on=1500.0),
        alpha_incoherent=0.2,
        alpha_coarse=1.4,
        pathway_candidates=(
            (0.2, 0.5),    # both top motifs incoherent -> P0
            (0.6, 0.5),    # pair synchronized, star leaves not -> P2
            (1.4, 0.5),    # both synchronized -> P3
            (1.4, 0.02),   # both synchronized, weak drive -> P1
        ),
    )


def six_node() -> Preset:
    top = build_graph(6, [(1, 2), (1, 3), (2, 3), (4, 5)])
    bottom = build_graph(6, [(1, 2), (1, 3), (4, 6), (5, 6)])
    duplex = build_duplex(top, bottom, [0, 0, 0, 1, 1, 0])
    return Preset(
        name="six_node",
        duplex=duplex,
        top_params=HRParams(I=3.1, r=0.01),
        bottom_params=HRParams(I=3.2, r=0.005),
        coupling=CouplingStrengths(alpha=0.2950, beta=0.05, sigma=0.1),
        schedule=SigmaSchedule(t_on=0.0),
    )


def six_node_clusters() -> DuplexClusters:
    """The duplex cluster pattern realized by the six-node preset."""
    return DuplexClusters(
        top=Partition.from_sets(6, [[1, 2, 3], [4, 5], [6]]),
        bottom=Partition.from_sets(6, [[1], [2, 3], [4, 5], [6]]),
    )


PRESETS = {"five_node": five_node, "six_node": six_node}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None
