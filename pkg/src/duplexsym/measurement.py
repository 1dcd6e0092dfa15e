"""Cluster synchronization errors and pattern detection from trajectories.

A cluster's error is the mean l1 distance over ordered node pairs inside
the cluster; a pattern's error averages the errors of its nontrivial
clusters.  Detection picks, among the candidate patterns whose error stays
below threshold, the one with the most nontrivial clusters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .symmetry import Partition, PatternState

__all__ = [
    "cluster_error",
    "pattern_error",
    "DetectionResult",
    "detect_pattern",
]


def cluster_error(states: np.ndarray, cluster) -> np.ndarray:
    """Mean l1 pairwise distance inside one cluster, per snapshot.

    states: (T, N, 3) node states; cluster: 1-based node indices.  Singleton
    clusters have error 0 by convention.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim == 2:
        states = states[None]
    idx = [i - 1 for i in cluster]
    m = len(idx)
    if m < 2:
        return np.zeros(states.shape[0])
    total = np.zeros(states.shape[0])
    for a in range(m):
        for b in range(m):
            if a != b:
                total += np.abs(states[:, idx[a]] - states[:, idx[b]]).sum(axis=1)
    return total / (m * (m - 1))


def pattern_error(states: np.ndarray, pattern: Partition) -> np.ndarray:
    """Mean cluster error over the pattern's nontrivial clusters, per snapshot.

    The all-singleton pattern has no nontrivial clusters and no error signal,
    so it is rejected here; detection treats it as the fallback verdict.
    """
    nontrivial = pattern.nontrivial_clusters
    if not nontrivial:
        raise ValueError("pattern has no nontrivial clusters")
    errs = [cluster_error(states, c) for c in nontrivial]
    return np.mean(errs, axis=0)


@dataclass(frozen=True)
class DetectionResult:
    pattern: PatternState
    errors: dict          # label -> mean pattern error over the window
    threshold: float
    window: tuple         # (start index, stop index) into the trajectory

    @property
    def label(self) -> str:
        return self.pattern.label


def detect_pattern(
    states: np.ndarray,
    candidates,
    threshold: float = 1e-3,
    window_fraction: float = 0.2,
) -> DetectionResult:
    """Classify the observed states against a catalogue of patterns.

    Each candidate's error is averaged over the final `window_fraction` of
    the snapshots.  If every nontrivial candidate stays above threshold the
    verdict is the all-singleton member of the catalogue.  Otherwise the
    sub-threshold candidate with the most nontrivial clusters wins; ties go
    to the larger total nontrivial size, then to label order.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim == 2:
        states = states[None]
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must be in (0, 1]")
    n_snap = states.shape[0]
    start = max(0, n_snap - max(1, int(round(window_fraction * n_snap))))
    window = states[start:]

    singleton = None
    errors = {}
    passing = []
    for cand in candidates:
        if cand.partition.is_singletons():
            if singleton is not None:
                raise ValueError("catalogue contains two all-singleton patterns")
            singleton = cand
            continue
        err = float(np.mean(pattern_error(window, cand.partition)))
        errors[cand.label] = err
        if err < threshold:
            passing.append(cand)
    if singleton is None:
        raise ValueError("catalogue must contain the all-singleton pattern")

    if not passing:
        verdict = singleton
    else:
        def rank(cand):
            nontrivial = cand.partition.nontrivial_clusters
            return (
                -len(nontrivial),
                -sum(len(c) for c in nontrivial),
                cand.label,
            )
        verdict = min(passing, key=rank)
    return DetectionResult(verdict, errors, threshold, (start, n_snap))
