import numpy as np
import pytest

from duplexsym.measurement import cluster_error, detect_pattern, pattern_error
from duplexsym.symmetry import Partition, PatternState


def pattern(n, sets, label):
    return PatternState(Partition.from_sets(n, sets), label, "bottom")


def states_from_columns(*nodes):
    """Stack per-node (3,) vectors into a single-snapshot (1, N, 3) array."""
    return np.asarray(nodes, dtype=float)[None]


class TestClusterError:
    def test_synchronized_cluster_has_zero_error(self):
        v = np.array([0.3, -1.2, 2.0])
        states = states_from_columns(v, v, v)
        assert cluster_error(states, (1, 2, 3)) == pytest.approx(0.0)

    def test_two_node_cluster_is_l1_distance(self):
        a = np.array([1.0, 0.0, 2.0])
        b = np.array([0.0, 0.5, 2.0])
        states = states_from_columns(a, b)
        assert cluster_error(states, (1, 2))[0] == pytest.approx(1.5)

    def test_singleton_is_zero(self):
        states = states_from_columns(np.array([5.0, 5.0, 5.0]))
        assert cluster_error(states, (1,)) == pytest.approx(0.0)

    def test_ordered_pair_mean_equals_unordered(self):
        rng = np.random.default_rng(0)
        states = rng.normal(size=(4, 5, 3))
        cluster = (1, 3, 5)
        idx = [0, 2, 4]
        m = len(idx)
        acc = np.zeros(4)
        for a in range(m):
            for b in range(a + 1, m):
                acc += np.abs(states[:, idx[a]] - states[:, idx[b]]).sum(axis=1)
        expected = acc * 2 / (m * (m - 1))
        assert np.allclose(cluster_error(states, cluster), expected)

    def test_invariant_under_node_relabeling_within_cluster(self):
        rng = np.random.default_rng(1)
        states = rng.normal(size=(3, 4, 3))
        assert np.allclose(cluster_error(states, (1, 2, 4)),
                           cluster_error(states, (4, 1, 2)))

    def test_per_snapshot_shape(self):
        states = np.zeros((7, 3, 3))
        assert cluster_error(states, (1, 2)).shape == (7,)


class TestPatternError:
    def test_single_nontrivial_cluster_equals_cluster_error(self):
        rng = np.random.default_rng(2)
        states = rng.normal(size=(5, 5, 3))
        p = Partition.from_sets(5, [[1], [2, 3], [4], [5]])
        assert np.allclose(pattern_error(states, p),
                           cluster_error(states, (2, 3)))

    def test_mean_over_nontrivial_clusters(self):
        # cluster {1,2} has error 1, cluster {3,4} has error 3 -> mean 2
        a = np.zeros(3)
        states = states_from_columns(a, a + [1.0, 0, 0], a, a + [3.0, 0, 0])
        p = Partition.from_sets(4, [[1, 2], [3, 4]])
        assert cluster_error(states, (1, 2))[0] == pytest.approx(1.0)
        assert cluster_error(states, (3, 4))[0] == pytest.approx(3.0)
        assert pattern_error(states, p)[0] == pytest.approx(2.0)

    def test_singletons_excluded_from_average(self):
        a = np.zeros(3)
        states = states_from_columns(a, a, a + 100.0)
        p = Partition.from_sets(3, [[1, 2], [3]])
        assert pattern_error(states, p)[0] == pytest.approx(0.0)

    def test_all_singleton_pattern_rejected(self):
        with pytest.raises(ValueError):
            pattern_error(np.zeros((1, 3, 3)), Partition.from_sets(3, [[1], [2], [3]]))


def catalogue5():
    return [
        pattern(5, [[1], [2], [3], [4], [5]], "P0"),
        pattern(5, [[1], [2, 3], [4], [5]], "P1"),
        pattern(5, [[1], [2], [3], [4, 5]], "P2"),
        pattern(5, [[1], [2, 3], [4, 5]], "P3"),
    ]


class TestDetectPattern:
    def test_fallback_to_singletons_when_nothing_passes(self):
        rng = np.random.default_rng(3)
        states = rng.uniform(-2, 2, (10, 5, 3))
        res = detect_pattern(states, catalogue5())
        assert res.label == "P0"
        assert all(err >= res.threshold for err in res.errors.values())

    def test_single_passing_candidate_wins(self):
        rng = np.random.default_rng(4)
        states = rng.uniform(-2, 2, (10, 5, 3))
        states[:, 2] = states[:, 1]  # nodes 2 and 3 synchronized
        res = detect_pattern(states, catalogue5())
        assert res.label == "P1"

    def test_most_nontrivial_clusters_wins(self):
        rng = np.random.default_rng(5)
        states = rng.uniform(-2, 2, (10, 5, 3))
        states[:, 2] = states[:, 1]
        states[:, 4] = states[:, 3]
        res = detect_pattern(states, catalogue5())
        # P1, P2, P3 all pass; P3 has two nontrivial clusters
        assert res.label == "P3"
        assert res.errors["P1"] < res.threshold
        assert res.errors["P2"] < res.threshold

    def test_tie_breaks_on_total_cluster_size(self):
        cands = [
            pattern(5, [[1], [2], [3], [4], [5]], "P0"),
            pattern(5, [[1, 2, 3], [4], [5]], "BIG"),
            pattern(5, [[1], [2], [3], [4, 5]], "SMALL"),
        ]
        rng = np.random.default_rng(6)
        states = rng.uniform(-2, 2, (10, 5, 3))
        states[:, 1] = states[:, 0]
        states[:, 2] = states[:, 0]
        states[:, 4] = states[:, 3]
        res = detect_pattern(states, cands)
        assert res.label == "BIG"

    def test_final_tie_breaks_on_label_order(self):
        cands = [
            pattern(4, [[1], [2], [3], [4]], "P0"),
            pattern(4, [[1, 2], [3], [4]], "B"),
            pattern(4, [[1], [2], [3, 4]], "A"),
        ]
        states = np.zeros((5, 4, 3))  # everything synchronized
        res = detect_pattern(states, cands)
        assert res.label == "A"

    def test_window_restricts_to_late_snapshots(self):
        rng = np.random.default_rng(7)
        states = rng.uniform(-2, 2, (100, 5, 3))
        states[80:, 2] = states[80:, 1]  # sync only over the final 20%
        res = detect_pattern(states, catalogue5(), window_fraction=0.2)
        assert res.label == "P1"
        assert res.window == (80, 100)
        # a window covering the unsynchronized stretch must not detect it
        res_wide = detect_pattern(states, catalogue5(), window_fraction=1.0)
        assert res_wide.label == "P0"

    def test_threshold_monotonicity(self):
        rng = np.random.default_rng(8)
        states = rng.uniform(-2, 2, (10, 5, 3))
        states[:, 2] = states[:, 1] + 1e-5
        strict = detect_pattern(states, catalogue5(), threshold=1e-7)
        loose = detect_pattern(states, catalogue5(), threshold=1e-3)
        assert strict.label == "P0"
        assert loose.label == "P1"

    def test_catalogue_must_contain_singletons(self):
        with pytest.raises(ValueError):
            detect_pattern(np.zeros((2, 5, 3)), catalogue5()[1:])

    def test_duplicate_singleton_catalogue_rejected(self):
        cands = catalogue5() + [pattern(5, [[1], [2], [3], [4], [5]], "P0bis")]
        with pytest.raises(ValueError):
            detect_pattern(np.zeros((2, 5, 3)), cands)

    @pytest.mark.parametrize("wf", [0.0, -0.1, 1.5])
    def test_bad_window_fraction(self, wf):
        with pytest.raises(ValueError):
            detect_pattern(np.zeros((2, 5, 3)), catalogue5(), window_fraction=wf)
