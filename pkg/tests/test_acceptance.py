"""Acceptance suite: one test per release criterion.

Each test prints a `criterion N: PASS` line when its assertions hold, so the
full transcript doubles as a checklist.  Numerical tolerances are part of
the criteria and must not be loosened.
"""

import itertools
import json
import time

import numpy as np
import pytest

from conftest import brute_force_automorphisms, brute_force_orbits
from test_symmetry import CORPUS

from duplexsym.compat import (
    compatibility_classes,
    is_pattern_invariant,
)
from duplexsym.dynamics import (
    DEFAULT_D_MATRIX,
    DuplexState,
    HRParams,
    Trajectory,
    full_rhs,
    hr_field,
    hr_jacobian,
    integrate,
    pattern_initial_condition,
    simulate_duplex,
    spread_cluster_bases,
)
from duplexsym.experiment import (
    config_from_preset,
    emit_outputs,
    find_pathways,
    load_config,
    run_switching,
)
from duplexsym.measurement import cluster_error
from duplexsym.quotient import characteristic_matrix, quotient_matrices
from duplexsym.presets import six_node_clusters
from duplexsym.stability import (
    BLOCK_TOL,
    duplex_clusters_for_pattern,
    stability_basis,
    transverse_lyapunov,
    variational_rhs,
)
from duplexsym.symmetry import (
    Partition,
    PatternState,
    automorphisms,
    orbit_partition,
    perm_matrix,
)
from duplexsym.topology import CouplingStrengths, build_duplex, build_graph, laplacian
from duplexsym import _kernels


def invariant_clusters(preset):
    """(label, DuplexClusters) for every invariant nontrivial preset pattern."""
    out = []
    for pat in preset.catalogue:
        if pat.partition.is_singletons():
            continue
        if is_pattern_invariant(pat, preset.duplex).invariant:
            out.append((pat.label, duplex_clusters_for_pattern(pat, preset.duplex)))
    return out


def test_criterion_1_group_oracle_equivalence():
    """Automorphisms and orbit partitions match N!-enumeration on the corpus."""
    started = time.monotonic()
    assert len(CORPUS) >= 30
    for name, graph in CORPUS:
        group = automorphisms(graph)
        assert set(group.elements) == brute_force_automorphisms(graph.adjacency), name
        assert orbit_partition(group).clusters == \
            brute_force_orbits(group.elements, group.n), name
    elapsed = time.monotonic() - started
    assert elapsed < 60.0, f"corpus check took {elapsed:.1f}s"
    print(f"criterion 1: PASS ({len(CORPUS)} graphs in {elapsed:.1f}s)")


def test_criterion_2_conjugacy_correctness(preset5, preset6):
    """Compatibility classes match brute force; invariance respects the
    per-cluster drive dichotomy exactly."""
    # the mixed-drive worked example plus both presets
    example = build_duplex(
        build_graph(5, [(1, 2), (1, 3), (2, 3), (4, 5)]),
        build_graph(5, [(1, 2), (1, 3), (2, 3), (1, 4), (1, 5)]),
        [1, 0, 1, 1, 0],
    )
    for duplex in (example, preset5.duplex, preset6.duplex):
        g_top = automorphisms(duplex.top)
        g_bottom = automorphisms(duplex.bottom)
        classes = compatibility_classes(g_top, g_bottom, duplex.inter)
        k = np.diag(duplex.inter.kappa)
        want = {
            (pt, pb)
            for pt in g_top.elements
            for pb in g_bottom.elements
            if np.array_equal(perm_matrix(pb) @ k, k @ perm_matrix(pt))
        }
        got = {
            (pt, pb)
            for ts, bs in classes.classes
            for pt in ts
            for pb in bs
        }
        assert got == want
        assert classes.h_top.is_group()
        assert classes.h_bottom.is_group()

    # every invariant bottom pattern has constant kappa on each cluster
    n_invariant = 0
    for preset in (preset5, preset6):
        kappa = preset.duplex.inter.kappa
        for pat in preset.catalogue:
            verdict = is_pattern_invariant(pat, preset.duplex)
            if verdict.invariant:
                n_invariant += 1
                for cluster in pat.partition.nontrivial_clusters:
                    assert len({kappa[i - 1] for i in cluster}) == 1, pat.label
    assert n_invariant >= 3

    # and a kappa-mixing cluster is rejected outright
    mixing = PatternState(
        Partition.from_sets(5, [[1, 2], [3], [4], [5]]), "MIX", "bottom"
    )
    verdict = is_pattern_invariant(mixing, preset5.duplex)
    assert not verdict.invariant
    assert "all-or-nothing" in verdict.reason
    print("criterion 2: PASS")


def test_criterion_3_complete_sync_exclusion(preset5, preset6):
    """Complete bottom sync is non-invariant and dynamically inconsistent."""
    for preset in (preset5, preset6):
        assert not all(preset.duplex.inter.kappa == 1)
        verdict = is_pattern_invariant(preset.complete_sync, preset.duplex)
        assert not verdict.invariant

        # dynamic probe: exactly synchronized bottom, generic top, sigma=0.5
        n = preset.duplex.n_nodes
        rng = np.random.default_rng(17)
        x0 = rng.uniform(-1, 1, (n, 3)) + np.array([0.0, 0.0, 3.0])
        y0 = np.tile([-1.0, 0.0, 3.0], (n, 1))
        cs = CouplingStrengths(alpha=preset.coupling.alpha,
                               beta=preset.coupling.beta, sigma=0.5)
        deriv = full_rhs(preset.duplex, cs, preset.top_params,
                         preset.bottom_params, DEFAULT_D_MATRIX,
                         DuplexState(x0, y0))
        spread = np.max(np.abs(deriv.y - deriv.y[0]))
        assert spread > 1e-6, preset.name
    print("criterion 3: PASS")


def test_criterion_4_quotient_fidelity(preset5, preset6):
    """Defining relations to 1e-12; lifted quotient tracks the full system."""
    cases = [(preset5, clusters) for _, clusters in invariant_clusters(preset5)]
    cases.append((preset6, six_node_clusters()))
    for preset, clusters in cases:
        duplex = preset.duplex
        q = quotient_matrices(duplex, clusters)
        e_t = characteristic_matrix(clusters.top).e
        e_b = characteristic_matrix(clusters.bottom).e
        a = duplex.top.adjacency
        lap = laplacian(duplex.bottom)
        k = duplex.inter.matrix
        assert np.max(np.abs(a @ e_t - e_t @ q.a_r)) <= 1e-12
        assert np.max(np.abs(lap @ e_b - e_b @ q.l_s)) <= 1e-12
        assert np.max(np.abs(k @ e_t - e_b @ q.k_r)) <= 1e-12
        assert np.max(np.abs(k @ e_b - e_b @ q.k_s)) <= 1e-12

        r0 = spread_cluster_bases(q.k_top, seed=21)
        s0 = spread_cluster_bases(q.k_bottom, seed=22)
        pt, pb = preset.top_params, preset.bottom_params
        cs = preset.coupling
        times, rs, ss, div = _kernels.integrate_quotient(
            q.a_r, q.l_s, q.k_r, q.k_s, pt.as_array(), pb.as_array(),
            DEFAULT_D_MATRIX, cs.alpha, cs.beta, cs.sigma, 0,
            r0, s0, 0.01, 1000, 0, 10,
        )
        assert div == -1
        full = simulate_duplex(duplex, cs, pt, pb,
                               DuplexState(e_t @ r0, e_b @ s0),
                               dt=0.01, t_end=10.0, stride=10)
        lift_x = np.einsum("ij,tjc->tic", e_t, rs)
        lift_y = np.einsum("ij,tjc->tic", e_b, ss)
        assert np.max(np.abs(lift_x - full.x)) <= 1e-6
        assert np.max(np.abs(lift_y - full.y)) <= 1e-6
    print(f"criterion 4: PASS ({len(cases)} pattern/preset cases)")


def test_criterion_5_integrator_order(preset5):
    """RK4: step-halving error ratio 16 +/- 20%; linear field < 1e-8."""

    def linear_rhs(state):
        return DuplexState(state.x, state.y, state.time)

    init = DuplexState(np.ones((1, 3)), np.ones((1, 3)))
    traj = integrate(linear_rhs, init, dt=0.01, t_end=1.0)
    linear_err = abs(traj.x[-1, 0, 0] - np.e)
    assert linear_err < 1e-8

    cs = CouplingStrengths(alpha=0.2, beta=0.2, sigma=0.3)
    rng = np.random.default_rng(23)
    init = DuplexState(rng.uniform(-1, 1, (5, 3)), rng.uniform(-1, 1, (5, 3)))

    def endpoint(dt):
        traj = simulate_duplex(preset5.duplex, cs, preset5.top_params,
                               preset5.bottom_params, init,
                               dt=dt, t_end=1.0, stride=int(round(1.0 / dt)))
        return np.concatenate([traj.x[-1].ravel(), traj.y[-1].ravel()])

    ref = endpoint(0.0005)
    ratio = (np.linalg.norm(endpoint(0.004) - ref)
             / np.linalg.norm(endpoint(0.002) - ref))
    assert 16 * 0.8 <= ratio <= 16 * 1.2, ratio
    print(f"criterion 5: PASS (ratio {ratio:.2f}, linear error {linear_err:.2e})")


def test_criterion_6_variational_correctness(preset5):
    """Jacobian vs finite differences; block diagonalization; top autonomy."""
    rng = np.random.default_rng(29)
    h = 1e-6
    for params in (preset5.top_params, preset5.bottom_params):
        for _ in range(100):
            v = rng.uniform(-2.5, 2.5, 3)
            jac = hr_jacobian(params, v)
            fd = np.empty((3, 3))
            for j in range(3):
                dv = np.zeros(3)
                dv[j] = h
                fd[:, j] = (hr_field(params, v + dv) - hr_field(params, v - dv)) / (2 * h)
            scale = max(1.0, np.max(np.abs(jac)))
            assert np.max(np.abs(jac - fd)) / scale <= 1e-6

    for label, clusters in invariant_clusters(preset5):
        basis = stability_basis(preset5.duplex, clusters)
        for lb, coupling in (
            (basis.top, preset5.duplex.top.adjacency.astype(float)),
            (basis.bottom, laplacian(preset5.duplex.bottom).astype(float)),
        ):
            b = lb.t.T @ coupling @ lb.t
            k = lb.k
            assert np.max(np.abs(b[:k, k:]), initial=0.0) <= BLOCK_TOL, label
            assert np.max(np.abs(b[k:, :k]), initial=0.0) <= BLOCK_TOL, label

        # top variational block must not see bottom perturbations: assemble
        # the xi_bottom -> dxi_top map column by column and require exact zero
        r = spread_cluster_bases(clusters.top.num_clusters, seed=31)
        s = spread_cluster_bases(clusters.bottom.num_clusters, seed=32)
        zeros_t = np.zeros((5, 3))
        for col in range(5):
            for comp in range(3):
                xi_b = np.zeros((5, 3))
                xi_b[col, comp] = 1.0
                dxi_t, _ = variational_rhs(
                    basis, r, s, zeros_t, xi_b, preset5.duplex,
                    preset5.coupling, preset5.top_params, preset5.bottom_params,
                )
                assert np.all(dxi_t == 0.0), label
    print("criterion 6: PASS")


def _observed_cluster_errors(preset, clusters, cs, seed=41,
                             t_end=1000.0, dt=0.01):
    """Mean late-window sync error per (layer, cluster) in direct simulation."""
    eps = 1e-3
    x0 = pattern_initial_condition(
        clusters.top, spread_cluster_bases(clusters.top.num_clusters, seed=seed),
        eps, seed=seed + 1)
    y0 = pattern_initial_condition(
        clusters.bottom,
        spread_cluster_bases(clusters.bottom.num_clusters, seed=seed + 2),
        eps, seed=seed + 3)
    traj = simulate_duplex(preset.duplex, cs, preset.top_params,
                           preset.bottom_params, DuplexState(x0, y0),
                           dt=dt, t_end=t_end, stride=10)
    cut = int(0.8 * len(traj.times))
    out = {}
    for cluster in clusters.top.nontrivial_clusters:
        out[("top", cluster)] = float(np.mean(cluster_error(traj.x[cut:], cluster)))
    for cluster in clusters.bottom.nontrivial_clusters:
        out[("bottom", cluster)] = float(np.mean(cluster_error(traj.y[cut:], cluster)))
    return out


def _sign_agreement_sweep(preset, clusters, points):
    """Per grid point: do exponent signs match observed decay/persistence?

    A cluster is classifiable when its observed error is below 1e-3 (decay)
    or above 1e-1 (persistence); errors in between are excluded as the
    criterion defines no verdict there.  A point agrees when every one of
    its classifiable clusters does.
    """
    agreements = []
    for alpha, beta, sigma in points:
        cs = CouplingStrengths(alpha=alpha, beta=beta, sigma=sigma)
        exps = transverse_lyapunov(
            preset.duplex, clusters, preset.top_params, preset.bottom_params,
            cs, horizon=1000.0, transient=200.0,
        )
        observed = _observed_cluster_errors(preset, clusters, cs)
        verdicts = []
        for rec in exps.records:
            err = observed[(rec.layer, rec.cluster)]
            if err < 1e-3:
                verdicts.append(rec.lam_effective < 0)
            elif err > 1e-1:
                verdicts.append(rec.lam_effective > 0)
        if verdicts:
            agreements.append(all(verdicts))
    return agreements


def test_criterion_7_lambda_error_sign_agreement(preset6):
    """Exponent signs predict direct-simulation sync decay on the 6-node
    preset over both sweep families; >= 90% of classifiable points agree."""
    started = time.monotonic()
    clusters = six_node_clusters()
    alphas = (0.1, 0.3, 0.5, 0.8)

    grid_ab = [(a, b, 0.0) for a in alphas for b in (0.05, 0.08, 0.1)]
    grid_as = [(a, 0.05, s) for a in alphas for s in (0.05, 0.2, 0.5)]

    for name, grid in (("alpha-beta", grid_ab), ("alpha-sigma", grid_as)):
        agreements = _sign_agreement_sweep(preset6, clusters, grid)
        assert len(agreements) >= 10, (name, len(agreements))
        frac = sum(agreements) / len(agreements)
        assert frac >= 0.9, (name, frac, agreements)
    elapsed = time.monotonic() - started
    assert elapsed < 1800.0
    print(f"criterion 7: PASS (both sweeps >= 90% in {elapsed:.0f}s)")


def test_criterion_8_switching_reproduction(preset5):
    """Sigma turn-on switches the bottom pattern; other drive strengths give
    the incoherent verdict and a coarser pattern."""
    base = config_from_preset(preset5, start_pattern="P1_B",
                              expected_post="P2_B")
    report = run_switching(load_config(base))
    assert report.pre_verdict == "P1_B"
    assert report.post_verdict == "P2_B"
    assert report.post_verdict != report.pre_verdict
    assert is_pattern_invariant(
        load_config(base).pattern("P2_B"), preset5.duplex).invariant
    # the abandoned pattern's error rises well above threshold after the
    # switch while the new pattern's error collapses
    assert report.post_errors["P1_B"] > 0.1
    assert report.post_errors["P2_B"] < 1e-3

    weak = config_from_preset(preset5, start_pattern="P1_B",
                              coupling={"alpha": preset5.alpha_incoherent})
    report_weak = run_switching(load_config(weak))
    assert report_weak.post_verdict == "P0_B"

    strong = config_from_preset(preset5, start_pattern="P1_B",
                                coupling={"alpha": preset5.alpha_coarse})
    report_strong = run_switching(load_config(strong))
    post = load_config(strong).pattern(report_strong.post_verdict)
    pre = load_config(strong).pattern("P1_B")
    assert post.partition.num_clusters < pre.partition.num_clusters
    print(f"criterion 8: PASS (P1_B -> {report.post_verdict}; "
          f"weak -> {report_weak.post_verdict}; "
          f"strong -> {report_strong.post_verdict})")


def test_criterion_9_pathway_completeness(preset5, tmp_path):
    """The documented candidate set reaches >= 10 of the 12 directed edges,
    and the emitted report enumerates whatever is missing."""
    cfg = load_config(config_from_preset(preset5))
    graph = find_pathways(cfg, list(preset5.pathway_candidates))
    assert graph.nodes == ("P0_B", "P1_B", "P2_B", "P3_B")
    assert len(graph.edges) >= 10, sorted(graph.edges)
    paths = emit_outputs((graph, cfg.raw, cfg.seed), tmp_path, prefix="acc9")
    doc = json.loads(paths["report"].read_text())
    assert sorted(tuple(e) for e in doc["missing_edges"]) == \
        sorted(graph.missing_edges)
    assert paths["dot"].read_text().count("->") == len(graph.edges)
    print(f"criterion 9: PASS ({len(graph.edges)}/12 edges, "
          f"missing {graph.missing_edges})")


def test_criterion_10_determinism(preset5, tmp_path):
    """Same config and seed: identical verdicts, bitwise-identical CSV."""
    raw = config_from_preset(
        preset5, start_pattern="P1_B",
        integration={"t_end": 500.0, "transient": 100.0, "seed": 3},
        coupling={"t_on": 300.0},
    )
    runs = []
    for tag in ("a", "b"):
        cfg = load_config(json.loads(json.dumps(raw)))
        report = run_switching(cfg)
        out = emit_outputs(report, tmp_path / tag, prefix="acc10")
        runs.append((report, out))
    (r1, o1), (r2, o2) = runs
    assert r1.pre_verdict == r2.pre_verdict
    assert r1.post_verdict == r2.post_verdict
    assert r1.pre_errors == r2.pre_errors
    assert r1.post_errors == r2.post_errors
    assert o1["csv"].read_bytes() == o2["csv"].read_bytes()
    doc1 = json.loads(o1["report"].read_text())
    doc2 = json.loads(o2["report"].read_text())
    assert doc1 == doc2
    print("criterion 10: PASS")
