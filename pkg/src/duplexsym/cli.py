"""Command-line interface.

Subcommands: patterns, compat, simulate, lyapunov, sweep, pathways.  Every
subcommand takes --config (JSON path) and the targeted overrides --alpha,
--sigma, --seed.  Exit codes: 0 success, 2 config error, 3 divergence,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .compat import compatibility_classes, duplex_orbit_partition, is_pattern_invariant
from .dynamics import DivergenceError
from .experiment import (
    ConfigError,
    ExperimentConfig,
    emit_outputs,
    find_pathways,
    load_config,
    run_switching,
)
from .presets import get_preset
from .stability import duplex_clusters_for_pattern, stability_map, transverse_lyapunov
from .symmetry import automorphisms, enumerate_patterns

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4


def _add_common(sub):
    sub.add_argument("--config", required=True, help="path to a JSON experiment config")
    sub.add_argument("--alpha", type=float, help="override coupling.alpha")
    sub.add_argument("--sigma", type=float, help="override coupling.sigma")
    sub.add_argument("--seed", type=int, help="override integration.seed")
    sub.add_argument("--output-dir", help="override output.dir")


def _load(args) -> ExperimentConfig:
    with open(args.config) as fh:
        raw = json.load(fh)
    if args.alpha is not None:
        raw.setdefault("coupling", {})["alpha"] = args.alpha
    if args.sigma is not None:
        raw.setdefault("coupling", {})["sigma"] = args.sigma
    if args.seed is not None:
        raw.setdefault("integration", {})["seed"] = args.seed
    if args.output_dir is not None:
        raw.setdefault("output", {})["dir"] = args.output_dir
    return load_config(raw)


def _cmd_patterns(args) -> int:
    cfg = _load(args)
    doc = []
    for pat in cfg.catalogue:
        verdict = is_pattern_invariant(pat, cfg.duplex)
        doc.append({
            "label": pat.label,
            "clusters": [list(c) for c in pat.partition.clusters],
            "invariant": verdict.invariant,
            "reason": verdict.reason,
        })
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def _cmd_compat(args) -> int:
    cfg = _load(args)
    g_top = automorphisms(cfg.duplex.top)
    g_bottom = automorphisms(cfg.duplex.bottom)
    classes = compatibility_classes(g_top, g_bottom, cfg.duplex.inter)
    dop = duplex_orbit_partition(classes)
    doc = {
        "aut_top_order": len(g_top.elements),
        "aut_bottom_order": len(g_bottom.elements),
        "compatible_top_order": len(classes.h_top.elements),
        "compatible_bottom_order": len(classes.h_bottom.elements),
        "num_classes": len(classes.classes),
        "orbit_clusters_top": [list(c) for c in dop.top.clusters],
        "orbit_clusters_bottom": [list(c) for c in dop.bottom.clusters],
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = _load(args)
    report = run_switching(cfg)
    outdir = cfg.output_dir or Path.cwd()
    paths = emit_outputs(report, outdir, prefix=cfg.prefix)
    print(json.dumps({
        "pre_verdict": report.pre_verdict,
        "post_verdict": report.post_verdict,
        "outputs": {k: str(v) for k, v in paths.items()},
    }, indent=2))
    return EXIT_OK


def _cmd_lyapunov(args) -> int:
    cfg = _load(args)
    pat = cfg.pattern(args.pattern)
    clusters = duplex_clusters_for_pattern(pat, cfg.duplex)
    exps = transverse_lyapunov(
        cfg.duplex, clusters, cfg.top_params, cfg.bottom_params, cfg.coupling,
        horizon=args.horizon, transient=cfg.transient, dt=cfg.dt, seed=cfg.seed,
    )
    doc = [
        {"layer": r.layer, "cluster": list(r.cluster), "lambda": r.lam,
         "lambda_effective": r.lam_effective, "converged": r.converged}
        for r in exps.records
    ]
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def _parse_grid(text: str) -> np.ndarray:
    try:
        vals = np.array([float(v) for v in text.split(",") if v.strip() != ""])
    except ValueError as err:
        raise ConfigError(f"bad grid {text!r}: {err}") from err
    if vals.size == 0:
        raise ConfigError(f"empty grid {text!r}")
    return vals


def _cmd_sweep(args) -> int:
    from .experiment import write_stability_csv

    cfg = _load(args)
    alphas = _parse_grid(args.alpha_grid)
    sigmas = _parse_grid(args.sigma_grid)
    if args.patterns:
        labels = args.patterns.split(",")
    else:
        labels = [
            p.label for p in cfg.catalogue
            if not p.partition.is_singletons()
            and is_pattern_invariant(p, cfg.duplex).invariant
        ]
    pats = []
    for label in labels:
        pat = cfg.pattern(label)
        try:
            pats.append((label, duplex_clusters_for_pattern(pat, cfg.duplex)))
        except ValueError as err:
            raise ConfigError(str(err)) from err
    if not pats:
        raise ConfigError("no invariant nontrivial patterns to sweep")
    smap = stability_map(
        cfg.duplex, pats, cfg.top_params, cfg.bottom_params, cfg.coupling.beta,
        alphas, sigmas, horizon=args.horizon, dt=cfg.dt, seed=cfg.seed,
    )
    outdir = cfg.output_dir or Path.cwd()
    outdir.mkdir(parents=True, exist_ok=True)
    path = write_stability_csv(smap, outdir / f"{cfg.prefix}_stability.csv")
    print(json.dumps({"output": str(path), "entries": len(smap.entries)}, indent=2))
    return EXIT_OK


def _cmd_pathways(args) -> int:
    cfg = _load(args)
    if args.candidates:
        candidates = []
        for tok in args.candidates.split(","):
            a, s = tok.split(":")
            candidates.append((float(a), float(s)))
    else:
        preset_name = cfg.raw.get("topology", {}).get("preset")
        if preset_name is None:
            raise ConfigError("pathways needs --candidates or a preset topology")
        candidates = list(get_preset(preset_name).pathway_candidates)
        if not candidates:
            raise ConfigError(f"preset {preset_name} ships no pathway candidates")
    graph = find_pathways(cfg, candidates)
    outdir = cfg.output_dir or Path.cwd()
    paths = emit_outputs((graph, cfg.raw, cfg.seed), outdir, prefix=cfg.prefix)
    print(json.dumps({
        "nodes": list(graph.nodes),
        "edges_found": len(graph.edges),
        "missing_edges": [list(e) for e in graph.missing_edges],
        "outputs": {k: str(v) for k, v in paths.items()},
    }, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="duplexsym",
        description="Symmetry-breaker analysis of duplex oscillator networks",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("patterns", help="enumerate the bottom pattern catalogue")
    _add_common(p)
    p.set_defaults(func=_cmd_patterns)

    p = subs.add_parser("compat", help="compatible symmetries and duplex clusters")
    _add_common(p)
    p.set_defaults(func=_cmd_compat)

    p = subs.add_parser("simulate", help="run a switching experiment")
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = subs.add_parser("lyapunov", help="transverse exponents of one pattern")
    _add_common(p)
    p.add_argument("--pattern", required=True, help="bottom pattern label, e.g. P1_B")
    p.add_argument("--horizon", type=float, default=5000.0)
    p.set_defaults(func=_cmd_lyapunov)

    p = subs.add_parser("sweep", help="stability map over an (alpha, sigma) grid")
    _add_common(p)
    p.add_argument("--alpha-grid", required=True, help="comma-separated alphas")
    p.add_argument("--sigma-grid", required=True, help="comma-separated sigmas")
    p.add_argument("--patterns", help="comma-separated labels (default: all nontrivial)")
    p.add_argument("--horizon", type=float, default=2000.0)
    p.set_defaults(func=_cmd_sweep)

    p = subs.add_parser("pathways", help="search transitions between patterns")
    _add_common(p)
    p.add_argument("--candidates", help="comma-separated alpha:sigma pairs")
    p.set_defaults(func=_cmd_pathways)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError, KeyError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as err:
        print(f"divergence: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
