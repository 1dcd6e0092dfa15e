"""Config-driven experiment runs: pattern switching, pathway search, file I/O.

Configs are JSON documents validated against CONFIG_SCHEMA; run reports are
JSON documents validated against REPORT_SCHEMA, embedding the full config
and seed so any report can be re-run verbatim.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .compat import is_pattern_invariant
from .dynamics import (
    DivergenceError,
    DuplexState,
    HRParams,
    SigmaSchedule,
    pattern_initial_condition,
    simulate_duplex,
    spread_cluster_bases,
)
from .measurement import detect_pattern, pattern_error
from .presets import Preset, get_preset
from .quotient import NotEquitableError, quotient_matrices
from .stability import duplex_clusters_for_pattern
from .symmetry import PatternState, enumerate_patterns
from .topology import CouplingStrengths, DuplexTopology, build_duplex, build_graph

__all__ = [
    "ConfigError",
    "CONFIG_SCHEMA",
    "REPORT_SCHEMA",
    "ExperimentConfig",
    "SwitchingReport",
    "TransitionGraph",
    "load_config",
    "config_from_preset",
    "run_switching",
    "find_pathways",
    "emit_outputs",
    "write_stability_csv",
]


class ConfigError(ValueError):
    """The experiment config failed validation."""


_NUM = {"type": "number"}
_HR_SECTION = {
    "type": "object",
    "properties": {k: _NUM for k in ("I", "r", "a", "b", "c", "d", "s", "t")},
    "required": ["I", "r"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "topology": {
            "type": "object",
            "properties": {
                "preset": {"type": "string"},
                "n_nodes": {"type": "integer", "minimum": 1},
                "top_edges": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "integer"},
                              "minItems": 2, "maxItems": 2},
                },
                "bottom_edges": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "integer"},
                              "minItems": 2, "maxItems": 2},
                },
                "kappa": {"type": "array", "items": {"type": "integer", "enum": [0, 1]}},
            },
            "additionalProperties": False,
        },
        "hr_top": _HR_SECTION,
        "hr_bottom": _HR_SECTION,
        "coupling": {
            "type": "object",
            "properties": {
                "alpha": _NUM, "beta": _NUM, "sigma": _NUM,
                "t_on": {"type": "number", "minimum": 0},
            },
            "required": ["alpha", "beta", "sigma"],
            "additionalProperties": False,
        },
        "integration": {
            "type": "object",
            "properties": {
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "transient": {"type": "number", "minimum": 0},
                "stride": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "epsilon": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "detection": {
            "type": "object",
            "properties": {
                "threshold": {"type": "number", "exclusiveMinimum": 0},
                "window_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            },
            "additionalProperties": False,
        },
        "start_pattern": {"type": "string"},
        "expected_post": {"type": "string"},
        "output": {
            "type": "object",
            "properties": {"dir": {"type": "string"}, "prefix": {"type": "string"}},
            "additionalProperties": False,
        },
    },
    "required": ["topology", "hr_top", "hr_bottom", "coupling"],
    "additionalProperties": False,
}

REPORT_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"type": "string", "enum": ["switching", "pathways"]},
        "config": CONFIG_SCHEMA,
        "seed": {"type": "integer"},
        "pre_verdict": {"type": "string"},
        "post_verdict": {"type": "string"},
        "pre_errors": {"type": "object"},
        "post_errors": {"type": "object"},
        "quotient": {"type": ["object", "null"]},
        "lambda_table": {"type": ["array", "null"]},
        "edges": {"type": "array"},
        "missing_edges": {"type": "array"},
        "nodes": {"type": "array"},
    },
    "required": ["kind", "config", "seed"],
}

_DEFAULTS = {
    "integration": {"dt": 0.01, "t_end": 3000.0, "transient": 1000.0,
                    "stride": 10, "seed": 0, "epsilon": 1e-3},
    "detection": {"threshold": 1e-3, "window_fraction": 0.2},
    "coupling_t_on": 0.0,
}


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    duplex: DuplexTopology
    top_params: HRParams
    bottom_params: HRParams
    coupling: CouplingStrengths
    schedule: SigmaSchedule
    dt: float
    t_end: float
    transient: float
    stride: int
    seed: int
    epsilon: float
    threshold: float
    window_fraction: float
    start_pattern: str | None
    expected_post: str | None
    output_dir: Path | None
    prefix: str

    @property
    def catalogue(self) -> list[PatternState]:
        return enumerate_patterns(self.duplex.bottom, layer="bottom")

    def pattern(self, label: str) -> PatternState:
        for p in self.catalogue:
            if p.label == label:
                return p
        raise ConfigError(f"pattern {label!r} is not in the catalogue "
                          f"{[p.label for p in self.catalogue]}")


def _build_topology(section: dict) -> DuplexTopology:
    if "preset" in section:
        extra = set(section) - {"preset"}
        if extra:
            raise ConfigError(f"topology preset does not take extra keys: {sorted(extra)}")
        return get_preset(section["preset"]).duplex
    missing = {"n_nodes", "top_edges", "bottom_edges", "kappa"} - set(section)
    if missing:
        raise ConfigError(f"explicit topology needs keys {sorted(missing)}")
    n = section["n_nodes"]
    top = build_graph(n, [tuple(e) for e in section["top_edges"]])
    bottom = build_graph(n, [tuple(e) for e in section["bottom_edges"]])
    return build_duplex(top, bottom, section["kappa"])


def load_config(source) -> ExperimentConfig:
    """Validate and resolve a config given as a dict, JSON string, or path."""
    if isinstance(source, Path) or (
        isinstance(source, str) and not source.lstrip().startswith("{")
    ):
        with open(source) as fh:
            raw = json.load(fh)
    elif isinstance(source, str):
        raw = json.loads(source)
    else:
        raw = source
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        raise ConfigError(f"config failed schema validation: {err.message}") from err

    try:
        duplex = _build_topology(raw["topology"])
        integ = {**_DEFAULTS["integration"], **raw.get("integration", {})}
        det = {**_DEFAULTS["detection"], **raw.get("detection", {})}
        coup = raw["coupling"]
        cs = CouplingStrengths(alpha=coup["alpha"], beta=coup["beta"], sigma=coup["sigma"])
        schedule = SigmaSchedule(t_on=coup.get("t_on", _DEFAULTS["coupling_t_on"]))
        out = raw.get("output", {})
        cfg = ExperimentConfig(
            raw=raw,
            duplex=duplex,
            top_params=HRParams(**raw["hr_top"]),
            bottom_params=HRParams(**raw["hr_bottom"]),
            coupling=cs,
            schedule=schedule,
            dt=integ["dt"],
            t_end=integ["t_end"],
            transient=integ["transient"],
            stride=integ["stride"],
            seed=integ["seed"],
            epsilon=integ["epsilon"],
            threshold=det["threshold"],
            window_fraction=det["window_fraction"],
            start_pattern=raw.get("start_pattern"),
            expected_post=raw.get("expected_post"),
            output_dir=Path(out["dir"]) if "dir" in out else None,
            prefix=out.get("prefix", "run"),
        )
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as err:
        raise ConfigError(str(err)) from err
    if not (cfg.t_end > cfg.transient >= 0):
        raise ConfigError("integration requires t_end > transient >= 0")
    if cfg.start_pattern is not None:
        cfg.pattern(cfg.start_pattern)
    if cfg.expected_post is not None:
        verdict = is_pattern_invariant(cfg.pattern(cfg.expected_post), duplex)
        if not verdict.invariant:
            raise ConfigError(
                f"expected post pattern {cfg.expected_post} is not invariant: {verdict.reason}"
            )
    return cfg


def config_from_preset(preset: Preset, **overrides) -> dict:
    """Raw config dict reproducing a preset's default switching experiment."""
    raw = {
        "topology": {"preset": preset.name},
        "hr_top": {"I": preset.top_params.I, "r": preset.top_params.r},
        "hr_bottom": {"I": preset.bottom_params.I, "r": preset.bottom_params.r},
        "coupling": {
            "alpha": preset.coupling.alpha,
            "beta": preset.coupling.beta,
            "sigma": preset.coupling.sigma,
            "t_on": preset.schedule.t_on,
        },
        "integration": {
            "dt": preset.dt, "t_end": preset.t_end, "transient": preset.transient,
            "stride": preset.stride, "seed": 0, "epsilon": preset.epsilon,
        },
        "detection": {"threshold": preset.threshold, "window_fraction": 0.2},
    }
    for key, val in overrides.items():
        if isinstance(val, dict) and key in raw:
            raw[key].update(val)
        else:
            raw[key] = val
    return raw


@dataclass
class SwitchingReport:
    config: dict
    seed: int
    times: np.ndarray
    y: np.ndarray                # (T, N, 3) bottom trajectory snapshots
    x: np.ndarray                # (T, N, 3) top trajectory snapshots
    errors: dict                 # label -> per-snapshot pattern error
    pre_verdict: str
    post_verdict: str
    pre_errors: dict             # label -> mean error over the pre-switch window
    post_errors: dict
    quotient: dict | None        # reduced matrices of the post pattern, if invariant
    lambda_table: list | None = None

    def as_json_dict(self) -> dict:
        doc = {
            "kind": "switching",
            "config": self.config,
            "seed": self.seed,
            "pre_verdict": self.pre_verdict,
            "post_verdict": self.post_verdict,
            "pre_errors": {k: float(v) for k, v in self.pre_errors.items()},
            "post_errors": {k: float(v) for k, v in self.post_errors.items()},
            "quotient": self.quotient,
            "lambda_table": self.lambda_table,
        }
        jsonschema.validate(doc, REPORT_SCHEMA)
        return doc


def _initial_state(cfg: ExperimentConfig, epsilon: float | None = None) -> DuplexState:
    """Bottom layer near the start pattern (or incoherent), top incoherent."""
    eps = cfg.epsilon if epsilon is None else epsilon
    rng = np.random.default_rng(cfg.seed)
    n = cfg.duplex.n_nodes
    x0 = rng.uniform(-1.0, 1.0, size=(n, 3)) + np.array([0.0, 0.0, 3.0])
    start = cfg.pattern(cfg.start_pattern) if cfg.start_pattern else None
    if start is None or start.partition.is_singletons():
        y0 = rng.uniform(-1.0, 1.0, size=(n, 3)) + np.array([0.0, 0.0, 3.0])
        y0[:, 0] += 0.5 * np.arange(n)
    else:
        base = spread_cluster_bases(start.partition.num_clusters, seed=cfg.seed)
        y0 = pattern_initial_condition(start.partition, base, eps, seed=cfg.seed + 1)
    return DuplexState(x0, y0)


def _window_mean_errors(y: np.ndarray, catalogue, window_fraction: float) -> dict:
    n_snap = y.shape[0]
    start = max(0, n_snap - max(1, int(round(window_fraction * n_snap))))
    win = y[start:]
    out = {}
    for cand in catalogue:
        if cand.partition.is_singletons():
            continue
        out[cand.label] = float(np.mean(pattern_error(win, cand.partition)))
    return out


def run_switching(cfg: ExperimentConfig, epsilon: float | None = None) -> SwitchingReport:
    """Integrate through the sigma turn-on and classify both windows.

    The pre-switch verdict is computed on the recorded snapshots before t_on
    and the post-switch verdict on the snapshots after it, each using the
    configured trailing window fraction.
    """
    initial = _initial_state(cfg, epsilon)
    catalogue = cfg.catalogue
    t_on = cfg.schedule.t_on

    traj = simulate_duplex(
        cfg.duplex, cfg.coupling, cfg.top_params, cfg.bottom_params, initial,
        dt=cfg.dt, t_end=cfg.t_end, transient=cfg.transient,
        stride=cfg.stride, schedule=cfg.schedule,
    )
    times, xs, ys = traj.times, traj.x, traj.y

    pre_mask = times < t_on if t_on > times[0] else np.zeros(len(times), dtype=bool)
    post_mask = ~pre_mask
    if not post_mask.any():
        raise ConfigError("no snapshots after the sigma turn-on; increase t_end")
    if pre_mask.any():
        pre = detect_pattern(ys[pre_mask], catalogue, cfg.threshold, cfg.window_fraction)
        pre_verdict, pre_errors = pre.label, pre.errors
    else:
        pre_verdict, pre_errors = cfg.start_pattern or "P0_B", {}
    post = detect_pattern(ys[post_mask], catalogue, cfg.threshold, cfg.window_fraction)

    errors = {}
    for cand in catalogue:
        if not cand.partition.is_singletons():
            errors[cand.label] = pattern_error(ys, cand.partition)

    quotient_doc = None
    post_pattern = cfg.pattern(post.label)
    if not post_pattern.partition.is_singletons():
        verdict = is_pattern_invariant(post_pattern, cfg.duplex)
        if verdict.invariant:
            try:
                q = quotient_matrices(
                    cfg.duplex, duplex_clusters_for_pattern(post_pattern, cfg.duplex)
                )
                quotient_doc = {
                    "pattern": post.label,
                    "a_r": q.a_r.tolist(),
                    "l_s": q.l_s.tolist(),
                    "k_r": q.k_r.tolist(),
                    "k_s": q.k_s.tolist(),
                }
            except NotEquitableError:
                quotient_doc = None

    return SwitchingReport(
        config=cfg.raw,
        seed=cfg.seed,
        times=times,
        y=ys,
        x=xs,
        errors=errors,
        pre_verdict=pre_verdict,
        post_verdict=post.label,
        pre_errors=pre_errors,
        post_errors=post.errors,
        quotient=quotient_doc,
    )


@dataclass
class TransitionGraph:
    nodes: tuple                       # pattern labels
    edges: dict                        # (src, dst) -> {"alpha": ..., "sigma": ...}

    @property
    def missing_edges(self) -> list:
        return [
            (a, b)
            for a in self.nodes
            for b in self.nodes
            if a != b and (a, b) not in self.edges
        ]

    @property
    def is_complete(self) -> bool:
        return not self.missing_edges

    def as_json_dict(self, config: dict, seed: int) -> dict:
        doc = {
            "kind": "pathways",
            "config": config,
            "seed": seed,
            "nodes": list(self.nodes),
            "edges": [
                {"source": a, "target": b, **params}
                for (a, b), params in sorted(self.edges.items())
            ],
            "missing_edges": [list(e) for e in self.missing_edges],
        }
        jsonschema.validate(doc, REPORT_SCHEMA)
        return doc

    def to_dot(self) -> str:
        lines = ["digraph transitions {"]
        for node in self.nodes:
            lines.append(f'  "{node}";')
        for (a, b), params in sorted(self.edges.items()):
            label = f"a={params['alpha']:g}, s={params['sigma']:g}"
            lines.append(f'  "{a}" -> "{b}" [label="{label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def find_pathways(
    cfg: ExperimentConfig,
    candidates,
    switch_noise: float = 1e-6,
    seeds=(0, 1, 2),
) -> TransitionGraph:
    """Search (alpha, sigma) candidates for transitions between all pattern pairs.

    Every candidate is first run from a random initial state to find which
    pattern it stabilizes; each stabilized end state becomes the prepared
    source for that pattern.  A transition attempt then jumps the coupling
    from the source's parameters to a candidate's, perturbing both layers by
    `switch_noise` at the jump (a prepared state can sit on a sync manifold
    to machine precision, where the competing pattern would never be seen),
    and records an edge when the post-jump verdict equals a different
    catalogued pattern.  Self transitions are excluded by definition.
    """
    candidates = [(float(a), float(s)) for a, s in candidates]
    catalogue = cfg.catalogue
    labels = [p.label for p in catalogue]
    t_prep = cfg.schedule.t_on if cfg.schedule.t_on > 0 else cfg.t_end / 2
    t_post = cfg.t_end - t_prep
    if t_post <= 0:
        raise ConfigError("pathway search needs t_end > t_on")

    def run_phase(alpha, sigma, state, t_end, transient):
        cs = CouplingStrengths(alpha=alpha, beta=cfg.coupling.beta, sigma=sigma)
        return simulate_duplex(
            cfg.duplex, cs, cfg.top_params, cfg.bottom_params, state,
            dt=cfg.dt, t_end=t_end, transient=transient, stride=cfg.stride,
        )

    # phase 1: prepare one source state per pattern the candidates stabilize
    prepared: dict = {}
    for seed in seeds:
        if set(prepared) == set(labels):
            break
        rng = np.random.default_rng(cfg.seed + 1000 * (seed + 1))
        n = cfg.duplex.n_nodes
        x0 = rng.uniform(-1.0, 1.0, size=(n, 3)) + np.array([0.0, 0.0, 3.0])
        y0 = rng.uniform(-1.0, 1.0, size=(n, 3)) + np.array([0.0, 0.0, 3.0])
        y0[:, 0] += 0.5 * np.arange(n)
        for alpha, sigma in candidates:
            try:
                traj = run_phase(alpha, sigma, DuplexState(x0, y0),
                                 t_prep, min(cfg.transient, t_prep / 2))
            except DivergenceError:
                continue
            verdict = detect_pattern(traj.y, catalogue, cfg.threshold,
                                     cfg.window_fraction)
            prepared.setdefault(verdict.label,
                                (DuplexState(traj.x[-1], traj.y[-1]), seed))

    # phase 2: jump every prepared source to every candidate
    edges: dict = {}
    for src, (state, seed) in sorted(prepared.items()):
        noise_rng = np.random.default_rng(cfg.seed + 31 * (seed + 1))
        for alpha, sigma in candidates:
            x2 = state.x + noise_rng.uniform(-switch_noise, switch_noise,
                                             size=state.x.shape)
            y2 = state.y + noise_rng.uniform(-switch_noise, switch_noise,
                                             size=state.y.shape)
            try:
                traj = run_phase(alpha, sigma, DuplexState(x2, y2), t_post, 0.0)
            except DivergenceError:
                continue
            verdict = detect_pattern(traj.y, catalogue, cfg.threshold,
                                     cfg.window_fraction)
            dst = verdict.label
            if dst != src:
                edges.setdefault((src, dst), {"alpha": alpha, "sigma": sigma,
                                              "seed": seed})
    return TransitionGraph(nodes=tuple(labels), edges=edges)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def emit_outputs(report, outdir, prefix: str = "run") -> dict:
    """Write the run's data files; returns the paths written.

    SwitchingReport: a time-series CSV (bottom states and per-pattern
    errors) and a JSON report.  TransitionGraph (passed as a (graph, config,
    seed) tuple): a DOT file and a JSON report.
    """
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        paths = {}
        if isinstance(report, SwitchingReport):
            n = report.y.shape[1]
            header = ["t"]
            for i in range(1, n + 1):
                header += [f"y{i}_v", f"y{i}_w", f"y{i}_z"]
            labels = sorted(report.errors)
            header += [f"e_{lab}" for lab in labels]
            rows = []
            for k, t in enumerate(report.times):
                row = [float(t)]
                row += [float(v) for v in report.y[k].ravel()]
                row += [float(report.errors[lab][k]) for lab in labels]
                rows.append(row)
            csv_path = outdir / f"{prefix}_timeseries.csv"
            _write_csv(csv_path, header, rows)
            paths["csv"] = csv_path
            json_path = outdir / f"{prefix}_report.json"
            with open(json_path, "w") as fh:
                json.dump(report.as_json_dict(), fh, indent=2, sort_keys=True)
            paths["report"] = json_path
        else:
            graph, config, seed = report
            dot_path = outdir / f"{prefix}_pathways.dot"
            dot_path.write_text(graph.to_dot())
            paths["dot"] = dot_path
            json_path = outdir / f"{prefix}_pathways.json"
            with open(json_path, "w") as fh:
                json.dump(graph.as_json_dict(config, seed), fh, indent=2, sort_keys=True)
            paths["report"] = json_path
        return paths
    except OSError as err:
        raise OSError(f"failed writing outputs under {outdir}: {err}") from err


def write_stability_csv(smap, path) -> Path:
    """Columnar stability-map file: alpha,sigma,pattern,cluster,lambda,stable."""
    path = Path(path)
    rows = []
    for entry in smap.entries:
        for exp in entry["exponents"]:
            rows.append([
                entry["alpha"], entry["sigma"], entry["pattern"],
                exp["layer"] + ":" + "-".join(str(i) for i in exp["cluster"]),
                exp["lambda_effective"], str(entry["stable"]),
            ])
    _write_csv(path, ["alpha", "sigma", "pattern", "cluster", "lambda", "stable"], rows)
    return path
