"""Node dynamics, coupling functions, the full duplex ODE and RK4 integration.

Node state dimension is 3 (Hindmarsh-Rose membrane potential, recovery and
adaptation variables).  The generic integrator accepts any right-hand side;
`simulate_duplex` is the compiled fast path used by experiments.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .topology import CouplingStrengths, DuplexTopology, laplacian
from .symmetry import Partition

__all__ = [
    "HRParams",
    "DuplexState",
    "Trajectory",
    "DivergenceError",
    "DEFAULT_D_MATRIX",
    "hr_field",
    "hr_jacobian",
    "intra_coupling",
    "full_rhs",
    "integrate",
    "simulate_duplex",
    "pattern_initial_condition",
    "SigmaSchedule",
]

GOLDEN_T = -0.5 * (1.0 + math.sqrt(5.0))

# Inter-layer coupling acts on the second (recovery) component only.
DEFAULT_D_MATRIX = np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]])


class DivergenceError(RuntimeError):
    def __init__(self, time):
        self.time = time
        super().__init__(f"non-finite state encountered at t={time:g}")


@dataclass(frozen=True)
class HRParams:
    """Hindmarsh-Rose parameters; I and r select the dynamical regime."""

    I: float
    r: float
    a: float = 1.0
    b: float = 3.0
    c: float = 1.0
    d: float = 5.0
    s: float = 4.0
    t: float = GOLDEN_T

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d, self.s, self.t, self.I, self.r])


@dataclass
class DuplexState:
    """Stacked node states: x (N, 3) top layer, y (N, 3) bottom layer."""

    x: np.ndarray
    y: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape != self.y.shape or self.x.ndim != 2 or self.x.shape[1] != 3:
            raise ValueError(f"expected matching (N, 3) blocks, got {self.x.shape}, {self.y.shape}")


@dataclass
class Trajectory:
    """Recorded snapshots at a uniform stride."""

    times: np.ndarray
    x: np.ndarray  # (T, N, 3)
    y: np.ndarray  # (T, N, 3)

    def __post_init__(self):
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")


def hr_field(p: HRParams, v: np.ndarray) -> np.ndarray:
    """Isolated Hindmarsh-Rose derivative for a (3,) state or an (m, 3) block."""
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    vv = np.atleast_2d(v)
    x, w, z = vv[:, 0], vv[:, 1], vv[:, 2]
    out = np.empty_like(vv)
    out[:, 0] = w - p.a * x**3 + p.b * x**2 - z + p.I
    out[:, 1] = p.c - p.d * x**2 - w
    out[:, 2] = p.r * (p.s * (x - p.t) - z)
    return out[0] if single else out


def hr_jacobian(p: HRParams, v: np.ndarray) -> np.ndarray:
    """3x3 Jacobian of the isolated field at state v."""
    x = float(np.asarray(v).ravel()[0])
    return np.array(
        [
            [-3.0 * p.a * x**2 + 2.0 * p.b * x, 1.0, -1.0],
            [-2.0 * p.d * x, -1.0, 0.0],
            [p.r * p.s, 0.0, -p.r],
        ]
    )


def intra_coupling(v: np.ndarray) -> np.ndarray:
    """First-component intra-layer coupling output, shared by both layers."""
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    if v.ndim == 1:
        out[0] = v[0]
    else:
        out[:, 0] = v[:, 0]
    return out


def full_rhs(
    duplex: DuplexTopology,
    cs: CouplingStrengths,
    top_params: HRParams,
    bottom_params: HRParams,
    d_matrix: np.ndarray,
    state: DuplexState,
    sigma: float | None = None,
) -> DuplexState:
    """Derivative of the full 2N-node duplex system."""
    n = duplex.n_nodes
    if state.x.shape[0] != n:
        raise ValueError(f"state has {state.x.shape[0]} nodes, duplex has {n}")
    sig = cs.sigma if sigma is None else sigma
    a = duplex.top.adjacency
    lap = laplacian(duplex.bottom)
    kap = duplex.inter.kappa.astype(float)

    dx = hr_field(top_params, state.x) + cs.alpha * (a @ intra_coupling(state.x))
    dy = (
        hr_field(bottom_params, state.y)
        - cs.beta * (lap @ intra_coupling(state.y))
        + sig * kap[:, None] * ((state.x - state.y) @ np.asarray(d_matrix).T)
    )
    return DuplexState(dx, dy, state.time)


@dataclass(frozen=True)
class SigmaSchedule:
    """Step turn-on of the inter-layer coupling at time t_on (0 before).

    The switch acts at step granularity: a whole integration step uses the
    sigma in force at the step's start time, including its internal stages.
    """

    t_on: float = 0.0

    def __post_init__(self):
        if self.t_on < 0:
            raise ValueError("t_on must be >= 0")

    def switch_step(self, dt: float) -> int:
        """Step index of the turn-on, snapped to the step grid with a warning."""
        step = self.t_on / dt
        snapped = int(round(step))
        if abs(step - snapped) > 1e-9:
            warnings.warn(
                f"sigma turn-on t={self.t_on:g} is not a multiple of dt={dt:g}; "
                f"snapped to t={snapped * dt:g}",
                stacklevel=2,
            )
        return snapped

    def effective(self, t: float, sigma: float) -> float:
        return sigma if t >= self.t_on else 0.0


def _plan_steps(dt: float, t_end: float, transient: float, stride: int):
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not (t_end > transient >= 0):
        raise ValueError(f"need t_end > transient >= 0, got t_end={t_end}, transient={transient}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    n_steps = int(round(t_end / dt))
    record_start = int(round(transient / dt))
    if record_start >= n_steps:
        raise ValueError("transient leaves no trajectory to record")
    return n_steps, record_start


def integrate(rhs, initial: DuplexState, dt: float, t_end: float,
              transient: float = 0.0, stride: int = 1) -> Trajectory:
    """Classic fixed-step RK4 on an arbitrary duplex right-hand side.

    `rhs(state) -> DuplexState` gives the derivative.  States are recorded
    every `stride` steps once t >= transient.  Raises DivergenceError when a
    non-finite state appears.
    """
    n_steps, record_start = _plan_steps(dt, t_end, transient, stride)
    x = initial.x.copy()
    y = initial.y.copy()
    times, xs, ys = [], [], []

    def deriv(t, x, y):
        d = rhs(DuplexState(x, y, t))
        return d.x, d.y

    for step in range(n_steps + 1):
        t = step * dt
        if step >= record_start and (step - record_start) % stride == 0:
            times.append(t)
            xs.append(x.copy())
            ys.append(y.copy())
        if step == n_steps:
            break
        k1x, k1y = deriv(t, x, y)
        k2x, k2y = deriv(t + dt / 2, x + dt / 2 * k1x, y + dt / 2 * k1y)
        k3x, k3y = deriv(t + dt / 2, x + dt / 2 * k2x, y + dt / 2 * k2y)
        k4x, k4y = deriv(t + dt, x + dt * k3x, y + dt * k3y)
        x = x + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        y = y + dt / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DivergenceError((step + 1) * dt)

    return Trajectory(np.array(times), np.array(xs), np.array(ys))


def simulate_duplex(
    duplex: DuplexTopology,
    cs: CouplingStrengths,
    top_params: HRParams,
    bottom_params: HRParams,
    initial: DuplexState,
    dt: float,
    t_end: float,
    transient: float = 0.0,
    stride: int = 1,
    d_matrix: np.ndarray | None = None,
    schedule: SigmaSchedule | None = None,
) -> Trajectory:
    """Compiled RK4 run of the full duplex system with optional sigma turn-on."""
    from . import _kernels

    n_steps, record_start = _plan_steps(dt, t_end, transient, stride)
    switch_step = 0 if schedule is None else schedule.switch_step(dt)
    d = DEFAULT_D_MATRIX if d_matrix is None else np.asarray(d_matrix, dtype=float)

    times, xs, ys, diverged_at = _kernels.integrate_duplex(
        duplex.top.adjacency.astype(float),
        laplacian(duplex.bottom).astype(float),
        duplex.inter.kappa.astype(float),
        top_params.as_array(),
        bottom_params.as_array(),
        d,
        cs.alpha,
        cs.beta,
        cs.sigma,
        switch_step,
        initial.x.astype(float),
        initial.y.astype(float),
        dt,
        n_steps,
        record_start,
        stride,
    )
    if diverged_at >= 0:
        raise DivergenceError(diverged_at * dt)
    return Trajectory(times, xs, ys)


def pattern_initial_condition(
    pattern: Partition,
    base: np.ndarray,
    epsilon: float,
    seed: int,
) -> np.ndarray:
    """Per-node states near a pattern: cluster base plus uniform [-eps, eps] noise.

    `base` holds one 3-vector per cluster, in the pattern's canonical
    cluster order.
    """
    base = np.asarray(base, dtype=float)
    if base.shape != (pattern.num_clusters, 3):
        raise ValueError(
            f"need one base 3-vector per cluster: expected {(pattern.num_clusters, 3)}, "
            f"got {base.shape}"
        )
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    rng = np.random.default_rng(seed)
    out = np.empty((pattern.n, 3))
    for l, cluster in enumerate(pattern.clusters):
        for i in cluster:
            out[i - 1] = base[l] + rng.uniform(-epsilon, epsilon, size=3)
    return out


def spread_cluster_bases(num_clusters: int, seed: int, anchor: np.ndarray | None = None,
                         spacing: float = 0.5) -> np.ndarray:
    """Distinct per-cluster base states, separated in the first coordinate."""
    rng = np.random.default_rng(seed)
    if anchor is None:
        anchor = np.array([-1.0, 0.0, 3.0])
    out = np.tile(np.asarray(anchor, dtype=float), (num_clusters, 1))
    out[:, 0] += spacing * np.arange(num_clusters)
    out += rng.uniform(-0.1, 0.1, size=out.shape)
    return out
