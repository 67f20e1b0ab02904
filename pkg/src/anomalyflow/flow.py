"""Time integration of the flow on a periodic reduced-ansatz grid.

The default dynamics is the ``alpha' = 0`` system, whose metric velocity at
every grid point is ``(T Tbar - R~) / (2 ||Omega||)``.  Initial data are
conformal rescalings of Kähler metrics, which are conformally balanced.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .geometry import Geometry, MetricJet, rescale_balanced
from .grid import Grid
from .jets import Jet
from .trig import (TrigField, kahler_metric_field, parse_potential,
                   real_field, trig_field_from_samples)
from .velocity import metric_velocity, velocity_values


DEFAULT_POTENTIAL = "(cos(2*pi*x1) + 0.5*sin(2*pi*(x1 + x2))) / pi**2"
OUTCOMES = ("completed", "blowup_norm_floor", "blowup_f_max", "step_failure")


@dataclass
class FlowConfig:
    """Run parameters; see the README for the key=value grammar."""

    N: int = 32
    active_dims: tuple[str, ...] = ("x1", "x2")
    eps: float = 0.05
    potential: str = DEFAULT_POTENTIAL
    dt_policy: str = "cfl"
    cfl_c: float = 0.1
    dt: float | None = None
    t_end: float = 0.2
    alpha_prime: float = 0.0
    omega_floor: float = 1e-3
    f_max: float = 1e8
    output_every: int = 100
    seed: int = 0

    def validate(self) -> None:
        if self.N < 4 or self.N % 2:
            raise ValueError("N must be even and at least 4")
        if self.dt_policy not in ("cfl", "fixed"):
            raise ValueError("dt_policy must be 'cfl' or 'fixed'")
        if not 0 < self.cfl_c <= 1:
            raise ValueError("cfl_c must lie in (0, 1]")
        if self.dt_policy == "fixed" and not (self.dt and self.dt > 0):
            raise ValueError("dt_policy=fixed needs a positive dt")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.output_every < 1:
            raise ValueError("output_every must be at least 1")
        if self.omega_floor < 0 or self.f_max <= 0:
            raise ValueError("thresholds must be positive")
        Grid(self.N, tuple(self.active_dims))

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["active_dims"] = ",".join(self.active_dims)
        return out


@dataclass
class FlowState:
    """Metric field ``g[..., kbar, j]`` on a grid at time ``t``."""

    grid: Grid
    g: np.ndarray
    t: float = 0.0
    alpha_prime: float = 0.0
    Phi: np.ndarray | None = None
    positivity_floor: float = 0.0

    def with_metric(self, g: np.ndarray, t: float) -> "FlowState":
        return replace(self, g=g, t=t)


class StepFailure(RuntimeError):
    """Raised when a stage leaves the admissible set; ``outcome`` names the reason."""

    def __init__(self, outcome: str, message: str):
        super().__init__(message)
        self.outcome = outcome


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

def potential_field(config: FlowConfig) -> TrigField:
    """Exact trig modes of the configured potential on the active coordinates."""
    grid = Grid(config.N, tuple(config.active_dims))
    if config.potential.strip() == "random":
        return _random_reduced_potential(grid, config.seed)
    fn = parse_potential(config.potential, grid.m)
    values = fn(grid.coords)
    axes = [(int(n[1:]) - 1, n[0]) for n in grid.active]
    return trig_field_from_samples(values.astype(complex), axes, grid.m)


def _random_reduced_potential(grid: Grid, seed: int, n_modes: int = 3) -> TrigField:
    rng = np.random.default_rng(seed)
    kx = np.zeros((n_modes, grid.m), dtype=int)
    ky = np.zeros((n_modes, grid.m), dtype=int)
    for n in range(n_modes):
        while not (kx[n].any() or ky[n].any()):
            for name in grid.active:
                j = int(name[1:]) - 1
                (kx if name[0] == "x" else ky)[n, j] = rng.integers(-1, 2)
    amp = (rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)) / np.sqrt(2 * n_modes)
    return real_field(kx, ky, amp / np.pi ** 2)


def balanced_metric_values(kahler: TrigField, z: np.ndarray) -> np.ndarray:
    """``||Omega||_K^{-2} g_K`` at points ``z``."""
    gk = kahler.evaluate(z)
    det = np.linalg.det(gk).real
    return gk * det[..., None, None]


def build_initial_balanced(config: FlowConfig) -> tuple[FlowState, TrigField]:
    """Conformally balanced metric ``||Omega||_K^{-2} omega_K`` from a Kähler potential.

    Returns the grid state and the Kähler metric field, whose exact jets
    give the analytic reference for the initial data.

    Raises
    ------
    ValueError
        If the Kähler metric fails to be positive at some grid point.
    """
    config.validate()
    grid = Grid(config.N, tuple(config.active_dims))
    kahler = kahler_metric_field(potential_field(config), config.eps)
    gk = kahler.evaluate(grid.points)
    eig = np.linalg.eigvalsh(gk)[..., 0]
    bad = np.argmin(eig)
    if eig.flat[bad] <= 0:
        idx = np.unravel_index(bad, grid.shape)
        where = ", ".join(f"{n}={grid.coords[n][idx]:.4f}" for n in grid.active)
        raise ValueError(f"Kähler metric not positive at grid point {tuple(int(i) for i in idx)} "
                         f"({where}); min eigenvalue {eig.flat[bad]:.3e}")
    g = balanced_metric_values(kahler, grid.points)
    g = 0.5 * (g + np.conj(np.swapaxes(g, -1, -2)))
    floor = 1e-6 * np.linalg.eigvalsh(g)[..., 0].min()
    state = FlowState(grid, g, 0.0, config.alpha_prime, None, floor)
    return state, kahler


def exact_initial_jet(kahler: TrigField, z: np.ndarray, order: int, space) -> MetricJet:
    """Exact jet of the balanced initial metric at points ``z`` (shape ``(n, m)``)."""
    return rescale_balanced(MetricJet.from_field(kahler, z, order, space), 1.0)


# ---------------------------------------------------------------------------
# velocity and stepping
# ---------------------------------------------------------------------------

def grid_jet(state: FlowState, order: int) -> MetricJet:
    """Finite-difference metric jets at every grid point."""
    return MetricJet(state.grid.jet(state.g, order))


def grid_velocity(state: FlowState, g: np.ndarray | None = None) -> np.ndarray:
    """Metric velocity at every grid point."""
    g = state.g if g is None else g
    if not state.alpha_prime:
        return velocity_values(g, *state.grid.metric_derivatives(g))
    jet = state.grid.jet(g, 2)
    geo = Geometry(MetricJet(jet))
    Phi = None
    if state.Phi is not None:
        Phi = Jet(state.Phi[None], 0, jet.space, 4)
    return metric_velocity(geo, state.alpha_prime, Phi).value


def _hermitian(g: np.ndarray) -> np.ndarray:
    return 0.5 * (g + np.conj(np.swapaxes(g, -1, -2)))


def check_health(state: FlowState, g: np.ndarray, omega_floor: float) -> None:
    """Raise :class:`StepFailure` on loss of positivity or on the norm floor."""
    if not np.all(np.isfinite(g)):
        raise StepFailure("step_failure", "non-finite metric entries")
    eigs = np.linalg.eigvalsh(g)
    if eigs[..., 0].min() <= state.positivity_floor:
        raise StepFailure("step_failure", f"metric lost positivity (min eigenvalue {eigs[..., 0].min():.3e})")
    norm = np.prod(eigs, axis=-1) ** -0.5
    if norm.min() < omega_floor:
        raise StepFailure("blowup_norm_floor", f"||Omega|| fell to {norm.min():.3e}")


def step(state: FlowState, dt: float, omega_floor: float = 0.0) -> FlowState:
    """One classical RK4 step; each stage is re-symmetrized and health-checked."""
    g0 = state.g
    k1 = grid_velocity(state, g0)
    g1 = _hermitian(g0 + 0.5 * dt * k1)
    check_health(state, g1, omega_floor)
    k2 = grid_velocity(state, g1)
    g2 = _hermitian(g0 + 0.5 * dt * k2)
    check_health(state, g2, omega_floor)
    k3 = grid_velocity(state, g2)
    g3 = _hermitian(g0 + dt * k3)
    check_health(state, g3, omega_floor)
    k4 = grid_velocity(state, g3)
    g_new = _hermitian(g0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
    check_health(state, g_new, omega_floor)
    return state.with_metric(g_new, state.t + dt)


def cfl_dt(state: FlowState, c: float) -> float:
    """``c h^2 min(2 ||Omega||)``."""
    norm = np.prod(np.linalg.eigvalsh(state.g), axis=-1) ** -0.5
    return c * state.grid.h ** 2 * 2 * norm.min()


@dataclass
class FlowResult:
    """Outcome of :func:`run_flow`."""

    outcome: str
    state: FlowState
    samples: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    steps: int = 0
    message: str = ""
    log: list = field(default_factory=list)


def run_flow(config: FlowConfig, state: FlowState | None = None, keep_states: bool = False,
             sampler=None) -> FlowResult:
    """Integrate to ``t_end`` or until a stopping criterion fires.

    ``sampler(state)`` is called every ``output_every`` steps and at the end
    (default: :func:`anomalyflow.diagnostics.sample`).  The ``f_max`` criterion
    is evaluated on those samples; positivity and the norm floor are checked
    at every stage.
    """
    from .diagnostics import blowup_reason, sample as default_sampler

    sampler = default_sampler if sampler is None else sampler
    config.validate()
    if state is None:
        state, _ = build_initial_balanced(config)
    result = FlowResult("completed", state)
    if state.Phi is not None:
        from .diagnostics import closedness_residual
        res = closedness_residual(state)
        if res > 1e-6:
            result.log.append(f"warning: source form not closed (residual {res:.3e})")

    def record(s: FlowState) -> str | None:
        smp = sampler(s)
        result.samples.append(smp)
        if keep_states:
            result.snapshots.append(s)
        return blowup_reason(smp, config.omega_floor, config.f_max)

    reason = record(state)
    n = 0
    while reason is None and state.t < config.t_end * (1 - 1e-12):
        dt = config.dt if config.dt_policy == "fixed" else cfl_dt(state, config.cfl_c)
        dt = min(dt, config.t_end - state.t)
        try:
            state = step(state, dt, config.omega_floor)
        except StepFailure as exc:
            result.outcome, result.message = exc.outcome, str(exc)
            result.log.append(f"t={state.t:.6g}: {exc}")
            break
        n += 1
        if n % config.output_every == 0 or state.t >= config.t_end * (1 - 1e-12):
            reason = record(state)
    if reason is not None:
        result.outcome = reason
        result.message = f"stopping criterion {reason} at t={state.t:.6g}"
        result.log.append(result.message)
    result.state, result.steps = state, n
    return result
