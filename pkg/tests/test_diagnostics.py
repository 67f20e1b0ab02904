import numpy as np
import pytest

from anomalyflow.diagnostics import (CSV_COLUMNS, DiagnosticSample, blowup_reason,
                                     closedness_residual, doubling_monitor, evolution_consistency,
                                     norm2, sample, shi_monitor, stationarity_check, time_order)
from anomalyflow.flow import FlowConfig, FlowState, build_initial_balanced, cfl_dt, step
from anomalyflow.forms import FormPQ, to_pair
from anomalyflow.geometry import Geometry
from anomalyflow.grid import Grid


def _sample(t=0.0, **kw):
    base = dict(t=t, g_min_eig=1.0, g_max_eig=1.0, omega_norm_min=1.0, T2_max=0.1, Rm_max=1.0,
                DT_max=0.5, DRm_max=2.0, D2T_max=1.0, balanced_residual=0.0, R_min=0.0,
                R_max=0.0, f_max=1.0)
    base.update(kw)
    return DiagnosticSample(**base)


def test_frame_norm_matches_index_contraction(hermitian_jet):
    geo = Geometry(hermitian_jet)
    g = hermitian_jet.g.value
    np.testing.assert_allclose(norm2(geo.T.value, "buu", g), geo.T_norm2.value.real, rtol=1e-12)


def test_flat_sample_is_trivial():
    state, _ = build_initial_balanced(FlowConfig(N=8, potential="0"))
    s = sample(state)
    assert len(s.row()) == len(CSV_COLUMNS)
    assert s.omega_norm_min == 1.0 and s.T2_max < 1e-25 and s.Rm_max < 1e-12


def test_blowup_reason_order():
    assert blowup_reason(_sample(), 1e-3, 1e8) is None
    assert blowup_reason(_sample(omega_norm_min=1e-4), 1e-3, 1e8) == "blowup_norm_floor"
    assert blowup_reason(_sample(f_max=1e9), 1e-3, 1e8) == "blowup_f_max"
    assert blowup_reason(_sample(omega_norm_min=1e-4, f_max=1e9), 1e-3, 1e8) == "blowup_norm_floor"


def test_shi_monitor_window_and_limits():
    samples = [_sample(t) for t in (0.0, 0.1, 0.2, 0.4)]
    rep = shi_monitor(samples)
    assert rep.A == pytest.approx(1.6)
    assert rep.window == pytest.approx(1 / 1.6)
    assert rep.valid
    assert rep.rm_sup[1] == pytest.approx(np.sqrt(0.4) * 2.0)
    rep = shi_monitor(samples, A=10.0)
    assert rep.rm_sup[1] == pytest.approx(np.sqrt(0.1) * 2.0)  # window ends at t = 0.1
    assert not shi_monitor(samples, A=1.0).valid
    with pytest.raises(ValueError):
        shi_monitor(samples, ks=(2,))


def test_doubling_monitor():
    flat = [_sample(t, f_max=1.0) for t in np.linspace(0, 1, 5)]
    assert not doubling_monitor(flat).doubled
    rising = [_sample(t, f_max=1 + 10 * t) for t in np.linspace(0, 1, 5)]
    rep = doubling_monitor(rising)
    assert rep.doubled and rep.event_time == pytest.approx(0.5)


def test_time_order_slope():
    steps = np.array([1e-2, 5e-3, 2.5e-3])
    assert time_order(3 * steps ** 2, steps) == pytest.approx(2.0)


def test_evolution_consistency_input_checks():
    state, _ = build_initial_balanced(FlowConfig(N=8))
    with pytest.raises(ValueError):
        evolution_consistency([state, state], "metric")
    with pytest.raises(ValueError):
        evolution_consistency([state] * 3, "volume")
    b = step(state, 1e-4)
    c = step(b, 2e-4)
    with pytest.raises(ValueError):
        evolution_consistency([state, b, c], "metric")


def test_metric_evolution_consistency_small_grid():
    state, _ = build_initial_balanced(FlowConfig(N=8))
    dt = cfl_dt(state, 0.1)
    b = step(state, dt)
    c = step(b, dt)
    rep = evolution_consistency([state, b, c], "metric")
    assert rep["metric_rel"] < 1e-3


def test_stationarity_check_skips_moving_state():
    state, _ = build_initial_balanced(FlowConfig(N=8))
    assert "stationarity_skipped" in stationarity_check(state, 1e-12)
    flat, _ = build_initial_balanced(FlowConfig(N=8, potential="0"))
    rep = stationarity_check(flat)
    assert rep["T2"] < 1e-20


def test_closedness_residual():
    grid = Grid(8)
    g = np.broadcast_to(np.eye(3, dtype=complex), grid.shape + (3, 3)).copy()
    # dz^2 ^ dz^3 ^ dzbar^2 ^ dzbar^3 in pair layout
    pair = to_pair(FormPQ.from_components(3, 2, 2, {((1, 2), (1, 2)): 1.0}))
    const = np.broadcast_to(pair, grid.shape + pair.shape).copy()
    assert closedness_residual(FlowState(grid, g, Phi=const)) < 1e-12
    wavy = const * np.sin(2 * np.pi * grid.coords["x1"])[..., None, None, None, None]
    assert closedness_residual(FlowState(grid, g, Phi=wavy)) > 1e-2
    # a coefficient depending on z2 only is annihilated by the dz^2 factor
    along = const * np.sin(2 * np.pi * grid.coords["x2"])[..., None, None, None, None]
    assert closedness_residual(FlowState(grid, g, Phi=along)) < 1e-12
