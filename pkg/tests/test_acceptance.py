"""Acceptance criteria 1-8.

Each test prints one ``PASS``/``FAIL`` line (also repeated in the pytest
terminal summary).  Run standalone with ``python tests/test_acceptance.py``.
The flow criteria share two cached baseline runs (N=16 and N=32).
"""

from __future__ import annotations

import math
import time
from dataclasses import replace
from fractions import Fraction
from functools import lru_cache

import numpy as np

from anomalyflow.diagnostics import (DiagnosticSample, blowup_reason, doubling_monitor,
                                     evolution_consistency, sample, shi_monitor, time_order)
from anomalyflow.flow import (FlowConfig, build_initial_balanced, cfl_dt, exact_initial_jet,
                              grid_jet, grid_velocity, run_flow, step)
from anomalyflow.forms import (FormPQ, HermitianPointMetric, hodge_star_eps, inner, omega_form,
                               omega_power, to_pair, trace_p, wedge)
from anomalyflow.geometry import (Geometry, MetricJet, adjoint_residual, bianchi_residuals,
                                  ddbar_contraction_residual, delta_torsion_residual,
                                  lemma5_residuals, rescale_balanced, ricci_scalar_residuals)
from anomalyflow.jets import JetSpace
from anomalyflow.roots import hodge_star_closed, root_constants, solve_root
from anomalyflow.trig import random_hermitian_field, random_kahler_field, random_points
from anomalyflow.velocity import (curvature_bracket, metric_velocity, norm_time_derivative,
                                  psi_form, trace_rm_wedge_rm, velocity_via_root)

LINES: dict[int, str] = {}
SEED = 20261015


def _report(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n}: {detail}"
    LINES[n] = line
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# shared flow runs
# ---------------------------------------------------------------------------

BASELINE_T_END = 0.175


@lru_cache(maxsize=None)
def baseline(N: int):
    """eps=0.05 default-potential run to ``BASELINE_T_END`` with full diagnostics.

    Output cadence is chosen so both resolutions sample at nearly the same
    times (dt scales with h^2).
    """
    cadence = max(1, round(100 * (N / 32) ** 2))
    config = FlowConfig(N=N, eps=0.05, t_end=BASELINE_T_END, output_every=cadence)
    start = time.perf_counter()
    result = run_flow(config, sampler=sample)
    return result, time.perf_counter() - start


# ---------------------------------------------------------------------------
# 1-3: forms and roots
# ---------------------------------------------------------------------------

def test_criterion_1_root_constants():
    start = time.perf_counter()
    consts = [root_constants(m) for m in range(2, 9)]
    elapsed = time.perf_counter() - start
    exact = all(c.alpha_exact + c.m * c.beta_exact == Fraction(math.factorial(c.m - 1)) ** 2
                for c in consts)
    c3 = root_constants(3)
    ok = exact and (c3.alpha_exact, c3.beta_exact) == (1, 1) and elapsed < 1e-3
    _report(1, ok, f"alpha+m*beta=(m-1)!^2 exact for m=2..8: {exact}; "
                   f"(alpha_3, beta_3)=({c3.alpha_exact}, {c3.beta_exact}); {elapsed * 1e3:.3f} ms")


def test_criterion_2_root_solver():
    rng = np.random.default_rng(SEED + 2)
    cases = [(m, HermitianPointMetric.random(m, rng), FormPQ.random(m, m - 1, m - 1, rng))
             for m in (2, 3, 4) for _ in range(100)]
    wedge_back, trace_err = 0.0, 0.0
    start = time.perf_counter()
    for m, g, Phi in cases:
        phi = solve_root(Phi, g)
        wedge_back = max(wedge_back, (wedge(phi, omega_power(g, m - 2)) - Phi).max_abs())
        trace_err = max(trace_err, abs(trace_p(phi, g) - trace_p(Phi, g) / math.factorial(m - 1) ** 2))
    elapsed = time.perf_counter() - start
    ok = wedge_back < 1e-9 and trace_err < 1e-11 and elapsed < 2.0
    _report(2, ok, f"300 forms: wedge-back {wedge_back:.2e} (<1e-9), trace {trace_err:.2e} (<1e-11), "
                   f"{elapsed:.2f} s (<2 s)")


def test_criterion_3_hodge_star():
    rng = np.random.default_rng(SEED + 3)
    dev = 0.0
    for m in (2, 3, 4):
        for _ in range(200):
            g = HermitianPointMetric.random(m, rng)
            Phi = FormPQ.random(m, m - 1, m - 1, rng)
            dev = max(dev, (hodge_star_closed(Phi, g) - hodge_star_eps(Phi, g)).max_abs())
    anchor = 0.0
    for m in (2, 3, 4):
        g = HermitianPointMetric.flat(m)
        w, wm1 = omega_form(g), omega_power(g, m - 1)
        f = math.factorial
        anchor = max(anchor,
                     (hodge_star_eps(w, g) - wm1 / f(m - 1)).max_abs(),
                     (hodge_star_eps(wm1, g) - w * f(m - 1)).max_abs(),
                     (hodge_star_closed(wm1, g) - w * f(m - 1)).max_abs(),
                     abs(inner(wm1, wm1, g) - f(m) * f(m - 1)))
    ok = dev < 1e-10 and anchor < 1e-12
    _report(3, ok, f"600 forms closed vs permutation star {dev:.2e} (<1e-10); anchors {anchor:.2e} (<1e-12)")


# ---------------------------------------------------------------------------
# 4-5: identities on exact jets
# ---------------------------------------------------------------------------

def _worst(reports, names):
    return max(r[n] for r in reports for n in names if n in r)


def test_criterion_4_identity_suites():
    rng = np.random.default_rng(SEED + 4)
    space = JetSpace.full(3)
    herm, bal = [], []
    for _ in range(100):
        z = random_points(rng, 1)
        mj = MetricJet.from_field(random_hermitian_field(rng), z, 4, space)
        geo = Geometry(mj)
        for rep in (bianchi_residuals(mj, geo), ricci_scalar_residuals(mj, geo),
                    delta_torsion_residual(mj, geo), adjoint_residual(mj, geo)):
            herm.append(rep)
        kf, _ = random_kahler_field(rng, eps=0.3)
        mb = rescale_balanced(MetricJet.from_field(kf, z, 4, space), 1.0)
        gb = Geometry(mb)
        bal.append(lemma5_residuals(mb, 1.0, gb))
        bal.append(ddbar_contraction_residual(mb, gb))
    checks = {
        "bianchi": (_worst(herm, ["bianchi1", "bianchi1_conj", "bianchi2", "bianchi2_lowered",
                                  "bianchi2_conj", "bianchi2_conj_lowered"]), 1e-9),
        "R=R~,R'=R''": (_worst(herm, ["R_minus_Rtilde", "Rprime_minus_Rdprime"]), 1e-11),
        "balanced relations": (_worst(bal, ["torsion_trace_derivative", "torsion_trace_derivative_conj",
                                            "ricci_prime", "ricci_dprime", "ricci_tilde",
                                            "scalar_tilde", "scalar_prime"]), 1e-9),
        "ddbar-omega contraction": (_worst(bal, ["ddbar_omega_contraction"]), 1e-9),
        "Laplacian of torsion": (_worst(herm, ["laplacian_torsion"]), 1e-8),
        "adjoints on omega": (_worst(herm, ["adjoint_dbar_omega", "adjoint_d_omega"]), 1e-10),
    }
    ok = all(v < tol for v, tol in checks.values())
    _report(4, ok, "100 jets; " + ", ".join(f"{k} {v:.1e}<{tol:.0e}" for k, (v, tol) in checks.items()))


def test_criterion_5_bracket_normalization():
    rng = np.random.default_rng(SEED + 5)
    space = JetSpace.full(3)
    worst = 0.0
    for _ in range(50):
        mj = MetricJet.from_field(random_hermitian_field(rng), random_points(rng, 1), 2, space)
        geo = Geometry(mj)
        pair = curvature_bracket(geo).value[0]
        oracle = to_pair(trace_rm_wedge_rm(geo.Rup.value[0]))
        worst = max(worst, float(np.abs(pair - oracle).max() / max(1.0, np.abs(oracle).max())))
    _report(5, worst < 1e-9, f"50 jets, unit-weight bracket vs Tr(Rm^Rm) {worst:.2e} (<1e-9)")


# ---------------------------------------------------------------------------
# 6-8: flow
# ---------------------------------------------------------------------------

# neutral sample for synthetic trajectories
_stub = DiagnosticSample(t=0.0, g_min_eig=1.0, g_max_eig=1.0, omega_norm_min=1.0, T2_max=0.0,
                         Rm_max=0.0, DT_max=0.0, DRm_max=0.0, D2T_max=0.0, balanced_residual=0.0,
                         R_min=0.0, R_max=0.0, f_max=0.0)


def _norm(g):
    return np.prod(np.linalg.eigvalsh(g), axis=-1) ** -0.5


def test_criterion_6_flow_sanity():
    # (a) flat start
    flat_cfg = FlowConfig(N=32, potential="0", t_end=0.005, output_every=10)
    flat = run_flow(flat_cfg, sampler=lambda s: replace(_stub, t=s.t))
    flat_drift = float(np.abs(flat.state.g - np.eye(3)).max())
    flat_vel = float(np.abs(grid_velocity(flat.state)).max())
    flat_ok = flat.outcome == "completed" and flat_drift < 1e-12 and flat_vel < 1e-12

    # (b) balanced residual under refinement, at matching sample times
    r32, wall = baseline(32)
    r16, _ = baseline(16)
    res32 = np.array([s.balanced_residual for s in r32.samples])
    res16 = np.array([s.balanced_residual for s in r16.samples])
    n = min(len(res16), len(res32))
    orders = np.log2(res16[:n] / res32[:n])
    drift_ok = orders.min() >= 3.5 and res32.max() <= res32[0] * (1 + 1e-6)
    run_ok = r32.outcome == "completed" and 500 <= r32.steps <= 2000 and wall < 60

    # (c) d/dt ||Omega|| against (R - |T|^2)/4, centered along the trajectory
    s0, kahler = build_initial_balanced(FlowConfig(N=32))
    dt = cfl_dt(s0, 0.1)
    steps, errs = [dt, dt / 2, dt / 4], []
    for d in steps:
        s1 = step(s0, d)
        s2 = step(s1, d)
        rhs = norm_time_derivative(Geometry(grid_jet(s1, 2))).value.real
        errs.append(float(np.abs((_norm(s2.g) - _norm(s0.g)) / (2 * d) - rhs).max()))
    slope = time_order(errs, steps)
    slope_ok = 1.8 <= slope <= 2.2

    # (d) closed-form velocity vs the root of the (2,2) equation
    z = s0.grid.points.reshape(-1, 3)
    geo = Geometry(exact_initial_jet(kahler, z, 2, s0.grid.space))
    vel = metric_velocity(geo).value
    equiv = max(float(np.abs(velocity_via_root(geo, (i,)) - vel[i]).max()) for i in range(len(z)))
    # on the evolved finite-difference state the root route reproduces the general contraction
    geo_t = Geometry(grid_jet(r32.state, 2))
    _, contracted = psi_form(geo_t)
    vel_t = contracted.value / (2 * geo_t.omega_norm.value[..., None, None])
    idx = [(i, j) for i in range(0, 32, 4) for j in range(0, 32, 4)]
    equiv_t = max(float(np.abs(velocity_via_root(geo_t, ij) - vel_t[ij]).max()) for ij in idx)
    equiv_ok = equiv < 1e-10 and equiv_t < 1e-10

    ok = flat_ok and drift_ok and run_ok and slope_ok and equiv_ok
    _report(6, ok,
            f"flat drift {flat_drift:.1e}, |v| {flat_vel:.1e} (<1e-12); "
            f"N=32 run {r32.steps} steps {wall:.1f} s (<60 s); "
            f"balanced residual order 16->32 min {orders.min():.2f} (>=3.5), max {res32.max():.1e} "
            f"non-increasing; dt slope {slope:.3f} in [1.8,2.2]; "
            f"root vs closed form {equiv:.1e}, evolved {equiv_t:.1e} (<1e-10)")


def test_criterion_7_evolution_consistency():
    rel = {}
    for N in (32, 64):
        s0, _ = build_initial_balanced(FlowConfig(N=N))
        dt = cfl_dt(s0, 0.1)
        s1 = step(s0, dt)
        s2 = step(s1, dt)
        for which in ("curvature", "torsion"):
            rel[which, N] = evolution_consistency([s0, s1, s2], which)[f"{which}_rel"]
    ok = all(rel[w, 32] < 5e-2 and rel[w, 64] < rel[w, 32] for w in ("curvature", "torsion"))
    _report(7, ok, "relative residual curvature {:.1e} -> {:.1e}, torsion {:.1e} -> {:.1e} "
                   "(N=32 -> 64; <5e-2 and decreasing)".format(
                       rel["curvature", 32], rel["curvature", 64], rel["torsion", 32], rel["torsion", 64]))


def test_criterion_8_monitors():
    r32, _ = baseline(32)
    r16, _ = baseline(16)
    shi32, shi16 = shi_monitor(r32.samples), shi_monitor(r16.samples)
    a, b = shi32.rm_sup[1], shi16.rm_sup[1]
    shi_ok = (np.isfinite(a) and np.isfinite(b) and a > 0 and shi32.valid and shi16.valid
              and abs(a - b) <= 0.2 * max(a, b))

    doubling = doubling_monitor(r32.samples)

    cfg = FlowConfig()
    fires_baseline = [blowup_reason(s, cfg.omega_floor, cfg.f_max) for s in r32.samples + r16.samples]
    # synthetic trajectory: ||Omega|| = exp(-50 t) crosses the 1e-3 floor at t = ln(1000)/50
    crossing = math.log(1000) / 50
    synthetic = [replace(_stub, t=t, omega_norm_min=math.exp(-50 * t)) for t in np.linspace(0, 0.3, 61)]
    fired = [blowup_reason(s, cfg.omega_floor, cfg.f_max) for s in synthetic]
    first = next(i for i, f in enumerate(fired) if f)
    detect_ok = (all(f is None for f in fires_baseline)
                 and fired[first] == "blowup_norm_floor"
                 and synthetic[first].t >= crossing > synthetic[first - 1].t)
    # large but admissible values never trigger
    quiet = [replace(_stub, t=t, omega_norm_min=1.01e-3, f_max=0.99e8) for t in np.linspace(0, 1, 11)]
    detect_ok &= all(blowup_reason(s, cfg.omega_floor, cfg.f_max) is None for s in quiet)
    # the integrator honours the detector: a flat run fed the synthetic samples stops at the crossing
    run = run_flow(FlowConfig(N=8, potential="0", t_end=0.3, output_every=1),
                   sampler=lambda s: replace(_stub, t=s.t, omega_norm_min=math.exp(-50 * s.t)))
    detect_ok &= run.outcome == "blowup_norm_floor" and crossing <= run.state.t < crossing + 0.01

    ok = shi_ok and not doubling.doubled and detect_ok
    _report(8, ok, f"Shi sup t^1/2|DRm| N=32 {a:.3f}, N=16 {b:.3f} (within 20%); "
                   f"doubling on baseline: {doubling.doubled} (max f ratio {doubling.max_ratio:.2f}); "
                   f"detector fires only on synthetic floor crossing (run stopped at t={run.state.t:.4f}, "
                   f"crossing {crossing:.4f})")


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_criterion_")):
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
