"""Verification suites: oracle equivalences and identity residuals on exact jets.

Every suite returns a :class:`ResidualReport`; :func:`run_verification`
merges them.  With ``trials = 0`` only the deterministic flat, Kähler and
Hermitian cases run.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .forms import (FormPQ, HermitianPointMetric, hodge_star_eps, inner, norm_Omega,
                    norm_Omega_oracle, omega_form, omega_power, to_pair, trace_p, wedge)
from .geometry import (TOL_ORDER2, TOL_ORDER3, TOL_ORDER4, Geometry, MetricJet, adjoint_residual,
                       balanced_residual, bianchi_residuals, commutation_residuals,
                       ddbar_contraction_residual, delta_torsion_residual, lemma5_residuals,
                       localomega_residual, rescale_balanced, ricci_scalar_residuals)
from .jets import Jet, JetSpace, jeinsum
from .report import ResidualReport
from .roots import hodge_star_closed, root_constants, solve_root, solve_root_star
from .trig import (kahler_metric_field, random_hermitian_field, random_kahler_field,
                   random_points, real_field)
from .velocity import (curvature_bracket, curvature_flow_rhs, curvature_time_derivative,
                       metric_velocity, psi_form, torsion_flow_rhs, torsion_time_derivative,
                       trace_rm_wedge_rm, velocity_via_root)

FAULTS = ("torsion-sign",)
POINTS_PER_FIELD = 10


def _max_into(rep: ResidualReport, sub: ResidualReport) -> None:
    """Keep the worst value of each named residual."""
    for name, r in sub.entries.items():
        if name not in rep.entries or r.value > rep.entries[name].value or not np.isfinite(r.value):
            rep.entries[name] = r


# ---------------------------------------------------------------------------
# forms and roots
# ---------------------------------------------------------------------------

def constants_suite() -> ResidualReport:
    rep = ResidualReport()
    worst = 0.0
    for m in range(2, 9):
        c = root_constants(m)
        worst = max(worst, abs(float(c.alpha_exact + m * c.beta_exact - Fraction(math.factorial(m - 1)) ** 2)))
    rep.add("root_constant_identity", worst, 1e-15)
    c3 = root_constants(3)
    rep.add("root_constants_m3", abs(c3.alpha_m - 1) + abs(c3.beta_m - 1), 1e-15)
    return rep


def anchors_suite() -> ResidualReport:
    """Star and norm anchor values on flat metrics."""
    rep = ResidualReport()
    star, power, norm = 0.0, 0.0, 0.0
    for m in (2, 3, 4):
        g = HermitianPointMetric.flat(m)
        w, wm1 = omega_form(g), omega_power(g, m - 1)
        star = max(star, (hodge_star_eps(w, g) - wm1 / math.factorial(m - 1)).max_abs(),
                   (hodge_star_eps(wm1, g) - w * math.factorial(m - 1)).max_abs(),
                   (hodge_star_closed(wm1, g) - w * math.factorial(m - 1)).max_abs())
        power = max(power, abs(inner(wm1, wm1, g) - math.factorial(m) * math.factorial(m - 1)),
                    abs(trace_p(wm1, g) - math.factorial(m) * math.factorial(m - 1)))
    for g, expect in ((np.eye(3), 1.0), (2 * np.eye(3), 2 ** -1.5), (np.exp(0.3) * np.eye(3), np.exp(-0.45))):
        pm = HermitianPointMetric(g.astype(complex))
        norm = max(norm, abs(norm_Omega(pm) - expect), abs(norm_Omega_oracle(pm) - expect))
    rep.add("star_anchor", star, 1e-12)
    rep.add("omega_power_norm", power, 1e-12)
    rep.add("norm_Omega_anchor", norm, 1e-12)
    return rep


def forms_suite(rng: np.random.Generator, trials: int) -> ResidualReport:
    """Root solver, star routes and isometry on random forms and metrics."""
    rep = ResidualReport()
    vals = {k: 0.0 for k in ("root_wedge_back", "root_trace", "root_star_route", "star_closed_vs_oracle",
                             "star_isometry", "wedge_graded")}
    for m in (2, 3, 4):
        for _ in range(trials):
            g = HermitianPointMetric.random(m, rng)
            Phi = FormPQ.random(m, m - 1, m - 1, rng)
            phi = solve_root(Phi, g)
            back = wedge(phi, omega_power(g, m - 2)) - Phi
            vals["root_wedge_back"] = max(vals["root_wedge_back"], back.max_abs() / max(1.0, Phi.max_abs()))
            vals["root_trace"] = max(vals["root_trace"],
                                     abs(trace_p(phi, g) - trace_p(Phi, g) / math.factorial(m - 1) ** 2))
            vals["root_star_route"] = max(vals["root_star_route"], (solve_root_star(Phi, g) - phi).max_abs())
            vals["star_closed_vs_oracle"] = max(vals["star_closed_vs_oracle"],
                                                (hodge_star_closed(Phi, g) - hodge_star_eps(Phi, g)).max_abs())
            # isometry on a random bidegree
            p, q = rng.integers(0, m + 1, size=2)
            a, b = FormPQ.random(m, p, q, rng), FormPQ.random(m, p, q, rng)
            vol = omega_power(g, m) / math.factorial(m)
            lhs = wedge(a, hodge_star_eps(b.conj(), g))
            vals["star_isometry"] = max(vals["star_isometry"],
                                        (lhs - vol * inner(a, b, g)).max_abs())
            p2, q2 = rng.integers(0, m - p + 1), rng.integers(0, m - q + 1)
            c = FormPQ.random(m, p2, q2, rng)
            sign = (-1) ** ((p + q) * (p2 + q2))
            vals["wedge_graded"] = max(vals["wedge_graded"], (wedge(a, c) - wedge(c, a) * sign).max_abs())
    tols = {"root_wedge_back": 1e-9, "root_trace": 1e-11, "root_star_route": 1e-10,
            "star_closed_vs_oracle": 1e-10, "star_isometry": 1e-12, "wedge_graded": 1e-12}
    for k, v in vals.items():
        rep.add(k, v, tols[k])
    return rep


# ---------------------------------------------------------------------------
# geometry on exact jets
# ---------------------------------------------------------------------------

def _deterministic_kahler():
    kx = np.array([[1, 0, 0], [0, 1, 1], [1, -1, 0]])
    ky = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    amp = np.array([0.5, 0.3 - 0.2j, 0.25j]) / np.pi ** 2
    return kahler_metric_field(real_field(kx, ky, amp), 0.3)


def hermitian_suite(mj: MetricJet, rng: np.random.Generator, inject: str | None = None) -> ResidualReport:
    """Identities valid for every Hermitian metric."""
    geo = Geometry(mj)
    space = mj.space
    rep = ResidualReport()
    rep.merge(ricci_scalar_residuals(mj, geo))
    n = mj.g.batch_shape[0]
    vec = Jet(rng.normal(size=(mj.g.c.shape[0], n, 3)) * 0.3 + 0j, mj.order, space, 1)
    scal = Jet(rng.normal(size=(mj.g.c.shape[0], n)) * 0.3 + 0j, mj.order, space, 0)
    rep.merge(commutation_residuals(mj, vec, scal, geo))
    rep.merge(bianchi_residuals(mj, geo, torsion_sign=-1.0 if inject == "torsion-sign" else 1.0))
    rep.merge(localomega_residual(mj, geo))
    rep.merge(delta_torsion_residual(mj, geo))
    rep.merge(adjoint_residual(mj, geo))
    rep.merge(bracket_residual(geo))
    return rep


def bracket_residual(geo: Geometry) -> ResidualReport:
    """Four-term curvature bracket against the wedge-product oracle ``Tr(Rm ^ Rm)``."""
    pair = curvature_bracket(geo).value
    Rup = geo.Rup.value
    worst = 0.0
    for i in range(Rup.shape[0]):
        oracle = to_pair(trace_rm_wedge_rm(Rup[i]))
        worst = max(worst, float(np.abs(pair[i] - oracle).max() / max(1.0, np.abs(oracle).max())))
    rep = ResidualReport()
    rep.add("curvature_bracket_vs_wedge", worst, TOL_ORDER3)
    return rep


def balanced_suite(mj_kahler: MetricJet) -> ResidualReport:
    """Identities for the balanced rescale of a Kähler jet, plus flow-equation checks."""
    mb = rescale_balanced(mj_kahler, 1.0)
    geo = Geometry(mb)
    rep = ResidualReport()
    kgeo = Geometry(mj_kahler)
    rep.add("kahler_torsion", kgeo.T.value, TOL_ORDER2)
    rep.add("kahler_velocity", (metric_velocity(kgeo) + _kahler_velocity(kgeo)).value, TOL_ORDER2)
    rep.merge(balanced_residual(mb, 1.0, geo))
    rep.merge(lemma5_residuals(mb, 1.0, geo))
    rep.merge(ddbar_contraction_residual(mb, geo))
    _, contracted = psi_form(geo)
    rep.add("psi_contraction", (contracted - geo.TTbar + geo.ric_tilde).value, TOL_ORDER3)
    vel = metric_velocity(geo)
    worst = max(float(np.abs(velocity_via_root(geo, (i,)) - vel.value[i]).max())
                for i in range(vel.value.shape[0]))
    rep.add("velocity_root_route", worst, 1e-10)
    if mb.order >= 4:
        scale = max(1.0, float(np.abs(curvature_time_derivative(geo, vel).value).max()))
        rep.add("curvature_evolution",
                (curvature_flow_rhs(geo) - curvature_time_derivative(geo, vel)).value / scale, TOL_ORDER4)
        scale = max(1.0, float(np.abs(torsion_time_derivative(geo, vel).value).max()))
        rep.add("torsion_evolution",
                (torsion_flow_rhs(geo) - torsion_time_derivative(geo, vel)).value / scale, TOL_ORDER4)
    return rep


def _kahler_velocity(geo: Geometry) -> Jet:
    """``R~ / (2 ||Omega||)``, minus the velocity of a Kähler metric."""
    return jeinsum(",pq->pq", geo.omega_norm.power(-1.0), geo.ric_tilde) * 0.5


def run_verification(seed: int = 0, trials: int = 10, inject: str | None = None) -> ResidualReport:
    """All suites; ``trials`` random jets and forms per family."""
    if inject is not None and inject not in FAULTS:
        raise ValueError(f"unknown fault {inject!r}")
    rng = np.random.default_rng(seed)
    rep = ResidualReport()
    rep.merge(constants_suite())
    rep.merge(anchors_suite())
    space = JetSpace.full(3)

    # deterministic: flat, a fixed Kähler family and a fixed Hermitian field
    z0 = np.array([[0.1 + 0.2j, 0.3 + 0.05j, 0.7 + 0.4j], [0.45 + 0.9j, 0.2 + 0.6j, 0.05 + 0.33j]])
    flat = MetricJet.constant(np.eye(3, dtype=complex)[None].repeat(2, 0), 4, space)
    det = ResidualReport()
    _max_into(det, hermitian_suite(flat, rng, inject))
    kahler = MetricJet.from_field(_deterministic_kahler(), z0, 4, space)
    _max_into(det, hermitian_suite(kahler, rng, inject))
    _max_into(det, balanced_suite(kahler))
    # a fixed non-Kähler field so torsion terms are exercised without random trials
    herm = MetricJet.from_field(random_hermitian_field(np.random.default_rng(7)), z0, 4, space)
    _max_into(det, hermitian_suite(herm, rng, inject))
    flat_geo = Geometry(flat)
    det.add("flat_velocity", metric_velocity(flat_geo).value, 1e-14)
    rand = ResidualReport()
    if trials > 0:
        rep.merge(forms_suite(rng, trials))
        left = trials
        while left > 0:
            n = min(POINTS_PER_FIELD, left)
            z = random_points(rng, n)
            field = random_hermitian_field(rng)
            _max_into(rand, hermitian_suite(MetricJet.from_field(field, z, 4, space), rng, inject))
            kf, _ = random_kahler_field(rng, eps=0.3)
            _max_into(rand, balanced_suite(MetricJet.from_field(kf, z, 4, space)))
            left -= n
    for name, r in det.entries.items():
        if name in rand.entries and rand.entries[name].value > r.value:
            r = rand.entries[name]
        rep.entries[name] = r
    for name, r in rand.entries.items():
        rep.entries.setdefault(name, r)
    return rep
