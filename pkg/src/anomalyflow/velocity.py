"""Right-hand side of the flow and the evolution equations it implies.

The flow evolves ``||Omega|| omega^2`` by the (2,2)-form

    Psi = i ddbar omega - alpha' (Tr(Rm ^ Rm) - Phi),

and the metric velocity is ``Psi_{pbar q} / (2 ||Omega||)`` with
``Psi_{pbar q} = g^{s rbar} Psi_{pbar s rbar q}``.
"""

from __future__ import annotations

import numpy as np

from .forms import FormPQ, HermitianPointMetric, from_pair, norm_Omega, omega_form, to_pair, wedge
from .geometry import Geometry, MetricJet, laplacian
from .jets import Jet, jeinsum
from .roots import solve_root


def curvature_bracket(geo: Geometry) -> Jet:
    """Signed four-term antisymmetrization of ``R_{kbar m}^a_b R_{lbar j}^b_a``.

    Returned in pair layout ``[k, m, l, j]``; with unit weight it equals the
    pair components of ``Tr(Rm ^ Rm)``.
    """
    X = jeinsum("kmab,ljba->kmlj", geo.Rup, geo.Rup)
    return (X - jeinsum("kjlm->kmlj", X) - jeinsum("lmkj->kmlj", X)
            + jeinsum("ljkm->kmlj", X))


def trace_rm_wedge_rm(Rup: np.ndarray) -> FormPQ:
    """``Tr(Rm ^ Rm)`` at one point from the exterior product of curvature 2-forms."""
    m = Rup.shape[0]
    total = FormPQ.zero(m, 2, 2)
    for a in range(m):
        for b in range(m):
            first = FormPQ(m, 1, 1, np.ascontiguousarray(Rup[:, :, a, b].T))
            second = FormPQ(m, 1, 1, np.ascontiguousarray(Rup[:, :, b, a].T))
            total = total + wedge(first, second)
    return total


def psi_form(geo: Geometry, alpha_prime: float = 0.0, Phi: Jet | None = None) -> tuple[Jet, Jet]:
    """Pair components ``Psi_{kbar m lbar j}`` and the contraction ``Psi_{pbar q}``."""
    psi = geo.ddbar_omega
    if alpha_prime:
        source = curvature_bracket(geo)
        if Phi is not None:
            source = source - Phi
        psi = psi - source * alpha_prime
    contracted = jeinsum("sr,psrq->pq", geo.ginv, psi)
    return psi, contracted


def psi_closed(geo: Geometry, alpha_prime: float = 0.0, Phi: Jet | None = None) -> Jet:
    """``-R~ + T Tbar - alpha' g^{m lbar}(bracket - Phi)_{kbar m lbar j}`` (balanced metrics)."""
    out = geo.TTbar - geo.ric_tilde
    if alpha_prime:
        source = curvature_bracket(geo)
        if Phi is not None:
            source = source - Phi
        out = out - jeinsum("ml,kmlj->kj", geo.ginv, source) * alpha_prime
    return out


def metric_velocity(geo: Geometry, alpha_prime: float = 0.0, Phi: Jet | None = None) -> Jet:
    """``d g_{pbar q} / dt`` from the closed-form expression."""
    psi = psi_closed(geo, alpha_prime, Phi)
    return jeinsum(",pq->pq", geo.omega_norm.power(-1.0), psi) * 0.5


def velocity_via_root(geo: Geometry, index=()) -> np.ndarray:
    """Metric velocity at one point recovered from the (2,2)-form equation.

    Solves ``chi ^ omega = Psi / ||Omega||`` and uses ``d omega/dt = (chi + Tr(chi) omega) / 2``.
    """
    g = HermitianPointMetric(geo.g.value[index], check=False)
    psi = from_pair(geo.ddbar_omega.value[index], g.m, 2) / norm_Omega(g)
    chi = solve_root(psi, g)
    tr = np.einsum("jk,kj->", g.g_inv, chi.data.T) / 1j
    omega_dot = (chi + omega_form(g) * tr) * 0.5
    return omega_dot.data.T / 1j


# ---------------------------------------------------------------------------
# value-level kernel used by the time stepper
# ---------------------------------------------------------------------------

def velocity_values(g: np.ndarray, dg: np.ndarray, dbg: np.ndarray, ddg: np.ndarray,
                    with_norm: bool = False):
    """Metric velocity from pointwise derivative arrays (alpha' = 0).

    Shapes: ``g (..., m, m)``, ``dg[..., k, l, q] = d_k g_{lbar q}``,
    ``dbg[..., k, p, s] = d_{kbar} g_{pbar s}``,
    ``ddg[..., k, j, p, q] = d_{kbar} d_j g_{pbar q}``.
    """
    ginv = np.linalg.inv(g)
    m = g.shape[-1]
    bs = g.shape[:-2]
    # R~_{kbar j} = g^{ps} d_sbar g_{kbar a} g^{ar} d_p g_{rbar j} - g^{ps} d_sbar d_p g_{kbar j}
    X = (ginv @ dbg.reshape(bs + (m, m * m))).reshape(bs + (m, m, m))      # [p, k, a]
    Y = ginv[..., None, :, :] @ dg                                          # [p, a, j]
    ric_tilde = np.sum(X @ Y, axis=-3)
    gT = np.swapaxes(ginv, -1, -2).reshape(bs + (1, m * m))
    ric_tilde = ric_tilde - (gT @ ddg.reshape(bs + (m * m, m * m))).reshape(bs + (m, m))
    T = np.swapaxes(dg, -3, -2) - np.einsum("...mkj->...kjm", dg)
    Tbar = np.conj(T)
    U = (ginv @ T.reshape(bs + (m, m * m))).reshape(bs + (m * m, m))         # [(s, mm), j]
    V = (ginv[..., None, :, :] @ Tbar).reshape(bs + (m * m, m))             # [(s, mm), k]
    TT = np.swapaxes(V, -1, -2) @ U
    norm = np.linalg.det(g).real ** -0.5
    vel = (TT - ric_tilde) / (2 * norm[..., None, None])
    if with_norm:
        return vel, norm, ric_tilde, TT, ginv
    return vel


def jet_velocity_values(g: Jet) -> np.ndarray:
    """Value-level velocity from a metric jet of order >= 2."""
    dg = g.grad()
    return velocity_values(g.value, dg.value, g.grad(bar=True).value, dg.grad(bar=True).value)


# ---------------------------------------------------------------------------
# evolution of curvature, torsion and the volume-form norm
# ---------------------------------------------------------------------------

def _rhs_pieces(geo: Geometry):
    psi = psi_closed(geo)
    inv2n = geo.omega_norm.power(-1.0) * 0.5
    psi_up = geo.raise_first(psi)              # Psi^r_l
    return psi, inv2n, psi_up


def curvature_time_derivative(geo: Geometry, velocity: Jet | None = None) -> Jet:
    """``d/dt R_{kbar j}^r_l = -g^{r mubar} nabla_kbar nabla_j gdot_{mubar l}`` (any metric flow)."""
    gdot = metric_velocity(geo) if velocity is None else velocity
    second = geo.nablabar(geo.nabla(gdot, "bu"), "ubu")   # [k, j, mu, l]
    return -jeinsum("rm,kjml->kjrl", geo.ginv, second)


def curvature_flow_rhs(geo: Geometry) -> Jet:
    """Curvature evolution at alpha' = 0 in terms of Laplacian, torsion and curvature products."""
    psi, inv2n, psi_up = _rhs_pieces(geo)
    Rup, T_up, Tbar_up = geo.Rup, geo.T_up, geo.Tbar_up
    T_tr, Tb_tr = geo.T_trace, geo.Tbar_trace
    ginv = geo.ginv

    lap = laplacian(geo, Rup, "buUu")
    tt_term = -jeinsum("rm,kjml->kjrl", ginv,
                       geo.nablabar(geo.nabla(geo.TTbar, "bu"), "ubu"))
    d_psi = geo.nabla(psi_up, "Uu")             # [j, r, l]
    db_psi = geo.nablabar(psi_up, "Uu")         # [k, r, l]
    transport = (jeinsum("k,jrl->kjrl", Tb_tr, d_psi) + jeinsum("j,krl->kjrl", T_tr, db_psi)
                 + jeinsum("kj,rl->kjrl", geo.ric * 0.5 - jeinsum("j,k->kj", T_tr, Tb_tr), psi_up))
    # R^s_r^rho_lambda = g^{s kbar} R_{kbar r}^rho_lambda
    R_s = geo.raise_first(Rup)
    inner1 = jeinsum("rsj,srpl->jpl", T_up, R_s)  # T^r_{sj} R^s_r^p_l
    term1 = geo.nablabar(inner1, "uUu")          # [k, j, p, l]
    inner2 = jeinsum("rgk,rjpl->gkjpl", Tbar_up, Rup)  # Tbar^r_{gamma k} R_{rbar j}^p_l
    d2 = geo.nabla(inner2, "bbuUu")              # [a, g, k, j, p, l] = nabla_a (...)
    term2 = jeinsum("ag,agkjpl->kjpl", ginv, d2)
    ric_p_up = jeinsum("kv,vc->kc", geo.ric_prime, ginv)   # R'_kbar^kappabar
    term3 = -jeinsum("kc,cjpl->kjpl", ric_p_up, Rup)
    term4 = jeinsum("kscj,scpl->kjpl", Rup, R_s)
    R_low_up = jeinsum("ksmv,vc->ksmc", geo.R, ginv)      # R_{kbar s mubar}^{kappabar}
    R_rho_kappa = jeinsum("pm,ksmc->kspc", ginv, R_low_up)
    R_s_low = geo.raise_first(geo.R)                     # R^s_{j kappabar l}
    term5 = -jeinsum("kspc,sjcl->kjpl", R_rho_kappa, R_s_low)
    term6 = jeinsum("kscl,sjpc->kjpl", Rup, R_s)
    bracket = term1 + term2 + term3 + term4 + term5 + term6
    return jeinsum(",kjpl->kjpl", inv2n, lap + tt_term + transport + bracket)


def torsion_time_derivative(geo: Geometry, velocity: Jet | None = None) -> Jet:
    """``d/dt T_{pbar j q} = d_j gdot_{pbar q} - d_q gdot_{pbar j}``."""
    gdot = metric_velocity(geo) if velocity is None else velocity
    d = gdot.grad()                              # [j, p, q]
    return jeinsum("jpq->pjq", d) - jeinsum("qpj->pjq", d)


def torsion_flow_rhs(geo: Geometry) -> Jet:
    """Torsion evolution at alpha' = 0 with the Laplacian of the torsion extracted."""
    psi, inv2n, _ = _rhs_pieces(geo)
    T_up, T_tr = geo.T_up, geo.T_trace
    lap = laplacian(geo, geo.T, "buu")
    Rl_up = geo.raise_first(geo.R)               # R^l_{r pbar j}
    curv = (jeinsum("rql,lrpj->pjq", T_up, Rl_up) - jeinsum("rjl,lrpq->pjq", T_up, Rl_up))
    nTT = geo.nabla(geo.TTbar, "bu")             # [j, p, q]
    lower = (jeinsum("mjq,pm->pjq", T_up, psi) - jeinsum("j,pq->pjq", T_tr, psi)
             + jeinsum("q,pj->pjq", T_tr, psi) + jeinsum("jpq->pjq", nTT) - jeinsum("qpj->pjq", nTT))
    return jeinsum(",pjq->pjq", inv2n, lap - curv + lower)


def norm_time_derivative(geo: Geometry) -> Jet:
    """``(R - |T|^2) / 4``."""
    return (geo.scalar - geo.T_norm2) * 0.25
