"""Chern-connection geometry of a Hermitian metric, evaluated on jets.

Index conventions (array axis order follows the written index order):

* ``g[k, j] = g_{kbar j}``, ``ginv[j, k] = g^{j kbar}``
* ``A[k, p, q] = A^p_{kq} = g^{p lbar} d_k g_{lbar q}``; the conjugate
  connection ``Abar[k, r, p]`` acts on barred slots under ``nabla_{kbar}``
* ``T[k, j, m] = T_{kbar j m} = d_j g_{kbar m} - d_m g_{kbar j}`` and
  ``Tbar[k, j, m] = Tbar_{k jbar mbar}``, its pointwise conjugate
* ``R[k, j, p, q] = R_{kbar j pbar q}`` and ``Rup[k, j, p, q] = R_{kbar j}^p_q``

Tensor slots are typed by a string of ``u`` (lower unbarred), ``U`` (upper
unbarred), ``b`` (lower barred) and ``B`` (upper barred); covariant
derivatives prepend a ``u`` or ``b`` slot.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .forms import HermitianPointMetric
from .jets import Jet, JetSpace, jeinsum
from .report import ResidualReport

_LETTERS = "abcdefghijklmn"

# Tolerance tiers by number of derivatives of the metric involved.
TOL_ORDER2 = 1e-11
TOL_ORDER3 = 1e-9
TOL_ORDER4 = 1e-8


@dataclass
class MetricJet:
    """Jet of the metric matrix ``g_{kbar j}`` (batch axes index base points)."""

    g: Jet

    @property
    def m(self) -> int:
        return self.g.shape[-1]

    @property
    def order(self) -> int:
        return self.g.order

    @property
    def space(self) -> JetSpace:
        return self.g.space

    @classmethod
    def from_field(cls, field, z, order: int, space: JetSpace | None = None) -> "MetricJet":
        space = JetSpace.full(field.m) if space is None else space
        return cls(field.jet(z, order, space))

    @classmethod
    def constant(cls, g: np.ndarray, order: int, space: JetSpace) -> "MetricJet":
        return cls(Jet.constant(g, space, order, 2))

    def point_metric(self, *index) -> HermitianPointMetric:
        return HermitianPointMetric(self.g.value[index], check=False)

    def conformal(self, f: Jet) -> "MetricJet":
        """``exp(f) g`` for a real scalar jet ``f``."""
        return MetricJet(jeinsum(",ab->ab", f.exp(), self.g))


def covariant(X: Jet, types: str, A: Jet, Abar: Jet, bar: bool) -> Jet:
    """``nabla_k X`` (or ``nabla_{kbar} X``) with the derivative slot first."""
    if len(types) != X.rank:
        raise ValueError("slot types do not match tensor rank")
    if X.order < 1:
        raise ValueError("jet order exhausted")
    out = X.grad(bar=bar)
    conn = Abar if bar else A
    lower, upper = ("b", "B") if bar else ("u", "U")
    idx = _LETTERS[:X.rank]
    for i, t in enumerate(types):
        if t not in (lower, upper):
            continue
        src = idx[:i] + "y" + idx[i + 1:]
        if t == lower:
            term = jeinsum(f"zy{idx[i]},{src}->z{idx}", conn, X)
            out = out - term
        else:
            term = jeinsum(f"z{idx[i]}y,{src}->z{idx}", conn, X)
            out = out + term
    return out


@dataclass
class TorsionTensors:
    T: Jet
    Tbar: Jet
    T_trace: Jet
    Tbar_trace: Jet


@dataclass
class CurvatureTensors:
    R: Jet
    Rup: Jet
    A: Jet
    ric: Jet
    ric_tilde: Jet
    ric_prime: Jet
    ric_dprime: Jet
    scalar: Jet
    scalar_tilde: Jet
    scalar_prime: Jet
    scalar_dprime: Jet


class Geometry:
    """Lazily computed geometric tensors of a :class:`MetricJet`."""

    def __init__(self, mj: MetricJet):
        self.mj = mj
        self.g = mj.g

    # -- basic pieces --------------------------------------------------
    @cached_property
    def ginv(self) -> Jet:
        return self.g.inv()

    @cached_property
    def dg(self) -> Jet:
        # dg[k, l, q] = d_k g_{lbar q}
        return self.g.grad()

    @cached_property
    def dbg(self) -> Jet:
        # dbg[k, p, s] = d_{kbar} g_{pbar s}
        return self.g.grad(bar=True)

    @cached_property
    def A(self) -> Jet:
        return jeinsum("pl,klq->kpq", self.ginv, self.dg)

    @cached_property
    def Abar(self) -> Jet:
        return self.A.conj()

    def nabla(self, X: Jet, types: str) -> Jet:
        return covariant(X, types, self.A, self.Abar, bar=False)

    def nablabar(self, X: Jet, types: str) -> Jet:
        return covariant(X, types, self.A, self.Abar, bar=True)

    def raise_first(self, X: Jet) -> Jet:
        """Raise a leading lower-barred slot: ``X^p = g^{p sbar} X_{sbar}``."""
        idx = _LETTERS[:X.rank - 1]
        return jeinsum(f"ps,s{idx}->p{idx}", self.ginv, X)

    def trace(self, X: Jet) -> Jet:
        """``g^{j kbar} X_{kbar j}``."""
        return jeinsum("jk,kj->", self.ginv, X)

    # -- torsion -------------------------------------------------------
    @cached_property
    def T(self) -> Jet:
        return jeinsum("jkm->kjm", self.dg) - jeinsum("mkj->kjm", self.dg)

    @cached_property
    def Tbar(self) -> Jet:
        return self.T.conj()

    @cached_property
    def T_up(self) -> Jet:
        """``T^r_{jm} = g^{r sbar} T_{sbar j m}``."""
        return self.raise_first(self.T)

    @cached_property
    def Tbar_up(self) -> Jet:
        """``Tbar^{rbar}_{kbar mbar}``."""
        return self.T_up.conj()

    @cached_property
    def T_trace(self) -> Jet:
        return jeinsum("jk,kjm->m", self.ginv, self.T)

    @cached_property
    def Tbar_trace(self) -> Jet:
        return self.T_trace.conj()

    @cached_property
    def TTbar(self) -> Jet:
        """``(T Tbar)_{kbar j} = g^{s rbar} g^{m lbar} T_{rbar m j} Tbar_{s lbar kbar}``."""
        return jeinsum("sr,ml,rmj,slk->kj", self.ginv, self.ginv, self.T, self.Tbar)

    @cached_property
    def T_norm2(self) -> Jet:
        return self.trace(self.TTbar)

    def torsion(self) -> TorsionTensors:
        return TorsionTensors(self.T, self.Tbar, self.T_trace, self.Tbar_trace)

    # -- curvature -----------------------------------------------------
    @cached_property
    def R(self) -> Jet:
        ddg = self.dg.grad(bar=True)  # [kbar, j, pbar, q]
        quad = jeinsum("kps,sr,jrq->kjpq", self.dbg, self.ginv, self.dg)
        return quad - ddg

    @cached_property
    def Rup(self) -> Jet:
        return jeinsum("ps,kjsq->kjpq", self.ginv, self.R)

    @cached_property
    def ric(self) -> Jet:
        return jeinsum("kjpp->kj", self.Rup)

    @cached_property
    def ric_tilde(self) -> Jet:
        return jeinsum("ps,spkj->kj", self.ginv, self.R)

    @cached_property
    def ric_prime(self) -> Jet:
        return jeinsum("kppj->kj", self.Rup)

    @cached_property
    def ric_dprime(self) -> Jet:
        return jeinsum("ps,sjkp->kj", self.ginv, self.R)

    @cached_property
    def scalar(self) -> Jet:
        return self.trace(self.ric)

    def curvature(self) -> CurvatureTensors:
        return CurvatureTensors(
            self.R, self.Rup, self.A, self.ric, self.ric_tilde, self.ric_prime, self.ric_dprime,
            self.scalar, self.trace(self.ric_tilde), self.trace(self.ric_prime),
            self.trace(self.ric_dprime))

    # -- volume form norm ---------------------------------------------
    @cached_property
    def log_omega_norm(self) -> Jet:
        """``log ||Omega||`` with ``||Omega|| = det(g)^{-1/2}``."""
        return self.g.logdet() * (-0.5)

    @cached_property
    def omega_norm(self) -> Jet:
        return self.log_omega_norm.exp()

    # -- second-order forms ---------------------------------------------
    @cached_property
    def ddbar_omega(self) -> Jet:
        """Pair components ``(i ddbar omega)_{kbar j lbar m}``."""
        ddg = self.dg.grad(bar=True)  # ddg[l, j, k, m] = d_{lbar} d_j g_{kbar m}
        first = jeinsum("ljkm->kjlm", ddg) - jeinsum("lmkj->kjlm", ddg)
        second = jeinsum("kjlm->kjlm", ddg) - jeinsum("kmlj->kjlm", ddg)
        return first - second

    @cached_property
    def ddbar_from_curvature(self) -> Jet:
        """Four-term curvature sum plus the torsion product; equals :attr:`ddbar_omega`."""
        R = self.R
        four = (jeinsum("kjlm->kjlm", R) - jeinsum("kmlj->kjlm", R)
                + jeinsum("lmkj->kjlm", R) - jeinsum("ljkm->kjlm", R))
        tt = jeinsum("sr,rmj,skl->kjlm", self.ginv, self.T, self.Tbar)
        return four + tt


def rescale_balanced(mj: MetricJet, a: float = 1.0) -> MetricJet:
    """Conformal rescale ``exp(f) g`` of a Kähler jet making it conformally balanced.

    Chooses ``f = -a log||Omega|| / (m - 1 - a m / 2)`` so that
    ``||Omega||^a omega^{m-1}`` is a constant multiple of the closed form
    ``omega_K^{m-1}``.
    """
    m = mj.m
    denom = m - 1 - a * m / 2
    if denom == 0:
        raise ValueError("no conformal rescale exists for this exponent")
    geo = Geometry(mj)
    f = geo.log_omega_norm * (-a / denom)
    return mj.conformal(f)


# ---------------------------------------------------------------------------
# identity residuals
# ---------------------------------------------------------------------------

def balanced_residual(mj: MetricJet, a: float = 1.0, geo: Geometry | None = None) -> ResidualReport:
    """``T_q - d_q log ||Omega||^a``; zero exactly for conformally balanced jets."""
    geo = geo or Geometry(mj)
    dlog = geo.log_omega_norm.grad() * a
    rep = ResidualReport()
    rep.add("balanced", (geo.T_trace - dlog).value, TOL_ORDER2)
    return rep


def lemma5_residuals(mj: MetricJet, a: float = 1.0, geo: Geometry | None = None,
                     tol_balanced: float = 1e-9) -> ResidualReport:
    """Torsion/curvature relations that hold for conformally balanced metrics."""
    geo = geo or Geometry(mj)
    rep = ResidualReport()
    pre = balanced_residual(mj, a, geo)["balanced"]
    note = "" if pre < tol_balanced else f"precondition not met: balanced residual {pre:.2e}"
    R = geo.ric
    # (i) nabla_kbar T_j and nabla_j Tbar_kbar against a/2 Ric
    dT = geo.nablabar(geo.T_trace, "u")  # [k, j]
    dTb = geo.nabla(geo.Tbar_trace, "b")  # [j, k]
    rep.add("torsion_trace_derivative", (dT - R * (a / 2)).value, TOL_ORDER2, note)
    rep.add("torsion_trace_derivative_conj", (jeinsum("jk->kj", dTb) - R * (a / 2)).value, TOL_ORDER2, note)
    # (ii)
    c = 1 - a / 2
    rep.add("ricci_prime", (geo.ric_prime - R * c).value, TOL_ORDER2, note)
    rep.add("ricci_dprime", (geo.ric_dprime - R * c).value, TOL_ORDER2, note)
    # (iii) g^{m pbar} nabla_pbar T_{kbar j m}
    divT = jeinsum("mp,pkjm->kj", geo.ginv, geo.nablabar(geo.T, "buu"))
    rep.add("ricci_tilde", (geo.ric_tilde - R * c - divT).value, TOL_ORDER2, note)
    # (iv) scalars
    s = geo.scalar.value
    rep.add("scalar_tilde", (geo.trace(geo.ric_tilde).value - s), TOL_ORDER2, note)
    rep.add("scalar_prime", (geo.trace(geo.ric_prime).value - c * s), TOL_ORDER2, note)
    return rep


def ricci_scalar_residuals(mj: MetricJet, geo: Geometry | None = None) -> ResidualReport:
    """``R = R~`` and ``R' = R''``, valid for every Hermitian metric."""
    geo = geo or Geometry(mj)
    rep = ResidualReport()
    rep.add("R_minus_Rtilde", (geo.scalar - geo.trace(geo.ric_tilde)).value, TOL_ORDER2)
    rep.add("Rprime_minus_Rdprime", (geo.trace(geo.ric_prime) - geo.trace(geo.ric_dprime)).value, TOL_ORDER2)
    return rep


def commutation_residuals(mj: MetricJet, vector: Jet, scalar: Jet,
                          geo: Geometry | None = None) -> ResidualReport:
    """Metric compatibility, curvature and torsion commutators of the Chern connection.

    ``vector`` is a (1,0)-vector field jet and ``scalar`` a function jet.
    """
    geo = geo or Geometry(mj)
    rep = ResidualReport()
    rep.add("metric_compatible", geo.nabla(geo.g, "bu").value, TOL_ORDER2)
    rep.add("metric_compatible_bar", geo.nablabar(geo.g, "bu").value, TOL_ORDER2)
    # [nabla_j, nabla_kbar] V^p = R_{kbar j}^p_q V^q
    nb = geo.nablabar(vector, "U")
    jb = geo.nabla(nb, "bU")                  # [j, k, p]
    bj = geo.nablabar(geo.nabla(vector, "U"), "uU")  # [k, j, p]
    lhs = jeinsum("jkp->kjp", jb) - bj
    rhs = jeinsum("kjpq,q->kjp", geo.Rup, vector)
    rep.add("curvature_commutator", (lhs - rhs).value, TOL_ORDER3)
    # [nabla_j, nabla_k] f = -T^l_{jk} nabla_l f
    df = geo.nabla(scalar, "")
    ddf = geo.nabla(df, "u")                  # [j, k] = nabla_j nabla_k f
    comm = ddf - jeinsum("kj->jk", ddf)
    rep.add("torsion_commutator", (comm + jeinsum("ljk,l->jk", geo.T_up, df)).value, TOL_ORDER3)
    return rep


def bianchi_residuals(mj: MetricJet, geo: Geometry | None = None,
                      torsion_sign: float = 1.0) -> ResidualReport:
    """First and second Bianchi identities of the Chern connection with torsion.

    ``torsion_sign`` scales every torsion correction; 1 is the correct
    value and -1 is a deliberately broken variant for fault injection.
    """
    geo = geo or Geometry(mj)
    rep = ResidualReport()
    R, Rup = geo.R, geo.Rup
    s = torsion_sign
    nbT = geo.nablabar(geo.T, "buu")          # [l, k, j, m]
    res = jeinsum("lmkj->lmkj", R) - jeinsum("ljkm->lmkj", R) - jeinsum("lkjm->lmkj", nbT) * s
    rep.add("bianchi1", res.value, TOL_ORDER3)
    nTb = geo.nabla(geo.Tbar, "ubb")          # [m, j, k, l]
    res = jeinsum("lmkj->lmkj", R) - jeinsum("kmlj->lmkj", R) - jeinsum("mjkl->lmkj", nTb) * s
    rep.add("bianchi1_conj", res.value, TOL_ORDER3)

    nR = geo.nabla(Rup, "buUu")               # [m, k, j, p, q]
    res = nR - jeinsum("jkmpq->mkjpq", nR) - jeinsum("rjm,krpq->mkjpq", geo.T_up, Rup) * s
    rep.add("bianchi2", res.value, TOL_ORDER3)
    nRl = geo.nabla(R, "bubu")
    res = nRl - jeinsum("jkmpq->mkjpq", nRl) - jeinsum("rjm,krpq->mkjpq", geo.T_up, R) * s
    rep.add("bianchi2_lowered", res.value, TOL_ORDER3)
    nbR = geo.nablabar(Rup, "buUu")           # [mbar, k, j, p, q]
    res = nbR - jeinsum("kmjpq->mkjpq", nbR) - jeinsum("rkm,rjpq->mkjpq", geo.Tbar_up, Rup) * s
    rep.add("bianchi2_conj", res.value, TOL_ORDER3)
    nbRl = geo.nablabar(R, "bubu")
    res = nbRl - jeinsum("kmjpq->mkjpq", nbRl) - jeinsum("rkm,rjpq->mkjpq", geo.Tbar_up, R) * s
    rep.add("bianchi2_conj_lowered", res.value, TOL_ORDER3)
    return rep


def localomega_residual(mj: MetricJet, geo: Geometry | None = None) -> ResidualReport:
    """``i ddbar omega`` in components against its curvature/torsion expression."""
    geo = geo or Geometry(mj)
    rep = ResidualReport()
    rep.add("ddbar_omega_curvature_form", (geo.ddbar_omega - geo.ddbar_from_curvature).value, TOL_ORDER2)
    return rep


def ddbar_contraction_residual(mj: MetricJet, geo: Geometry | None = None) -> ResidualReport:
    """``g^{m lbar} (i ddbar omega)_{kbar j lbar m} = R~_{kbar j} - (T Tbar)_{kbar j}`` (balanced jets)."""
    geo = geo or Geometry(mj)
    rep = ResidualReport()
    lhs = jeinsum("ml,kjlm->kj", geo.ginv, geo.ddbar_omega)
    rep.add("ddbar_omega_contraction", (lhs - geo.ric_tilde + geo.TTbar).value, TOL_ORDER3)
    return rep


def laplacian(geo: Geometry, X: Jet, types: str) -> Jet:
    """Rough Laplacian ``g^{j kbar} nabla_j nabla_{kbar} X``."""
    inner = geo.nablabar(X, types)
    outer = geo.nabla(inner, "b" + types)
    idx = _LETTERS[:X.rank]
    return jeinsum(f"jk,jk{idx}->{idx}", geo.ginv, outer)


def delta_torsion_residual(mj: MetricJet, geo: Geometry | None = None) -> ResidualReport:
    """Laplacian of the torsion against derivatives of R~ and torsion-curvature products."""
    geo = geo or Geometry(mj)
    rep = ResidualReport()
    lap = laplacian(geo, geo.T, "buu")                       # [p, j, q]
    nRt = geo.nabla(geo.ric_tilde, "bu")                     # [q, p, j]
    Rl_up = geo.raise_first(geo.R)                           # R^l_{r pbar j}
    rhs = (jeinsum("qpj->pjq", nRt) - jeinsum("jpq->pjq", nRt)
           + jeinsum("rql,lrpj->pjq", geo.T_up, Rl_up)
           - jeinsum("rjl,lrpq->pjq", geo.T_up, Rl_up))
    rep.add("laplacian_torsion", (lap - rhs).value, TOL_ORDER4)
    return rep


def adjoint_operators(Phi: Jet, mj: MetricJet, geo: Geometry | None = None) -> tuple[Jet, Jet]:
    """``(dbar^dagger Phi)_q`` and ``(d^dagger Phi)_{qbar}`` of a (1,1)-form with components ``Phi[p, q]``."""
    geo = geo or Geometry(mj)
    nP = geo.nabla(Phi, "bu")                                  # [k, p, q]
    dbar_dag = jeinsum("kp,kpq->q", geo.ginv, nP) - jeinsum("kp,k,pq->q", geo.ginv, geo.T_trace, Phi)
    nbP = geo.nablabar(Phi, "bu")                              # [j, q, p]
    d_dag = -(jeinsum("pj,jqp->q", geo.ginv, nbP) - jeinsum("pj,j,qp->q", geo.ginv, geo.Tbar_trace, Phi))
    return dbar_dag, d_dag


def adjoint_residual(mj: MetricJet, geo: Geometry | None = None) -> ResidualReport:
    """Adjoints applied to ``omega`` reproduce ``(-i T_q, i Tbar_qbar)``."""
    geo = geo or Geometry(mj)
    a, b = adjoint_operators(geo.g * 1j, mj, geo)
    rep = ResidualReport()
    rep.add("adjoint_dbar_omega", (a + geo.T_trace * 1j).value, 1e-10)
    rep.add("adjoint_d_omega", (b - geo.Tbar_trace * 1j).value, 1e-10)
    return rep
