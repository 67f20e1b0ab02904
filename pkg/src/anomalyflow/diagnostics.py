"""Monitored quantities along a flow: tensor norms, Shi-type and doubling
monitors, stopping conditions, and time-differenced evolution checks."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .flow import FlowState, grid_jet, grid_velocity
from .geometry import Geometry
from .jets import jeinsum
from .report import ResidualReport
from .velocity import curvature_flow_rhs, norm_time_derivative, torsion_flow_rhs

CSV_COLUMNS = ("t", "g_min_eig", "omega_norm_min", "T2_max", "Rm_max", "DT_max", "DRm_max",
               "D2T_max", "balanced_residual", "R_min", "R_max", "f_max")


def frame_components(X: np.ndarray, types: str, g: np.ndarray) -> np.ndarray:
    """Components of ``X`` in a unitary frame of ``g`` (batch axes leading).

    ``types`` has one letter per tensor axis: ``u``/``b`` for lower
    unbarred/barred slots, ``U``/``B`` for upper ones.
    """
    P = np.conj(np.swapaxes(np.linalg.cholesky(g), -1, -2))   # g = P^H P
    Q = np.linalg.inv(P)
    mats = {"u": Q, "b": np.conj(Q), "U": np.swapaxes(P, -1, -2), "B": np.swapaxes(np.conj(P), -1, -2)}
    nb = g.ndim - 2
    out = X
    for ax, t in enumerate(types):
        # contract tensor axis nb+ax with the first index of the frame matrix
        out = np.moveaxis(_contract(out, mats[t], nb + ax, nb), nb, nb + ax)
    return out


def _contract(X, M, axis, nb):
    # moves `axis` to position nb, contracts it with M[..., i, a] and leaves `a` at nb
    Xm = np.moveaxis(X, axis, -1)                      # (..., rest, i)
    batch = X.shape[:nb]
    rest = Xm.shape[nb:-1]
    Xf = Xm.reshape(batch + (-1, Xm.shape[-1]))        # (..., R, i)
    Y = Xf @ M                                         # (..., R, a)
    Y = Y.reshape(batch + rest + (M.shape[-1],))
    return np.moveaxis(Y, -1, nb)


def norm2(X: np.ndarray, types: str, g: np.ndarray) -> np.ndarray:
    """Pointwise squared norm ``|X|^2_g``."""
    F = frame_components(X, types, g)
    axes = tuple(range(g.ndim - 2, F.ndim))
    return np.sum(np.abs(F) ** 2, axis=axes)


@dataclass
class DiagnosticSample:
    """One row of monitored maxima; ``where`` maps a column to its grid index."""

    t: float
    g_min_eig: float
    g_max_eig: float
    omega_norm_min: float
    T2_max: float
    Rm_max: float
    DT_max: float
    DRm_max: float
    D2T_max: float
    balanced_residual: float
    R_min: float
    R_max: float
    f_max: float
    f_parts: tuple[float, float, float] = (0.0, 0.0, 0.0)
    where: dict = field(default_factory=dict)

    def row(self) -> list[float]:
        return [getattr(self, c) for c in CSV_COLUMNS]

    def as_dict(self) -> dict:
        return asdict(self)


def _argmax(a: np.ndarray) -> tuple[int, ...]:
    return tuple(int(i) for i in np.unravel_index(int(np.argmax(a)), a.shape))


def pointwise_norms(geo: Geometry) -> dict[str, np.ndarray]:
    """Squared norms of torsion, curvature and their first/second derivatives."""
    g = geo.g.value
    T, Rup = geo.T, geo.Rup
    nT, nbT = geo.nabla(T, "buu"), geo.nablabar(T, "buu")
    out = {
        "T2": norm2(T.value, "buu", g),
        "Rm2": norm2(Rup.value, "buUu", g),
        "DT2": norm2(nT.value, "ubuu", g) + norm2(nbT.value, "bbuu", g),
    }
    if geo.g.order >= 3:
        out["DRm2"] = (norm2(geo.nabla(Rup, "buUu").value, "ubuUu", g)
                       + norm2(geo.nablabar(Rup, "buUu").value, "bbuUu", g))
        out["D2T2"] = (norm2(geo.nabla(nT, "ubuu").value, "uubuu", g)
                       + norm2(geo.nablabar(nT, "ubuu").value, "bubuu", g)
                       + norm2(geo.nabla(nbT, "bbuu").value, "ubbuu", g)
                       + norm2(geo.nablabar(nbT, "bbuu").value, "bbbuu", g))
    return out


def sample(state: FlowState) -> DiagnosticSample:
    """Monitored maxima of ``state`` from order-3 finite-difference jets."""
    mj = grid_jet(state, 3)
    geo = Geometry(mj)
    g = state.g
    eig = np.linalg.eigvalsh(g)
    norms = pointwise_norms(geo)
    omega = geo.omega_norm.value.real
    f = norms["DT2"] + norms["Rm2"] + norms["T2"] ** 2
    bal = np.max(np.abs(geo.T_trace.value - geo.log_omega_norm.grad().value), axis=-1)
    R = geo.scalar.value.real
    i = _argmax(f)
    where = {"f_max": i, "T2_max": _argmax(norms["T2"]), "Rm_max": _argmax(norms["Rm2"]),
             "omega_norm_min": _argmax(-omega), "balanced_residual": _argmax(bal)}
    return DiagnosticSample(
        t=float(state.t), g_min_eig=float(eig[..., 0].min()), g_max_eig=float(eig[..., -1].max()),
        omega_norm_min=float(omega.min()), T2_max=float(norms["T2"].max()),
        Rm_max=float(np.sqrt(norms["Rm2"].max())), DT_max=float(np.sqrt(norms["DT2"].max())),
        DRm_max=float(np.sqrt(norms["DRm2"].max())), D2T_max=float(np.sqrt(norms["D2T2"].max())),
        balanced_residual=float(bal.max()), R_min=float(R.min()), R_max=float(R.max()),
        f_max=float(f[i]),
        f_parts=(float(norms["DT2"][i]), float(norms["Rm2"][i]), float(norms["T2"][i] ** 2)),
        where=where)


def blowup_reason(s: DiagnosticSample, omega_floor: float, f_max: float) -> str | None:
    """The two stopping conditions: norm floor, then the curvature-torsion bound."""
    if s.omega_norm_min < omega_floor:
        return "blowup_norm_floor"
    if s.f_max > f_max:
        return "blowup_f_max"
    return None


# ---------------------------------------------------------------------------
# monitors over a trajectory
# ---------------------------------------------------------------------------

@dataclass
class ShiReport:
    """``sup t^{k/2} |D^k Rm|`` and ``sup t^{k/2} |D^{k+1} T|`` on the window ``t <= 1/A``."""

    A: float
    window: float
    valid: bool
    rm_sup: dict[int, float]
    torsion_sup: dict[int, float]

    def constants(self) -> dict[int, float]:
        """Empirical constants ``C_k = sup / A`` (largest of the two families)."""
        return {k: max(self.rm_sup[k], self.torsion_sup[k]) / self.A if self.A else 0.0
                for k in self.rm_sup}


def curvature_bound(samples) -> float:
    """``sup(|Rm| + |DT| + |T|^2)`` over the samples."""
    return max(s.Rm_max + s.DT_max + s.T2_max for s in samples)


def shi_monitor(samples, A: float | None = None, ks=(1,)) -> ShiReport:
    """Shi-type derivative monitor for ``k`` in ``{0, 1}``.

    With ``A`` omitted the measured bound :func:`curvature_bound` is used.
    The window is ``[0, 1/A]``; it is marked invalid if the monitored norms
    exceed ``A`` there.
    """
    for k in ks:
        if k not in (0, 1):
            raise ValueError("derivative monitors are available for k = 0 and k = 1 only")
    A = curvature_bound(samples) if A is None else A
    window = math.inf if A == 0 else 1.0 / A
    inside = [s for s in samples if s.t <= window]
    valid = all(s.Rm_max + s.DT_max + s.T2_max <= A * (1 + 1e-12) for s in inside)
    rm = {0: lambda s: s.Rm_max, 1: lambda s: s.DRm_max}
    tor = {0: lambda s: s.DT_max, 1: lambda s: s.D2T_max}
    rm_sup = {k: max((s.t ** (k / 2) * rm[k](s) for s in inside), default=0.0) for k in ks}
    t_sup = {k: max((s.t ** (k / 2) * tor[k](s) for s in inside), default=0.0) for k in ks}
    return ShiReport(A, window, valid, rm_sup, t_sup)


@dataclass
class DoublingReport:
    f0: float
    event_time: float | None
    window_fraction: float | None
    max_ratio: float

    @property
    def doubled(self) -> bool:
        return self.event_time is not None


def doubling_monitor(samples) -> DoublingReport:
    """First sample time at which ``f_max`` exceeds four times its initial value."""
    f0 = samples[0].f_max
    ratio = max((s.f_max / f0 for s in samples), default=1.0) if f0 > 0 else 1.0
    for s in samples:
        if s.f_max > 4 * f0:
            return DoublingReport(f0, s.t, s.t * math.sqrt(f0), ratio)
    return DoublingReport(f0, None, None, ratio)


# ---------------------------------------------------------------------------
# time-differenced evolution checks
# ---------------------------------------------------------------------------

def _quantity(state: FlowState, which: str) -> np.ndarray:
    if which == "metric":
        return state.g
    geo = Geometry(grid_jet(state, 2))
    return {"norm": lambda: geo.omega_norm.value,
            "curvature": lambda: geo.Rup.value,
            "torsion": lambda: geo.T.value,
            "scalar": lambda: geo.scalar.value}[which]()


def _rhs(state: FlowState, which: str) -> np.ndarray:
    if which == "metric":
        return grid_velocity(state)
    if which == "norm":
        return norm_time_derivative(Geometry(grid_jet(state, 2))).value
    if which == "torsion":
        return torsion_flow_rhs(Geometry(grid_jet(state, 3))).value
    geo = Geometry(grid_jet(state, 4))
    dR = curvature_flow_rhs(geo)
    if which == "curvature":
        return dR.value
    # d/dt (g^{j kbar} R_{kbar j}) with d/dt g^{j kbar} = -g^{j mbar} gdot_{mbar q} g^{q kbar}
    ginv = geo.ginv.value
    gdot = grid_velocity(state)
    ric = geo.ric.value
    d_ric = np.einsum("...kjpp->...kj", dR.value)
    return (np.einsum("...jk,...kj->...", ginv, d_ric)
            - np.einsum("...jm,...mq,...qk,...kj->...", ginv, gdot, ginv, ric))


EVOLUTION_QUANTITIES = ("metric", "norm", "curvature", "torsion", "scalar")


def evolution_consistency(snapshots, which: str) -> ResidualReport:
    """Centered time difference of a tensor against its evolution equation.

    ``snapshots`` are three states at ``t - dt, t, t + dt``.  The report holds
    the absolute residual and the residual relative to ``max |rhs|``.
    """
    if which not in EVOLUTION_QUANTITIES:
        raise ValueError(f"unknown quantity {which!r}; choose from {EVOLUTION_QUANTITIES}")
    if len(snapshots) != 3:
        raise ValueError("need exactly three snapshots")
    a, b, c = snapshots
    d1, d2 = b.t - a.t, c.t - b.t
    if d1 <= 0 or abs(d1 - d2) > 1e-9 * max(d1, d2):
        raise ValueError("snapshots must be equally spaced in time")
    fd = (_quantity(c, which) - _quantity(a, which)) / (2 * d1)
    rhs = _rhs(b, which)
    err = np.abs(fd - rhs)
    scale = float(np.abs(rhs).max())
    rep = ResidualReport()
    rep.add(f"{which}_abs", err, np.inf)
    rep.add(f"{which}_rel", err / scale if scale else err, np.inf)
    return rep


def time_order(errors, steps) -> float:
    """Least-squares slope of ``log error`` against ``log step``."""
    return float(np.polyfit(np.log(steps), np.log(errors), 1)[0])


# ---------------------------------------------------------------------------
# stationarity and source checks
# ---------------------------------------------------------------------------

def stationarity_check(state: FlowState, velocity_threshold: float = 1e-3) -> ResidualReport:
    """``|Delta log ||Omega||^2 - |T|^2|`` and ``|T|^2`` near a stationary point.

    Skipped (empty report with a note) when the velocity is above threshold.
    """
    rep = ResidualReport()
    vel = np.abs(grid_velocity(state)).max()
    if vel > velocity_threshold:
        rep.add("stationarity_skipped", 0.0, np.inf, note=f"velocity above threshold ({vel:.2e})")
        return rep
    geo = Geometry(grid_jet(state, 2))
    log2 = geo.log_omega_norm * 2.0
    lap = jeinsum("jk,jk->", geo.ginv, log2.grad().grad(bar=True)).value
    rep.add("laplacian_log_norm_minus_T2", lap - geo.T_norm2.value, np.inf)
    rep.add("T2", geo.T_norm2.value, np.inf)
    return rep


def closedness_residual(state: FlowState) -> float:
    """Max of ``d Phi`` for the source (2,2)-form field in pair layout."""
    if state.Phi is None:
        return 0.0
    jet = state.grid.jet(state.Phi, 1, hermitian=False)
    d = jet.grad().value            # [a, k, m, l, j]
    db = jet.grad(bar=True).value   # [b, k, m, l, j]
    # cyclic sums over the unbarred (a, m, j) and barred (b, k, l) slots
    cyc = d + np.einsum("...mkjla->...akmlj", d) + np.einsum("...jkalm->...akmlj", d)
    cycb = db + np.einsum("...klmbj->...bkmlj", db) + np.einsum("...lbmkj->...bkmlj", db)
    return float(max(np.abs(cyc).max(), np.abs(cycb).max()))
