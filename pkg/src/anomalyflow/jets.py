"""Truncated Taylor jets in the Wirtinger variables ``(z, zbar)``.

A :class:`Jet` stores the Taylor coefficients of a tensor field around a
base point, treating ``z^a`` and ``zbar^a`` as independent variables.
Coefficients live in an array of shape ``(n_monomials, *batch, *tensor)``:
the leading axis runs over monomials of total degree ``<= order`` in graded
order, the batch axes index independent base points, and the trailing
``rank`` axes are tensor indices.

Products truncate to the smaller order, derivatives lower the order by one,
so every derived quantity carries exactly the derivative information that
is valid for it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

MAX_ORDER = 6


@dataclass(frozen=True)
class JetSpace:
    """Complex dimension ``m`` and the directions a field may depend on.

    Derivatives along directions outside ``dirs`` vanish identically, which
    keeps reduced-ansatz fields cheap.
    """

    m: int
    dirs: tuple[int, ...]

    @property
    def nvars(self) -> int:
        return 2 * len(self.dirs)

    def holo_var(self, j: int) -> int | None:
        return self.dirs.index(j) if j in self.dirs else None

    def anti_var(self, j: int) -> int | None:
        return len(self.dirs) + self.dirs.index(j) if j in self.dirs else None

    @classmethod
    def full(cls, m: int) -> "JetSpace":
        return cls(m, tuple(range(m)))


def n_monomials(nvars: int, order: int) -> int:
    if order < 0:
        return 0
    return math.comb(nvars + order, order)


@lru_cache(maxsize=None)
def _monomials(nvars: int) -> tuple[np.ndarray, dict]:
    rows = []
    for deg in range(MAX_ORDER + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), deg):
            alpha = [0] * nvars
            for v in combo:
                alpha[v] += 1
            rows.append(tuple(alpha))
    # graded, then reverse-lex inside a degree; any fixed order works
    index = {a: i for i, a in enumerate(rows)}
    return np.array(rows, dtype=np.int64).reshape(len(rows), nvars), index


@lru_cache(maxsize=None)
def _product_table(nvars: int, order: int):
    mons, index = _monomials(nvars)
    n = n_monomials(nvars, order)
    deg = mons[:n].sum(axis=1)
    ia, ib, ic = [], [], []
    for a in range(n):
        for b in range(n):
            if deg[a] + deg[b] <= order:
                ia.append(a)
                ib.append(b)
                ic.append(index[tuple(mons[a] + mons[b])])
    ia, ib, ic = map(np.asarray, (ia, ib, ic))
    perm = np.argsort(ic, kind="stable")
    ia, ib, ic = ia[perm], ib[perm], ic[perm]
    starts = np.flatnonzero(np.r_[True, ic[1:] != ic[:-1]])
    return ia, ib, starts


@lru_cache(maxsize=None)
def _derivative_table(nvars: int, order: int, var: int):
    mons, index = _monomials(nvars)
    n = n_monomials(nvars, order - 1)
    src = np.empty(n, dtype=np.int64)
    fac = np.empty(n)
    for i in range(n):
        alpha = mons[i].copy()
        fac[i] = alpha[var] + 1
        alpha[var] += 1
        src[i] = index[tuple(alpha)]
    return src, fac


@lru_cache(maxsize=None)
def _conj_table(nvars: int, order: int) -> np.ndarray:
    mons, index = _monomials(nvars)
    half = nvars // 2
    n = n_monomials(nvars, order)
    return np.array([index[tuple(np.r_[a[half:], a[:half]])] for a in mons[:n]])


@lru_cache(maxsize=None)
def _factorials(nvars: int, order: int) -> np.ndarray:
    mons, _ = _monomials(nvars)
    n = n_monomials(nvars, order)
    return np.array([math.prod(math.factorial(int(k)) for k in a) for a in mons[:n]], dtype=float)


def monomial_index(space: JetSpace, holo: Sequence[int] = (), anti: Sequence[int] = ()) -> int | None:
    """Row of the monomial ``prod z^holo * prod zbar^anti``; None if a direction is inactive."""
    alpha = [0] * space.nvars
    for j in holo:
        v = space.holo_var(j)
        if v is None:
            return None
        alpha[v] += 1
    for k in anti:
        v = space.anti_var(k)
        if v is None:
            return None
        alpha[v] += 1
    return _monomials(space.nvars)[1][tuple(alpha)]


class Jet:
    """Tensor-valued truncated Taylor polynomial (see module docstring)."""

    __slots__ = ("c", "order", "space", "rank")

    def __init__(self, coeffs: np.ndarray, order: int, space: JetSpace, rank: int):
        n = n_monomials(space.nvars, order)
        if coeffs.shape[0] != n:
            raise ValueError(f"expected {n} monomial rows for order {order}, got {coeffs.shape[0]}")
        self.c = coeffs
        self.order = order
        self.space = space
        self.rank = rank

    # -- construction -------------------------------------------------
    @classmethod
    def constant(cls, value, space: JetSpace, order: int, rank: int) -> "Jet":
        value = np.asarray(value, dtype=complex)
        c = np.zeros((n_monomials(space.nvars, order),) + value.shape, dtype=complex)
        c[0] = value
        return cls(c, order, space, rank)

    @classmethod
    def from_partials(cls, partials: np.ndarray, order: int, space: JetSpace, rank: int) -> "Jet":
        """Build from derivative values ``D^alpha f`` (same row layout)."""
        fac = _factorials(space.nvars, order).reshape((-1,) + (1,) * (partials.ndim - 1))
        return cls(np.asarray(partials, dtype=complex) / fac, order, space, rank)

    def zeros_like(self, order: int | None = None) -> "Jet":
        order = self.order if order is None else order
        shape = (n_monomials(self.space.nvars, order),) + self.c.shape[1:]
        return Jet(np.zeros(shape, dtype=complex), order, self.space, self.rank)

    # -- shape helpers ------------------------------------------------
    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.c.shape[1:self.c.ndim - self.rank]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.c.shape[self.c.ndim - self.rank:]

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def partials(self) -> np.ndarray:
        """Derivative values ``D^alpha f`` for every monomial row."""
        fac = _factorials(self.space.nvars, self.order).reshape((-1,) + (1,) * (self.c.ndim - 1))
        return self.c * fac

    def partial(self, holo: Sequence[int] = (), anti: Sequence[int] = ()) -> np.ndarray:
        """Value of ``d_holo dbar_anti f`` at the base point."""
        if len(holo) + len(anti) > self.order:
            raise ValueError("derivative order exceeds jet order")
        i = monomial_index(self.space, holo, anti)
        if i is None:
            return np.zeros(self.c.shape[1:], dtype=complex)
        alpha = _monomials(self.space.nvars)[0][i]
        return self.c[i] * math.prod(math.factorial(int(k)) for k in alpha)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot raise jet order")
        return Jet(self.c[:n_monomials(self.space.nvars, order)], order, self.space, self.rank)

    def _check(self, other: "Jet"):
        if other.space != self.space:
            raise ValueError("jets live in different spaces")

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            k = min(self.order, other.order)
            n = n_monomials(self.space.nvars, k)
            return Jet(self.c[:n] + other.c[:n], k, self.space, self.rank)
        c = self.c.copy()
        c[0] = c[0] + other
        return Jet(c, self.order, self.space, self.rank)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.order, self.space, self.rank)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, s):
        if isinstance(s, Jet):
            raise TypeError("use jeinsum for jet products")
        s = np.asarray(s)
        if s.ndim:
            # point-dependent scalar: broadcast over batch axes only
            s = s.reshape(s.shape + (1,) * self.rank)
        return Jet(self.c * s, self.order, self.space, self.rank)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / np.asarray(s))

    def conj(self) -> "Jet":
        """Pointwise complex conjugate of the field (swaps z and zbar)."""
        perm = _conj_table(self.space.nvars, self.order)
        return Jet(np.conj(self.c[perm]), self.order, self.space, self.rank)

    def transpose(self, *axes: int) -> "Jet":
        nb = self.c.ndim - self.rank
        return Jet(self.c.transpose(tuple(range(nb)) + tuple(nb + a for a in axes)),
                   self.order, self.space, self.rank)

    # -- differentiation ----------------------------------------------
    def _dvar(self, var: int | None) -> "Jet":
        if self.order < 1:
            raise ValueError("jet order exhausted")
        if var is None:
            return self.zeros_like(self.order - 1)
        src, fac = _derivative_table(self.space.nvars, self.order, var)
        fac = fac.reshape((-1,) + (1,) * (self.c.ndim - 1))
        return Jet(self.c[src] * fac, self.order - 1, self.space, self.rank)

    def d(self, j: int) -> "Jet":
        return self._dvar(self.space.holo_var(j))

    def dbar(self, j: int) -> "Jet":
        return self._dvar(self.space.anti_var(j))

    def grad(self, bar: bool = False) -> "Jet":
        """All first derivatives, stacked as a new leading tensor axis."""
        parts = [(self.dbar(j) if bar else self.d(j)).c for j in range(self.space.m)]
        axis = self.c.ndim - self.rank
        return Jet(np.stack(parts, axis=axis), self.order - 1, self.space, self.rank + 1)

    # -- nonlinear functions ------------------------------------------
    def compose(self, derivs: Sequence[np.ndarray]) -> "Jet":
        """``f(self)`` for a scalar jet, given ``f^(k)(value)`` for k = 0..order."""
        if self.rank:
            raise ValueError("compose needs a scalar jet")
        nil = Jet(self.c.copy(), self.order, self.space, 0)
        nil.c[0] = 0
        out = Jet.constant(derivs[0], self.space, self.order, 0)
        power = None
        for k in range(1, self.order + 1):
            power = nil if power is None else jeinsum(",->", power, nil)
            out = out + power * (np.asarray(derivs[k]) / math.factorial(k))
        return out

    def exp(self) -> "Jet":
        e = np.exp(self.value)
        return self.compose([e] * (self.order + 1))

    def log(self) -> "Jet":
        a = self.value
        derivs = [np.log(a)] + [(-1) ** (k - 1) * math.factorial(k - 1) / a ** k
                                for k in range(1, self.order + 1)]
        return self.compose(derivs)

    def power(self, s: float) -> "Jet":
        a = self.value
        derivs = []
        coef = 1.0
        for k in range(self.order + 1):
            derivs.append(coef * a ** (s - k))
            coef *= s - k
        return self.compose(derivs)

    def inv(self) -> "Jet":
        """Inverse of a square-matrix-valued jet (last two axes)."""
        g0inv = np.linalg.inv(self.value)
        base = Jet.constant(g0inv, self.space, self.order, 2)
        nil = Jet(self.c.copy(), self.order, self.space, 2)
        nil.c[0] = 0
        step = -jeinsum("ab,bc->ac", base, nil)
        out = base
        term = base
        for _ in range(self.order):
            term = jeinsum("ab,bc->ac", step, term)
            out = out + term
        return out

    def logdet(self) -> "Jet":
        """``log det`` of a square-matrix-valued jet."""
        g0 = self.value
        sign, ld = np.linalg.slogdet(g0)
        nil = Jet(self.c.copy(), self.order, self.space, 2)
        nil.c[0] = 0
        y = jeinsum("ab,bc->ac", Jet.constant(np.linalg.inv(g0), self.space, self.order, 2), nil)
        out = Jet.constant(np.log(sign) + ld, self.space, self.order, 0)
        term = None
        for k in range(1, self.order + 1):
            term = y if term is None else jeinsum("ab,bc->ac", term, y)
            out = out + jeinsum("aa->", term) * ((-1) ** (k + 1) / k)
        return out

    def __repr__(self):
        return f"Jet(order={self.order}, batch={self.batch_shape}, shape={self.shape}, dirs={self.space.dirs})"


_CHUNK_ELEMENTS = 2_000_000


def _binary(spec: str, a: Jet, b: Jet) -> Jet:
    a._check(b)
    k = min(a.order, b.order)
    lhs, out = spec.split("->")
    sa, sb = lhs.split(",")
    ia, ib, starts = _product_table(a.space.nvars, k)
    ea = f"P...{sa},P...{sb}->P...{out}"
    nba, nbb = a.c.ndim - 1 - a.rank, b.c.ndim - 1 - b.rank
    batch = np.broadcast_shapes(a.c.shape[1:1 + nba], b.c.shape[1:1 + nbb])
    dims = dict(zip(sa, a.shape))
    dims.update(zip(sb, b.shape))
    work = len(ia) * int(np.prod(batch)) * int(np.prod([dims[ch] for ch in out] or [1]))
    fast = _matmul_plan(sa, sb, out)
    if fast is not None:
        return Jet(_product_matmul(a, b, sa, sb, out, ia, ib, starts, nba, nbb, len(batch), fast), k, a.space, len(out))
    if batch and work > _CHUNK_ELEMENTS and batch[0] > 1:
        # split along the leading batch axis to bound temporary memory
        nchunk = min(batch[0], -(-work // _CHUNK_ELEMENTS))
        edges = np.linspace(0, batch[0], nchunk + 1).astype(int)
        parts = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            sl_a = a.c[:, lo:hi] if nba == len(batch) and a.c.shape[1] > 1 else a.c
            sl_b = b.c[:, lo:hi] if nbb == len(batch) and b.c.shape[1] > 1 else b.c
            prod = np.einsum(ea, sl_a[ia], sl_b[ib], optimize=True)
            parts.append(np.add.reduceat(prod, starts, axis=0))
        c = np.concatenate(parts, axis=1)
    else:
        prod = np.einsum(ea, a.c[ia], b.c[ib], optimize=True)
        c = np.add.reduceat(prod, starts, axis=0)
    return Jet(c, k, a.space, len(out))


def _order_of(n: int, nvars: int) -> int:
    k = 0
    while n_monomials(nvars, k) < n:
        k += 1
    return k


@lru_cache(maxsize=None)
def _pairs_by_first(nvars: int, order: int) -> dict:
    """For each monomial row ``alpha``: the rows ``beta`` with deg sum <= order and rows of ``alpha + beta``."""
    mons, index = _monomials(nvars)
    n = n_monomials(nvars, order)
    deg = mons[:n].sum(axis=1)
    out = {}
    for a in range(n):
        betas = np.flatnonzero(deg <= order - deg[a])
        out[a] = (betas, np.array([index[tuple(mons[a] + mons[b])] for b in betas]))
    return out


def _matmul_plan(sa: str, sb: str, out: str):
    """Index groups for a batched-matmul contraction, or None if einsum is needed."""
    if len(set(sa)) != len(sa) or len(set(sb)) != len(sb) or len(set(out)) != len(out):
        return None
    if any(c not in out and c not in sb for c in sa) or any(c not in out and c not in sa for c in sb):
        return None
    if any(c not in sa and c not in sb for c in out):
        return None
    shared = [c for c in out if c in sa and c in sb]
    af = [c for c in out if c in sa and c not in sb]
    bf = [c for c in out if c in sb and c not in sa]
    con = [c for c in sa if c in sb and c not in out]
    return shared, af, bf, con


def _product_matmul(a: Jet, b: Jet, sa: str, sb: str, out: str, ia, ib, starts,
                    nba: int, nbb: int, nb: int, plan) -> np.ndarray:
    # monomial pairs and batch axes broadcast; tensor axes go through matmul
    shared, af, bf, con = plan
    A = a.c.reshape(a.c.shape[:1] + (1,) * (nb - nba) + a.c.shape[1:])
    B = b.c.reshape(b.c.shape[:1] + (1,) * (nb - nbb) + b.c.shape[1:])
    lead = list(range(1 + nb))
    dims = {}
    for ch, n in zip(sa, a.shape):
        dims[ch] = n
    for ch, n in zip(sb, b.shape):
        dims[ch] = n
    size = lambda grp: int(np.prod([dims[c] for c in grp])) if grp else 1
    pa = lead + [1 + nb + sa.index(c) for c in shared + af + con]
    pb = lead + [1 + nb + sb.index(c) for c in shared + con + bf]
    At = A.transpose(pa).reshape(A.shape[:1 + nb] + (size(shared), size(af), size(con)))
    Bt = B.transpose(pb).reshape(B.shape[:1 + nb] + (size(shared), size(con), size(bf)))
    groups = _pairs_by_first(a.space.nvars, int(round(len(starts) and _order_of(len(starts), a.space.nvars))))
    bshape = np.broadcast_shapes(At.shape[1:-2], Bt.shape[1:-2])
    c = np.zeros((len(starts),) + bshape + (At.shape[-2], Bt.shape[-1]), dtype=np.result_type(At, Bt))
    for alpha, (betas, gammas) in groups.items():
        c[gammas] += np.matmul(At[alpha], Bt[betas])
    order = shared + af + bf
    c = c.reshape(c.shape[:1 + nb] + tuple(dims[ch] for ch in order))
    return c.transpose(lead + [1 + nb + order.index(ch) for ch in out])


def jeinsum(spec: str, *operands: Jet) -> Jet:
    """Einsum over tensor axes of jets; batch axes broadcast, monomials convolve.

    More than two operands are contracted left to right.
    """
    spec = spec.replace(" ", "")
    lhs, out = spec.split("->")
    subs = lhs.split(",")
    if len(subs) != len(operands):
        raise ValueError("subscript count does not match operands")
    if len(operands) == 1:
        a = operands[0]
        c = np.einsum(f"...{subs[0]}->...{out}", a.c)
        return Jet(c, a.order, a.space, len(out))
    acc, acc_sub = operands[0], subs[0]
    for i in range(1, len(operands)):
        later = set(out).union(*subs[i + 1:])
        keep = [ch for ch in dict.fromkeys(acc_sub + subs[i]) if ch in later]
        tgt = out if i == len(operands) - 1 else "".join(keep)
        acc = _binary(f"{acc_sub},{subs[i]}->{tgt}", acc, operands[i])
        acc_sub = tgt
    return acc


def linear_exp_jet(space: JetSpace, order: int, lam: np.ndarray, mu: np.ndarray,
                   value: np.ndarray) -> Jet:
    """Jet of ``value * exp(lam . dz + mu . dzbar)`` in the displacement.

    ``lam``/``mu`` have length ``m``; ``value`` carries the batch shape.
    """
    mons, _ = _monomials(space.nvars)
    n = n_monomials(space.nvars, order)
    rates = np.array([lam[j] for j in space.dirs] + [mu[j] for j in space.dirs], dtype=complex)
    fac = _factorials(space.nvars, order)
    coef = np.prod(rates[None, :] ** mons[:n], axis=1) / fac
    value = np.asarray(value, dtype=complex)
    return Jet(coef.reshape((-1,) + (1,) * value.ndim) * value[None], order, space, 0)
