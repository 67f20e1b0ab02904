"""Pointwise algebra of complex (p,q)-forms.

A :class:`FormPQ` stores the fully antisymmetric components
``phi[kbar_1..kbar_q, j_1..j_p]`` on strictly increasing index tuples, with

    phi = 1/(p! q!) sum phi[kbar.., j..] dz^{j_p} ^ ... ^ dz^{j_1} ^ dzbar^{k_q} ^ ... ^ dzbar^{k_1}.

Relative to the standard basis ``dz^J ^ dzbar^K`` (J, K increasing) the stored
component differs by the reversal signs ``(-1)^{p(p-1)/2} (-1)^{q(q-1)/2}``.

For (p,p)-forms a second layout is used by the contraction formulas: the
*pair* tensor with axes ``(kbar_1, j_1, kbar_2, j_2, ...)`` which multiplies
``dz^{j_p} ^ dzbar^{k_p} ^ ... ^ dz^{j_1} ^ dzbar^{k_1}``.  It equals the
canonical tensor up to the sign ``(-1)^{p(p-1)/2}``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
            elif seq[i] == seq[j]:
                return 0
    return sign


def _reversal_sign(p: int) -> int:
    return -1 if (p * (p - 1) // 2) % 2 else 1


@lru_cache(maxsize=None)
def combos(m: int, p: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations(range(m), p))


@lru_cache(maxsize=None)
def _combo_index(m: int, p: int) -> dict:
    return {c: i for i, c in enumerate(combos(m, p))}


@lru_cache(maxsize=None)
def _merge_table(m: int, p1: int, p2: int) -> np.ndarray:
    """Signs of ``dz^I ^ dz^J = s dz^K`` as a dense (n1, n2, n3) array."""
    c1, c2, c3 = combos(m, p1), combos(m, p2), _combo_index(m, p1 + p2)
    out = np.zeros((len(c1), len(c2), len(combos(m, p1 + p2))))
    for a, I in enumerate(c1):
        for b, J in enumerate(c2):
            s = _perm_sign(I + J)
            if s:
                out[a, b, c3[tuple(sorted(I + J))]] = s
    return out


@lru_cache(maxsize=None)
def _complement_data(m: int, p: int):
    idx = _combo_index(m, m - p)
    perm, sign = [], []
    for I in combos(m, p):
        comp = tuple(k for k in range(m) if k not in I)
        perm.append(idx[comp])
        sign.append(_perm_sign(I + comp))
    return np.array(perm), np.array(sign, dtype=float)


def compound(M: np.ndarray, p: int) -> np.ndarray:
    """p-th compound matrix: minors ``det M[I, J]`` over increasing I, J."""
    m = M.shape[0]
    cs = combos(m, p)
    if p == 0:
        return np.ones((1, 1), dtype=complex)
    out = np.empty((len(cs), len(cs)), dtype=complex)
    for a, I in enumerate(cs):
        rows = M[list(I)]
        for b, J in enumerate(cs):
            out[a, b] = np.linalg.det(rows[:, list(J)])
    return out


class HermitianPointMetric:
    """Positive Hermitian matrix ``g[k, j] = g_{kbar j}`` at one point."""

    def __init__(self, g: np.ndarray, check: bool = True):
        g = np.asarray(g, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("metric must be a square matrix")
        if check:
            if not np.allclose(g, g.conj().T, atol=1e-12 * max(1.0, np.abs(g).max())):
                raise ValueError("metric is not Hermitian")
            if np.linalg.eigvalsh(g).min() <= 0:
                raise ValueError("metric not positive")
        self.g = g
        self.m = g.shape[0]
        self.g_inv = np.linalg.inv(g)
        self.det = float(np.linalg.det(g).real)

    @classmethod
    def flat(cls, m: int) -> "HermitianPointMetric":
        return cls(np.eye(m))

    @classmethod
    def random(cls, m: int, rng: np.random.Generator, spread: float = 0.5) -> "HermitianPointMetric":
        a = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        return cls(np.eye(m) + spread * (a @ a.conj().T) / m)

    @property
    def frame(self) -> np.ndarray:
        """``P`` with ``g = P^H P``; rows are the unitary coframe ``e^a = P[a, j] dz^j``."""
        return np.linalg.cholesky(self.g).conj().T


@dataclass(frozen=True)
class FormPQ:
    """A (p,q)-form at a point; ``data[J, K]`` holds ``phi[K, J]`` on increasing J, K."""

    m: int
    p: int
    q: int
    data: np.ndarray

    def __post_init__(self):
        if not (0 <= self.p <= self.m and 0 <= self.q <= self.m):
            raise ValueError("degree exceeds dimension")
        shape = (math.comb(self.m, self.p), math.comb(self.m, self.q))
        if self.data.shape != shape:
            raise ValueError(f"expected coefficient array of shape {shape}, got {self.data.shape}")

    # -- construction -------------------------------------------------
    @classmethod
    def zero(cls, m: int, p: int, q: int) -> "FormPQ":
        if not (0 <= p <= m and 0 <= q <= m):
            raise ValueError("degree exceeds dimension")
        return cls(m, p, q, np.zeros((math.comb(m, p), math.comb(m, q)), dtype=complex))

    @classmethod
    def from_components(cls, m: int, p: int, q: int, entries: dict) -> "FormPQ":
        """Build from ``{(unbarred tuple, barred tuple): value}``; tuples may be unsorted."""
        out = cls.zero(m, p, q)
        iu, ib = _combo_index(m, p), _combo_index(m, q)
        for (J, K), v in entries.items():
            s = _perm_sign(J) * _perm_sign(K)
            if s == 0:
                continue
            out.data[iu[tuple(sorted(J))], ib[tuple(sorted(K))]] += s * v
        return out

    @classmethod
    def from_basis(cls, m: int, p: int, q: int, coeffs: np.ndarray) -> "FormPQ":
        """From coefficients on ``dz^J ^ dzbar^K`` with increasing J, K."""
        s = _reversal_sign(p) * _reversal_sign(q)
        return cls(m, p, q, s * np.asarray(coeffs, dtype=complex))

    @classmethod
    def random(cls, m: int, p: int, q: int, rng: np.random.Generator) -> "FormPQ":
        shape = (math.comb(m, p), math.comb(m, q))
        return cls(m, p, q, rng.normal(size=shape) + 1j * rng.normal(size=shape))

    # -- access -------------------------------------------------------
    def comp(self, unbarred, barred) -> complex:
        """Component ``phi[barred, unbarred]`` for any index order."""
        s = _perm_sign(unbarred) * _perm_sign(barred)
        if s == 0:
            return 0j
        J = _combo_index(self.m, self.p)[tuple(sorted(unbarred))]
        K = _combo_index(self.m, self.q)[tuple(sorted(barred))]
        return s * self.data[J, K]

    def basis(self) -> np.ndarray:
        return _reversal_sign(self.p) * _reversal_sign(self.q) * self.data

    def tensor(self) -> np.ndarray:
        """Full antisymmetric array with axes ``(kbar_1..kbar_q, j_1..j_p)``."""
        m, p, q = self.m, self.p, self.q
        out = np.zeros((m,) * (q + p), dtype=complex)
        for a, J in enumerate(combos(m, p)):
            for b, K in enumerate(combos(m, q)):
                v = self.data[a, b]
                if v == 0:
                    continue
                for sJ in itertools.permutations(range(p)):
                    Jp = tuple(J[i] for i in sJ)
                    sj = _perm_sign(sJ)
                    for sK in itertools.permutations(range(q)):
                        out[tuple(K[i] for i in sK) + Jp] = sj * _perm_sign(sK) * v
        return out

    @classmethod
    def from_tensor(cls, t: np.ndarray, m: int, p: int, q: int) -> "FormPQ":
        """Inverse of :meth:`tensor`; reads the increasing-index entries only."""
        data = np.empty((math.comb(m, p), math.comb(m, q)), dtype=complex)
        for a, J in enumerate(combos(m, p)):
            for b, K in enumerate(combos(m, q)):
                data[a, b] = t[K + J]
        return cls(m, p, q, data)

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other: "FormPQ") -> "FormPQ":
        self._same(other)
        return FormPQ(self.m, self.p, self.q, self.data + other.data)

    def __sub__(self, other: "FormPQ") -> "FormPQ":
        self._same(other)
        return FormPQ(self.m, self.p, self.q, self.data - other.data)

    def __neg__(self) -> "FormPQ":
        return FormPQ(self.m, self.p, self.q, -self.data)

    def __mul__(self, s) -> "FormPQ":
        return FormPQ(self.m, self.p, self.q, self.data * s)

    __rmul__ = __mul__

    def __truediv__(self, s) -> "FormPQ":
        return FormPQ(self.m, self.p, self.q, self.data / s)

    def conj(self) -> "FormPQ":
        """Complex conjugate, a (q,p)-form."""
        sign = -1 if (self.p * self.q) % 2 else 1
        return FormPQ(self.m, self.q, self.p, sign * np.conj(self.data.T))

    def max_abs(self) -> float:
        return float(np.abs(self.data).max()) if self.data.size else 0.0

    def _same(self, other: "FormPQ"):
        if (self.m, self.p, self.q) != (other.m, other.p, other.q):
            raise ValueError("form types differ")


def wedge(a: FormPQ, b: FormPQ) -> FormPQ:
    """Exterior product ``a ^ b``."""
    if a.m != b.m:
        raise ValueError("forms live in different dimensions")
    m, p, q = a.m, a.p + b.p, a.q + b.q
    if p > m or q > m:
        raise ValueError("degree exceeds dimension")
    wu = _merge_table(m, a.p, b.p)
    wb = _merge_table(m, a.q, b.q)
    sign = -1 if (a.q * b.p) % 2 else 1
    c = sign * np.einsum("ijk,abc,ia,jb->kc", wu, wb, a.basis(), b.basis(), optimize=True)
    return FormPQ.from_basis(m, p, q, c)


def omega_form(g: HermitianPointMetric) -> FormPQ:
    """The Kähler form ``i g_{kbar j} dz^j ^ dzbar^k``."""
    return FormPQ(g.m, 1, 1, 1j * g.g.T.copy())


def omega_power(g: HermitianPointMetric, k: int) -> FormPQ:
    out = FormPQ(g.m, 0, 0, np.ones((1, 1), dtype=complex))
    w = omega_form(g)
    for _ in range(k):
        out = wedge(out, w)
    return out


def to_pair(form: FormPQ) -> np.ndarray:
    """Pair tensor with axes ``(kbar_1, j_1, ..., kbar_p, j_p)`` of a (p,p)-form."""
    if form.p != form.q:
        raise ValueError("pair layout needs a (p,p)-form")
    p = form.p
    axes = [x for i in range(p) for x in (i, p + i)]
    return _reversal_sign(p) * form.tensor().transpose(axes)


def from_pair(t: np.ndarray, m: int, p: int) -> FormPQ:
    """Inverse of :func:`to_pair` (reads increasing entries; assumes antisymmetry)."""
    inv = np.argsort([x for i in range(p) for x in (i, p + i)])
    return FormPQ.from_tensor(_reversal_sign(p) * t.transpose(inv), m, p, p)


def pair_contract(form: FormPQ, g: HermitianPointMetric, keep: int) -> np.ndarray:
    """Contract the last ``p - keep`` index pairs of the pair tensor with ``g^{j kbar}``."""
    t = to_pair(form)
    for _ in range(form.p - keep):
        t = np.einsum("...kj,jk->...", t, g.g_inv)
    return t


def trace_p(theta: FormPQ, g: HermitianPointMetric) -> complex:
    """``i^{-p}`` times the full metric contraction of a (p,p)-form."""
    if theta.p != theta.q:
        raise ValueError("trace needs a (p,p)-form")
    return complex((1j) ** (-theta.p) * pair_contract(theta, g, 0))


def to_frame(form: FormPQ, g: HermitianPointMetric) -> np.ndarray:
    """Coefficients on the unitary basis ``e^A ^ ebar^B``."""
    Q = np.linalg.inv(g.frame)
    return compound(Q, form.p).T @ form.basis() @ np.conj(compound(Q, form.q))


def from_frame(m: int, p: int, q: int, coeffs: np.ndarray, g: HermitianPointMetric) -> FormPQ:
    P = g.frame
    return FormPQ.from_basis(m, p, q, compound(P, p).T @ coeffs @ np.conj(compound(P, q)))


def inner(a: FormPQ, b: FormPQ, g: HermitianPointMetric) -> complex:
    """Pointwise Hermitian product, linear in ``a``, antilinear in ``b``."""
    a._same(b)
    return complex(np.sum(to_frame(a, g) * np.conj(to_frame(b, g))))


def volume_coefficient(g: HermitianPointMetric) -> complex:
    """Coefficient of ``omega^m / m!`` on ``dz^{1..m} ^ dzbar^{1..m}``."""
    m = g.m
    return (1j) ** m * _reversal_sign(m) * g.det


def hodge_star_eps(a: FormPQ, g: HermitianPointMetric) -> FormPQ:
    """Complex-linear Hodge star, ``alpha ^ star(conj b) = <alpha, b> omega^m/m!``.

    Built from permutation signs on the unitary frame; a (p,q)-form maps to an
    (m-q, m-p)-form.
    """
    m, p, q = a.m, a.p, a.q
    f = to_frame(a, g)
    perm_p, sign_p = _complement_data(m, p)
    perm_q, sign_q = _complement_data(m, q)
    c = ((-1) ** (p * q)) * (1j) ** m * _reversal_sign(m) * ((-1) ** (p * (m - q)))
    out = np.zeros((math.comb(m, m - q), math.comb(m, m - p)), dtype=complex)
    out[np.ix_(perm_q, perm_p)] = c * (f * sign_p[:, None] * sign_q[None, :]).T
    return from_frame(m, m - q, m - p, out, g)


def top_coefficient(form: FormPQ) -> complex:
    """Coefficient of an (m,m)-form on ``dz^{1..m} ^ dzbar^{1..m}``."""
    if form.p != form.m or form.q != form.m:
        raise ValueError("top coefficient needs an (m,m)-form")
    return complex(form.basis()[0, 0])


def norm_Omega(g: HermitianPointMetric) -> float:
    """Pointwise norm of ``dz^1 ^ ... ^ dz^m`` against ``omega``; equals 1 on the flat metric."""
    if g.det <= 0:
        raise ValueError("metric not positive")
    return float(g.det ** -0.5)


def norm_Omega_oracle(g: HermitianPointMetric) -> float:
    """Same quantity from the top-form ratio ``i Omega ^ conj(Omega) / (omega^m / m!)``."""
    m = g.m
    top = FormPQ(m, m, 0, np.ones((1, 1), dtype=complex))
    num = top_coefficient(wedge(top, top.conj())) * (1j) ** (m * m)
    den = top_coefficient(omega_power(g, m)) / math.factorial(m)
    return float(np.sqrt((num / den).real))
