"""Periodic grids over a subset of the real torus coordinates and FD jets.

A reduced-ansatz field depends only on the *active* real coordinates
(names from ``x1, y1, ..., x3, y3``).  Real partial derivatives come from
fourth-order central differences; they are mapped to Wirtinger partials
through ``d/dz = (d/dx - i d/dy)/2`` and ``d/dzbar = (d/dx + i d/dy)/2``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .jets import Jet, JetSpace, _monomials, monomial_index, n_monomials
from .trig import REAL_COORDS

# 4th-order central stencils, offsets -3..3
_STENCILS = {
    1: np.array([0, 1, -8, 0, 8, -1, 0]) / 12.0,
    2: np.array([0, -1, 16, -30, 16, -1, 0]) / 12.0,
    3: np.array([1, -8, 13, 0, -13, 8, -1]) / 8.0,
    4: np.array([-1, 12, -39, 56, -39, 12, -1]) / 6.0,
}


def fd_derivative(f: np.ndarray, axis: int, order: int, h: float) -> np.ndarray:
    """Periodic 4th-order accurate ``order``-th derivative along ``axis``."""
    if order == 0:
        return f
    w = _STENCILS[order]
    out = np.zeros_like(f)
    for off, c in zip(range(-3, 4), w):
        if c:
            # value at i + off sits at index i after rolling by -off
            out += c * np.roll(f, -off, axis=axis)
    return out / h ** order


def _split(name: str) -> tuple[int, str]:
    return int(name[1:]) - 1, name[0]


@lru_cache(maxsize=None)
def _wirtinger_map(active: tuple[str, ...], dirs: tuple[int, ...], order: int) -> np.ndarray:
    """Matrix taking real partials (by real multi-index) to Wirtinger partials."""
    nreal = len(active)
    pos = {name: a for a, name in enumerate(active)}
    real_idx = _real_multi_indices(nreal, order)
    col = {r: i for i, r in enumerate(real_idx)}
    mons = _monomials(2 * len(dirs))[0][:n_monomials(2 * len(dirs), order)]
    B = np.zeros((len(mons), len(real_idx)), dtype=complex)
    for row, alpha in enumerate(mons):
        poly = {(0,) * nreal: 1.0 + 0j}
        for v, power in enumerate(alpha):
            j = dirs[v % len(dirs)]
            sign = -1j if v < len(dirs) else 1j
            factor = {}
            for name, c in ((f"x{j + 1}", 0.5), (f"y{j + 1}", 0.5 * sign)):
                if name in pos:
                    e = [0] * nreal
                    e[pos[name]] = 1
                    factor[tuple(e)] = c
            for _ in range(power):
                new = {}
                for ka, ca in poly.items():
                    for kb, cb in factor.items():
                        k = tuple(x + y for x, y in zip(ka, kb))
                        new[k] = new.get(k, 0) + ca * cb
                poly = new
        for k, c in poly.items():
            B[row, col[k]] += c
    return B


@lru_cache(maxsize=None)
def _real_multi_indices(nreal: int, order: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for deg in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(nreal), deg):
            e = [0] * nreal
            for a in combo:
                e[a] += 1
            out.append(tuple(e))
    return tuple(out)


@lru_cache(maxsize=None)
def _swap_rows(nvars: int, order: int) -> np.ndarray:
    mons, index = _monomials(nvars)
    half = nvars // 2
    return np.array([index[tuple(np.r_[a[half:], a[:half]])] for a in mons[:n_monomials(nvars, order)]])


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``N`` points per active real coordinate (unit period)."""

    N: int
    active: tuple[str, ...] = ("x1", "x2")
    m: int = 3

    def __post_init__(self):
        if self.N < 4 or self.N % 2:
            raise ValueError("N must be even and at least 4")
        if not self.active or len(set(self.active)) != len(self.active):
            raise ValueError("active coordinates must be distinct and non-empty")
        for name in self.active:
            if name not in REAL_COORDS[:2 * self.m]:
                raise ValueError(f"unknown coordinate {name!r}")

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * len(self.active)

    @cached_property
    def space(self) -> JetSpace:
        dirs = sorted({_split(n)[0] for n in self.active})
        return JetSpace(self.m, tuple(dirs))

    @cached_property
    def coords(self) -> dict[str, np.ndarray]:
        axes = np.meshgrid(*([np.arange(self.N) * self.h] * len(self.active)), indexing="ij")
        return dict(zip(self.active, axes))

    @cached_property
    def points(self) -> np.ndarray:
        """Complex coordinates ``z`` of every grid point, shape ``(*shape, m)``."""
        z = np.zeros(self.shape + (self.m,), dtype=complex)
        for name, arr in self.coords.items():
            j, kind = _split(name)
            z[..., j] += arr if kind == "x" else 1j * arr
        return z

    def real_partials(self, f: np.ndarray, order: int) -> np.ndarray:
        """All real partials up to ``order``, stacked along a new leading axis."""
        nreal = len(self.active)
        out = []
        cache = {(0,) * nreal: f}
        for e in _real_multi_indices(nreal, order):
            if e not in cache:
                # peel the last nonzero axis and reuse the lower derivative
                a = max(i for i, k in enumerate(e) if k)
                base = tuple(k if i != a else 0 for i, k in enumerate(e))
                if base not in cache:
                    cache[base] = self._apply(f, base)
                cache[e] = fd_derivative(cache[base], a, e[a], self.h)
            out.append(cache[e])
        return np.stack(out)

    def _apply(self, f, e):
        for a, k in enumerate(e):
            f = fd_derivative(f, a, k, self.h)
        return f

    def wirtinger_partials(self, field: np.ndarray, order: int, hermitian: bool = True) -> np.ndarray:
        """Wirtinger partials of a grid field, one row per jet monomial."""
        rank = field.ndim - len(self.shape)
        real = self.real_partials(field, order)
        B = _wirtinger_map(self.active, self.space.dirs, order)
        partials = np.tensordot(B, real, axes=([1], [0]))
        if hermitian:
            swap = _swap_rows(self.space.nvars, order)
            mirrored = np.conj(partials[swap])
            if rank == 2:
                mirrored = np.swapaxes(mirrored, -1, -2)
            partials = 0.5 * (partials + mirrored)
        return partials

    def metric_derivatives(self, g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(dg, dbg, ddg)`` arrays in the layout of :func:`velocity_values`.

        Only the rows needed for the velocity are formed; ``dbg`` is the
        conjugate transpose of ``dg`` and ``ddg`` is symmetrized to satisfy
        ``ddg[k, j]^H = ddg[j, k]``.
        """
        m, sp = self.m, self.space
        real = self.real_partials(g, 2)
        B = _wirtinger_map(self.active, sp.dirs, 2)
        dg = np.zeros(self.shape + (m, m, m), dtype=complex)
        ddg = np.zeros(self.shape + (m, m, m, m), dtype=complex)
        for k in sp.dirs:
            dg[..., k, :, :] = np.tensordot(B[monomial_index(sp, (k,))], real, axes=(0, 0))
            for j in sp.dirs:
                ddg[..., k, j, :, :] = np.tensordot(B[monomial_index(sp, (j,), (k,))], real, axes=(0, 0))
        dbg = np.conj(np.swapaxes(dg, -1, -2))
        ddg = 0.5 * (ddg + np.conj(np.einsum("...jkqp->...kjpq", ddg)))
        return dg, dbg, ddg

    def jet(self, field: np.ndarray, order: int, hermitian: bool = True) -> Jet:
        """Jet of a grid field (shape ``(*shape, *tensor)``) at every grid point.

        For Hermitian matrix fields the conjugation symmetry between
        holomorphic and antiholomorphic partials is imposed exactly.
        """
        rank = field.ndim - len(self.shape)
        partials = self.wirtinger_partials(field, order, hermitian)
        return Jet.from_partials(partials, order, self.space, rank)
