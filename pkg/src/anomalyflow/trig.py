"""Trigonometric-polynomial fields on the unit complex torus and their exact jets.

A mode ``exp(2 pi i (kx . x + ky . y))`` with ``z = x + i y`` equals
``exp(lam . z + mu . zbar)`` where ``lam = pi (i kx + ky)`` and
``mu = pi (i kx - ky)``, so its Taylor jet at any point is known in closed
form.  Metric families built from such fields give derivative data that is
exact to rounding, which is what the identity checks need.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import Jet, JetSpace, jeinsum, linear_exp_jet

REAL_COORDS = ("x1", "y1", "x2", "y2", "x3", "y3")


@dataclass
class TrigField:
    """``f(z) = sum_n coeffs[n] exp(2 pi i (kx[n] . x + ky[n] . y))``.

    ``coeffs`` has shape ``(n_modes, *tensor_shape)``.
    """

    kx: np.ndarray
    ky: np.ndarray
    coeffs: np.ndarray

    @property
    def m(self) -> int:
        return self.kx.shape[1]

    @property
    def tensor_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[1:]

    def rates(self) -> tuple[np.ndarray, np.ndarray]:
        lam = np.pi * (1j * self.kx + self.ky)
        mu = np.pi * (1j * self.kx - self.ky)
        return lam, mu

    def active_dirs(self) -> tuple[int, ...]:
        used = np.any((self.kx != 0) | (self.ky != 0), axis=0)
        return tuple(int(j) for j in np.flatnonzero(used))

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        """Values at complex points ``z`` of shape ``(..., m)``."""
        z = np.asarray(z)
        phase = 2j * np.pi * (z.real @ self.kx.T + z.imag @ self.ky.T)
        return np.tensordot(np.exp(phase), self.coeffs, axes=([-1], [0]))

    def jet(self, z: np.ndarray, order: int, space: JetSpace) -> Jet:
        """Exact jet at points ``z`` (shape ``(npts, m)``); batch axis is the point."""
        z = np.atleast_2d(z)
        lam, mu = self.rates()
        phase = np.exp(2j * np.pi * (z.real @ self.kx.T + z.imag @ self.ky.T))  # (npts, nmodes)
        rank = len(self.tensor_shape)
        out = None
        for n in range(self.kx.shape[0]):
            mode = linear_exp_jet(space, order, lam[n], mu[n], phase[:, n])
            c = mode.c.reshape(mode.c.shape + (1,) * rank) * self.coeffs[n]
            out = c if out is None else out + c
        return Jet(out, order, space, rank)

    def d_hol(self, j: int) -> "TrigField":
        lam, _ = self.rates()
        return TrigField(self.kx, self.ky, self.coeffs * _bcast(lam[:, j], self.coeffs))

    def d_anti(self, j: int) -> "TrigField":
        _, mu = self.rates()
        return TrigField(self.kx, self.ky, self.coeffs * _bcast(mu[:, j], self.coeffs))


def _bcast(v: np.ndarray, like: np.ndarray) -> np.ndarray:
    return v.reshape((-1,) + (1,) * (like.ndim - 1))


def _random_wavevectors(rng, m, dirs, n_modes, kmax=1):
    kx = np.zeros((n_modes, m), dtype=int)
    ky = np.zeros((n_modes, m), dtype=int)
    for n in range(n_modes):
        while True:
            for j in dirs:
                kx[n, j], ky[n, j] = rng.integers(-kmax, kmax + 1, size=2)
            if np.any(kx[n]) or np.any(ky[n]):
                break
    return kx, ky


def real_field(kx, ky, coeffs) -> TrigField:
    """Add the conjugate modes so the field is real (or Hermitian for matrix coefficients)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.ndim == 3:
        conj = np.conj(np.swapaxes(coeffs, -1, -2))
    else:
        conj = np.conj(coeffs)
    return TrigField(np.concatenate([kx, -kx]), np.concatenate([ky, -ky]),
                     np.concatenate([coeffs, conj]))


def random_potential(rng: np.random.Generator, m: int = 3, dirs=None, n_modes: int = 3,
                     kmax: int = 1) -> TrigField:
    """Random real trig polynomial with unit-size complex amplitudes."""
    dirs = tuple(range(m)) if dirs is None else tuple(dirs)
    kx, ky = _random_wavevectors(rng, m, dirs, n_modes, kmax)
    amp = (rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)) / np.sqrt(2 * n_modes)
    return real_field(kx, ky, amp)


def kahler_metric_field(potential: TrigField, eps: float) -> TrigField:
    """``g_{kbar j} = delta + eps d_j dbar_k phi`` as a matrix-valued field ``G[k, j]``."""
    m = potential.m
    lam, mu = potential.rates()
    c = eps * np.einsum("n,nk,nj->nkj", potential.coeffs, mu, lam)
    kx = np.concatenate([np.zeros((1, m), dtype=int), potential.kx])
    ky = np.concatenate([np.zeros((1, m), dtype=int), potential.ky])
    return TrigField(kx, ky, np.concatenate([np.eye(m, dtype=complex)[None], c]))


def random_kahler_field(rng: np.random.Generator, m: int = 3, eps: float = 0.1, dirs=None,
                        n_modes: int = 3, kmax: int = 1, min_eig: float = 0.5,
                        probe: int = 64) -> tuple[TrigField, TrigField]:
    """Kähler metric ``delta + eps ddbar phi`` with unit-size Hessian modes.

    Each potential mode is divided by ``pi^2 |k|^2`` so that ``eps`` measures
    the metric perturbation directly.  Returns ``(metric, potential)``.
    """
    while True:
        pot = random_potential(rng, m, dirs, n_modes, kmax)
        scale = np.pi ** 2 * (np.sum(pot.kx ** 2, axis=1) + np.sum(pot.ky ** 2, axis=1))
        pot = TrigField(pot.kx, pot.ky, pot.coeffs / scale)
        field = kahler_metric_field(pot, eps)
        bound = np.sum(np.linalg.norm(field.coeffs[1:], 2, axis=(1, 2)))
        if 1 - bound >= min_eig:
            return field, pot
        pts = rng.random((probe, m)) + 1j * rng.random((probe, m))
        if np.linalg.eigvalsh(field.evaluate(pts)).min() >= min_eig:
            return field, pot


def random_hermitian_field(rng: np.random.Generator, m: int = 3, eps: float = 0.1, dirs=None,
                           n_modes: int = 3, kmax: int = 1, min_eig: float = 0.5,
                           probe: int = 64) -> TrigField:
    """``I + eps H`` with ``H`` a random Hermitian trig polynomial.

    Resampled until the smallest eigenvalue over ``probe`` random points
    and the worst-case amplitude bound both exceed ``min_eig``.
    """
    dirs = tuple(range(m)) if dirs is None else tuple(dirs)
    while True:
        kx, ky = _random_wavevectors(rng, m, dirs, n_modes, kmax)
        a = (rng.normal(size=(n_modes, m, m)) + 1j * rng.normal(size=(n_modes, m, m))) / np.sqrt(2 * n_modes)
        h = real_field(kx, ky, eps * a)
        zero = np.zeros((1, m), dtype=int)
        field = TrigField(np.concatenate([zero, h.kx]), np.concatenate([zero, h.ky]),
                          np.concatenate([np.eye(m, dtype=complex)[None], h.coeffs]))
        bound = sum(np.linalg.norm(c, 2) for c in h.coeffs)
        if 1 - bound >= min_eig:
            return field
        pts = rng.random((probe, m)) + 1j * rng.random((probe, m))
        if np.linalg.eigvalsh(field.evaluate(pts)).min() >= min_eig:
            return field


def random_points(rng: np.random.Generator, n: int, m: int = 3) -> np.ndarray:
    return rng.random((n, m)) + 1j * rng.random((n, m))


def parse_potential(text: str, m: int = 3):
    """Compile a real expression in ``x1, y1, ..., pi`` into a vectorized callable.

    The callable takes real coordinate arrays keyed by name and returns the
    potential values.
    """
    import sympy as sp

    names = REAL_COORDS[:2 * m]
    symbols = sp.symbols(names, real=True)
    local = dict(zip(names, symbols))
    local["pi"] = sp.pi
    try:
        expr = sp.sympify(text, locals=local)
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise ValueError(f"cannot parse potential {text!r}: {exc}") from None
    extra = expr.free_symbols - set(symbols)
    if extra:
        raise ValueError(f"unknown symbols in potential: {sorted(map(str, extra))}")
    fn = sp.lambdify(symbols, expr, "numpy")

    def evaluate(coords: dict) -> np.ndarray:
        shape = np.broadcast_shapes(*(np.shape(v) for v in coords.values())) if coords else ()
        args = [np.broadcast_to(np.asarray(coords.get(n, 0.0), dtype=float), shape) for n in names]
        return np.broadcast_to(np.asarray(fn(*args), dtype=float), shape)

    return evaluate


def trig_field_from_samples(values: np.ndarray, axes: list[tuple[int, str]], m: int = 3,
                            tol: float = 1e-12) -> TrigField:
    """Recover the exact modes of a band-limited real sample by FFT.

    ``values`` is sampled on the uniform unit-period grid spanned by ``axes``
    (one ``(direction, 'x' | 'y')`` pair per array axis).
    """
    spec = np.fft.fftn(values) / values.size
    freqs = [np.fft.fftfreq(n, d=1.0 / n).astype(int) for n in values.shape]
    idx = np.argwhere(np.abs(spec) > tol * max(1.0, np.abs(spec).max()))
    kx = np.zeros((len(idx), m), dtype=int)
    ky = np.zeros((len(idx), m), dtype=int)
    for r, multi in enumerate(idx):
        for ax, i in enumerate(multi):
            j, kind = axes[ax]
            (kx if kind == "x" else ky)[r, j] = freqs[ax][i]
    return TrigField(kx, ky, spec[tuple(idx.T)])


def scalar_times(s: Jet, t: Jet) -> Jet:
    return jeinsum(",ab->ab", s, t)
