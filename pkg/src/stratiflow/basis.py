"""Eigenfunction bases on the strip T x [-1, 1].

Horizontal factor ``a_p(x) = exp(i p x) / sqrt(2 pi)``.  Vertical factors

* ``b_q`` (q >= 1): ``cos(q pi y / 2)`` for odd q, ``sin(q pi y / 2)`` for even q.
  These vanish at ``y = +-1`` (omega family, used for rho and u2).
* ``c_q`` (q >= 0): ``sin(q pi y / 2)`` for odd q, ``cos(q pi y / 2)`` for even q,
  with ``c_0 = 1/sqrt(2)`` so the family is orthonormal.  Their first
  derivative vanishes at ``y = +-1`` (varpi family, used for u1 and pressure).

Coefficient arrays are stored with shape ``(2m+1, m+1)`` and indexed
``[p + m, q]``.  The omega family keeps its ``q = 0`` column identically zero.

Every vertical factor is a trigonometric polynomial in ``exp(i k pi y / 2)``.
The :class:`RawTrigSlice` type uses that to multiply and integrate profiles in
closed form.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Mapping, Tuple

import numpy as np

SQRT2PI = np.sqrt(2.0 * np.pi)
HALF_PI = 0.5 * np.pi


class Family(str, Enum):
    OMEGA = "omega"
    VARPI = "varpi"

    @property
    def q_min(self) -> int:
        return 1 if self is Family.OMEGA else 0

    @property
    def flipped(self) -> "Family":
        return Family.VARPI if self is Family.OMEGA else Family.OMEGA


OMEGA = Family.OMEGA
VARPI = Family.VARPI


def as_family(family) -> Family:
    return family if isinstance(family, Family) else Family(str(family).lower())


@dataclass(frozen=True)
class ModeIndex:
    p: int
    q: int

    def validate(self, family, m: int | None = None) -> "ModeIndex":
        family = as_family(family)
        if self.q < family.q_min:
            raise ValueError(f"q={self.q} is not a valid index of the {family.value} family")
        if m is not None and (abs(self.p) > m or self.q > m):
            raise ValueError(f"mode ({self.p}, {self.q}) outside truncation m={m}")
        return self


# ---------------------------------------------------------------------------
# pointwise evaluation


def vertical_profile(family, q: int, y):
    """Evaluate ``b_q(y)`` or ``c_q(y)``.  Accepts complex ``y``."""
    family = as_family(family)
    ModeIndex(0, q).validate(family)
    y = np.asarray(y)
    arg = q * HALF_PI * y
    if family is OMEGA:
        return np.cos(arg) if q % 2 else np.sin(arg)
    if q == 0:
        return np.full(y.shape, 1.0 / np.sqrt(2.0)) + 0 * y
    return np.sin(arg) if q % 2 else np.cos(arg)


def horizontal_profile(p: int, x):
    return np.exp(1j * p * np.asarray(x)) / SQRT2PI


def eval_basis(family, idx: ModeIndex, x, y):
    """``a_p(x) b_q(y)`` (omega) or ``a_p(x) c_q(y)`` (varpi)."""
    family = as_family(family)
    idx.validate(family)
    return horizontal_profile(idx.p, x) * vertical_profile(family, idx.q, y)


def vertical_matrix(family, m: int, y) -> np.ndarray:
    """Matrix ``Phi[i, q] = phi_q(y_i)`` for ``q = 0..m`` (omega column 0 is zero)."""
    family = as_family(family)
    y = np.atleast_1d(np.asarray(y))
    out = np.zeros((y.size, m + 1), dtype=np.result_type(y.dtype, float))
    for q in range(family.q_min, m + 1):
        out[:, q] = vertical_profile(family, q, y)
    return out


def horizontal_matrix(m: int, x) -> np.ndarray:
    """Matrix ``E[j, p + m] = a_p(x_j)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = np.arange(-m, m + 1)
    return np.exp(1j * np.outer(x, p)) / SQRT2PI


@lru_cache(maxsize=None)
def _dy_factors(family: Family, m: int) -> np.ndarray:
    q = np.arange(m + 1)
    mag = q * HALF_PI
    sign = np.where(q % 2 == 0, 1.0, -1.0)
    f = sign * mag if family is OMEGA else -sign * mag
    f.setflags(write=False)
    return f


def dy_factors(family, m: int) -> np.ndarray:
    """Multipliers of the vertical derivative, indexed by q.

    ``d/dy b_q = (-1)^q (q pi/2) c_q`` and ``d/dy c_q = (-1)^(q+1) (q pi/2) b_q``.
    """
    return _dy_factors(as_family(family), m)


@lru_cache(maxsize=None)
def _wavenumbers(m: int):
    p = np.arange(-m, m + 1, dtype=float)
    q = np.arange(m + 1, dtype=float)
    k2 = p[:, None] ** 2 + (q[None, :] * HALF_PI) ** 2
    for a in (p, q, k2):
        a.setflags(write=False)
    return p, q, k2


def wavenumbers(m: int):
    """``(p, q, kappa2)`` with ``kappa2[p+m, q] = p^2 + (q pi/2)^2``."""
    return _wavenumbers(m)


def family_mask(family, m: int) -> np.ndarray:
    mask = np.ones((2 * m + 1, m + 1), dtype=bool)
    if as_family(family) is OMEGA:
        mask[:, 0] = False
    return mask


# ---------------------------------------------------------------------------
# coefficient container


@dataclass(frozen=True, eq=False)
class SpectralScalar:
    """Coefficients of a scalar field in one of the two product bases."""

    family: Family
    coeffs: np.ndarray

    def __post_init__(self):
        fam = as_family(self.family)
        object.__setattr__(self, "family", fam)
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[0] != 2 * c.shape[1] - 1:
            raise ValueError(f"coefficient array must have shape (2m+1, m+1), got {c.shape}")
        if fam is OMEGA and np.any(c[:, 0] != 0):
            raise ValueError("omega family has no q=0 modes")
        object.__setattr__(self, "coeffs", c)

    @property
    def m(self) -> int:
        return self.coeffs.shape[1] - 1

    @classmethod
    def zeros(cls, family, m: int) -> "SpectralScalar":
        return cls(as_family(family), np.zeros((2 * m + 1, m + 1), dtype=complex))

    @classmethod
    def from_modes(cls, family, m: int, modes: Mapping[Tuple[int, int], complex],
                   hermitian: bool = True) -> "SpectralScalar":
        """Build from ``{(p, q): value}``.

        With ``hermitian=True`` the conjugate partner ``(-p, q)`` is filled in
        so the field is real; ``p = 0`` values must then be real.
        """
        family = as_family(family)
        c = np.zeros((2 * m + 1, m + 1), dtype=complex)
        for (p, q), v in modes.items():
            ModeIndex(p, q).validate(family, m)
            c[p + m, q] += v
            if hermitian and p != 0:
                c[-p + m, q] += np.conj(v)
        if hermitian and np.any(np.abs(c[m].imag) > 0):
            raise ValueError("p=0 coefficients of a real field must be real")
        return cls(family, c)

    def coeff(self, p: int, q: int) -> complex:
        ModeIndex(p, q).validate(self.family, self.m)
        return complex(self.coeffs[p + self.m, q])

    def with_coeffs(self, coeffs) -> "SpectralScalar":
        return SpectralScalar(self.family, coeffs)

    def reality_defect(self) -> float:
        c = self.coeffs
        return float(np.max(np.abs(c - np.conj(c[::-1])), initial=0.0))

    def is_real(self, tol: float = 0.0) -> bool:
        return self.reality_defect() <= tol

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def __add__(self, other: "SpectralScalar") -> "SpectralScalar":
        _check_compatible(self, other)
        return SpectralScalar(self.family, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralScalar") -> "SpectralScalar":
        _check_compatible(self, other)
        return SpectralScalar(self.family, self.coeffs - other.coeffs)

    def __neg__(self) -> "SpectralScalar":
        return SpectralScalar(self.family, -self.coeffs)

    def __mul__(self, a) -> "SpectralScalar":
        return SpectralScalar(self.family, self.coeffs * a)

    __rmul__ = __mul__

    def __call__(self, x, y):
        """Evaluate at matching arrays of points."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y)
        shape = np.broadcast(x, y).shape
        x, y = np.broadcast_to(x, shape).ravel(), np.broadcast_to(y, shape).ravel()
        ex = horizontal_matrix(self.m, x)
        phi = vertical_matrix(self.family, self.m, y)
        vals = np.einsum("np,pq,nq->n", ex, self.coeffs, phi)
        return vals.reshape(shape)


def _check_compatible(a: SpectralScalar, b: SpectralScalar):
    if a.family is not b.family or a.m != b.m:
        raise ValueError(f"incompatible fields: {a.family.value}/m={a.m} vs {b.family.value}/m={b.m}")


# ---------------------------------------------------------------------------
# raw trigonometric slices


@dataclass(frozen=True, eq=False)
class RawTrigSlice:
    """Profile ``sum_k gamma_k cos(k pi y/2) + sigma_k sin(k pi y/2)``, ``k = 0..K``.

    ``sigma[0]`` is stored for alignment and is always zero.
    """

    gamma: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=complex).ravel()
        s = np.asarray(self.sigma, dtype=complex).ravel()
        if g.shape != s.shape:
            raise ValueError("gamma and sigma must have the same length K+1")
        s = s.copy()
        s[0] = 0.0
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "sigma", s)

    @property
    def K(self) -> int:
        return self.gamma.size - 1

    @classmethod
    def zeros(cls, K: int) -> "RawTrigSlice":
        return cls(np.zeros(K + 1), np.zeros(K + 1))

    def to_exponential(self) -> np.ndarray:
        """Coefficients ``e[k + K]`` of ``exp(i k pi y/2)``, ``k = -K..K``."""
        K = self.K
        e = np.zeros(2 * K + 1, dtype=complex)
        e[K] = self.gamma[0]
        k = np.arange(1, K + 1)
        e[K + k] = 0.5 * (self.gamma[1:] - 1j * self.sigma[1:])
        e[K - k] = 0.5 * (self.gamma[1:] + 1j * self.sigma[1:])
        return e

    @classmethod
    def from_exponential(cls, e: np.ndarray) -> "RawTrigSlice":
        e = np.asarray(e, dtype=complex)
        K = (e.size - 1) // 2
        g = np.empty(K + 1, dtype=complex)
        s = np.zeros(K + 1, dtype=complex)
        g[0] = e[K]
        g[1:] = e[K + 1:] + e[K - 1::-1]
        s[1:] = 1j * (e[K + 1:] - e[K - 1::-1])
        return cls(g, s)

    def padded(self, K: int) -> "RawTrigSlice":
        if K < self.K:
            raise ValueError("cannot pad to a smaller K")
        g = np.zeros(K + 1, dtype=complex)
        s = np.zeros(K + 1, dtype=complex)
        g[: self.K + 1] = self.gamma
        s[: self.K + 1] = self.sigma
        return RawTrigSlice(g, s)

    def __add__(self, other: "RawTrigSlice") -> "RawTrigSlice":
        K = max(self.K, other.K)
        a, b = self.padded(K), other.padded(K)
        return RawTrigSlice(a.gamma + b.gamma, a.sigma + b.sigma)

    def __mul__(self, c) -> "RawTrigSlice":
        return RawTrigSlice(self.gamma * c, self.sigma * c)

    __rmul__ = __mul__

    def __call__(self, y):
        y = np.asarray(y)
        k = np.arange(self.K + 1)
        arg = np.multiply.outer(y, k * HALF_PI)
        return np.cos(arg) @ self.gamma + np.sin(arg) @ self.sigma


def basis_slice(family, q: int, K: int | None = None) -> RawTrigSlice:
    """Raw representation of a single ``b_q`` / ``c_q``."""
    family = as_family(family)
    ModeIndex(0, q).validate(family)
    K = q if K is None else K
    g = np.zeros(K + 1)
    s = np.zeros(K + 1)
    cos_like = (q % 2 == 1) if family is OMEGA else (q % 2 == 0)
    if family is VARPI and q == 0:
        g[0] = 1.0 / np.sqrt(2.0)
    elif cos_like:
        g[q] = 1.0
    else:
        s[q] = 1.0
    return RawTrigSlice(g, s)


def to_raw_trig(f: SpectralScalar, p: int) -> RawTrigSlice:
    """Vertical profile ``sum_q coeff(p, q) phi_q(y)`` of one horizontal mode."""
    m = f.m
    if abs(p) > m:
        raise ValueError(f"|p|={abs(p)} exceeds truncation m={m}")
    col = f.coeffs[p + m]
    q = np.arange(m + 1)
    odd = q % 2 == 1
    g = np.zeros(m + 1, dtype=complex)
    s = np.zeros(m + 1, dtype=complex)
    if f.family is OMEGA:
        g[odd] = col[odd]
        s[~odd] = col[~odd]
        s[0] = 0.0
    else:
        s[odd] = col[odd]
        g[~odd] = col[~odd]
        g[0] = col[0] / np.sqrt(2.0)
    return RawTrigSlice(g, s)


def multiply_slices(u: RawTrigSlice, v: RawTrigSlice) -> RawTrigSlice:
    """Exact product; the result has ``K = K_u + K_v``.

    Product-to-sum is the discrete convolution of the exponential coefficients.
    """
    return RawTrigSlice.from_exponential(np.convolve(u.to_exponential(), v.to_exponential()))


def exp_integral(n) -> np.ndarray:
    """``int_{-1}^{1} exp(i n pi y / 2) dy`` for integer ``n`` (real valued)."""
    n = np.asarray(n)
    out = np.full(n.shape, 2.0)
    nz = n != 0
    out[nz] = 4.0 * np.sin(n[nz] * HALF_PI) / (n[nz] * np.pi)
    # sin(n pi/2) is exactly 0 or +-1 for integer n; clean the round-off
    out[nz & (n % 2 == 0)] = 0.0
    return out


def integrate_slice(u: RawTrigSlice):
    """``int_{-1}^{1} u(y) dy``; only the constant and odd cosines contribute."""
    k = np.arange(1, u.K + 1)
    return 2.0 * u.gamma[0] + np.sum(u.gamma[1:] * exp_integral(k))


def inner_product_with_basis(u: RawTrigSlice, family, q: int):
    """``int_{-1}^{1} u(y) phi_q(y) dy`` by exact multiplication and integration."""
    return integrate_slice(multiply_slices(u, basis_slice(family, q)))


# ---------------------------------------------------------------------------
# exponential-form matrices shared with the product kernels


@lru_cache(maxsize=None)
def exponential_matrix(family: Family, m: int, K: int | None = None) -> np.ndarray:
    """``T[k + K, q]``: exponential coefficients of ``phi_q`` for ``|k| <= K``."""
    family = as_family(family)
    K = m if K is None else K
    T = np.zeros((2 * K + 1, m + 1), dtype=complex)
    for q in range(family.q_min, m + 1):
        T[:, q] = basis_slice(family, q, K).to_exponential()
    T.setflags(write=False)
    return T


@lru_cache(maxsize=None)
def projection_integrals(family: Family, m: int, K: int) -> np.ndarray:
    """``J[k + K, q] = int_{-1}^{1} exp(i k pi y/2) phi_q(y) dy`` for ``|k| <= K``."""
    family = as_family(family)
    T = exponential_matrix(family, m, m)
    k = np.arange(-K, K + 1)
    j = np.arange(-m, m + 1)
    H = exp_integral(k[:, None] + j[None, :])
    J = H @ T
    J.setflags(write=False)
    return J


# ---------------------------------------------------------------------------
# grid oracle


@dataclass(frozen=True, eq=False)
class GridField:
    """Samples on a uniform x grid times a Gauss-Legendre y grid."""

    values: np.ndarray
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    wy: np.ndarray = field(repr=False)

    @property
    def nx(self) -> int:
        return self.x.size

    @property
    def ny(self) -> int:
        return self.y.size

    def with_values(self, values) -> "GridField":
        return GridField(np.asarray(values), self.x, self.y, self.wy)

    def integrate(self) -> float:
        return float(np.real(np.sum(self.values @ self.wy) * (2.0 * np.pi / self.nx)))


def make_grid(m: int, refine: int = 1, nx: int | None = None, ny: int | None = None) -> GridField:
    """Oracle grid with ``nx >= 3m+1`` and at least ``6m`` Gauss-Legendre nodes."""
    nx = refine * (3 * m + 1) if nx is None else nx
    ny = refine * max(6 * m, 2) if ny is None else ny
    x = 2.0 * np.pi * np.arange(nx) / nx
    y, wy = np.polynomial.legendre.leggauss(ny)
    return GridField(np.zeros((nx, ny)), x, y, wy)


def _check_resolution(grid: GridField, m: int):
    if grid.nx < 3 * m + 1 or grid.ny < 6 * m:
        raise ValueError(
            f"grid {grid.nx}x{grid.ny} too coarse for m={m}: need nx >= {3 * m + 1}, ny >= {6 * m}")


def synthesize(f: SpectralScalar, grid: GridField | None = None, real: bool = True) -> GridField:
    grid = make_grid(f.m) if grid is None else grid
    _check_resolution(grid, f.m)
    vals = horizontal_matrix(f.m, grid.x) @ f.coeffs @ vertical_matrix(f.family, f.m, grid.y).T
    return grid.with_values(vals.real if real else vals)


def analyze(g: GridField, family, m: int) -> SpectralScalar:
    family = as_family(family)
    _check_resolution(g, m)
    ex = horizontal_matrix(m, g.x).conj().T * (2.0 * np.pi / g.nx)
    phi = vertical_matrix(family, m, g.y) * g.wy[:, None]
    c = ex @ g.values @ phi
    if family is OMEGA:
        c[:, 0] = 0.0
    return SpectralScalar(family, c)
