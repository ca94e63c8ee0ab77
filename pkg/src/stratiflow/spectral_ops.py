"""Coefficient-space operators: derivatives, truncation, Laplacian inversion,
Leray projection, mean/fluctuation split and Sobolev norms.

Norm convention: ``||f||_{H^k}^2 = sum (1 + kappa^2)^k |F|^2`` with
``kappa^2 = p^2 + (q pi/2)^2``, and the homogeneous ``||f||_{\\dot H^n}^2 =
sum kappa^(2n) |F|^2``, which equals the sum over all order-n derivatives
``binom(n, s) ||d_x^s d_y^(n-s) f||^2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import (
    HALF_PI,
    OMEGA,
    SQRT2PI,
    VARPI,
    Family,
    SpectralScalar,
    as_family,
    dy_factors,
    vertical_matrix,
    wavenumbers,
)


@dataclass(frozen=True, eq=False)
class VelocityField:
    """Velocity with ``u1`` in the varpi family and ``u2`` in the omega family."""

    u1: SpectralScalar
    u2: SpectralScalar

    def __post_init__(self):
        if self.u1.family is not VARPI or self.u2.family is not OMEGA:
            raise ValueError("velocity needs u1 in the varpi family and u2 in the omega family")
        if self.u1.m != self.u2.m:
            raise ValueError("velocity components at different truncations")

    @property
    def m(self) -> int:
        return self.u1.m

    @classmethod
    def zeros(cls, m: int) -> "VelocityField":
        return cls(SpectralScalar.zeros(VARPI, m), SpectralScalar.zeros(OMEGA, m))

    def __add__(self, other: "VelocityField") -> "VelocityField":
        return VelocityField(self.u1 + other.u1, self.u2 + other.u2)

    def __sub__(self, other: "VelocityField") -> "VelocityField":
        return VelocityField(self.u1 - other.u1, self.u2 - other.u2)

    def __neg__(self) -> "VelocityField":
        return VelocityField(-self.u1, -self.u2)

    def __mul__(self, a) -> "VelocityField":
        return VelocityField(self.u1 * a, self.u2 * a)

    __rmul__ = __mul__

    def l2_norm(self) -> float:
        return float(np.hypot(self.u1.l2_norm(), self.u2.l2_norm()))


@dataclass(frozen=True, eq=False)
class Profile:
    """Real function of ``y`` only, expanded in the ``b_q`` or ``c_q`` family."""

    family: Family
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "family", as_family(self.family))
        c = np.asarray(self.coeffs, dtype=float).ravel().copy()
        if self.family is OMEGA:
            c[0] = 0.0
        object.__setattr__(self, "coeffs", c)

    @property
    def m(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, y):
        y = np.asarray(y)
        return (vertical_matrix(self.family, self.m, y.ravel()) @ self.coeffs).reshape(y.shape)

    def dy(self) -> "Profile":
        return Profile(self.family.flipped, self.coeffs * dy_factors(self.family, self.m))

    def derivative(self, n: int) -> "Profile":
        out = self
        for _ in range(n):
            out = out.dy()
        return out

    def sobolev_norm(self, k: float = 0) -> float:
        q = np.arange(self.m + 1)
        w = (1.0 + (q * HALF_PI) ** 2) ** k
        return float(np.sqrt(np.sum(w * self.coeffs ** 2)))

    def as_field(self, m: int | None = None) -> SpectralScalar:
        """The same function viewed on the strip (p = 0 column only)."""
        m = self.m if m is None else m
        c = np.zeros((2 * m + 1, m + 1), dtype=complex)
        n = min(m, self.m) + 1
        c[m, :n] = self.coeffs[:n] * SQRT2PI
        return SpectralScalar(self.family, c)


# MeanProfile is a Profile in the omega family (the x-average of rho).
MeanProfile = Profile


# ---------------------------------------------------------------------------
# differential operators


def dx(f: SpectralScalar) -> SpectralScalar:
    p, _, _ = wavenumbers(f.m)
    return f.with_coeffs(f.coeffs * (1j * p)[:, None])


def dy(f: SpectralScalar) -> SpectralScalar:
    return SpectralScalar(f.family.flipped, f.coeffs * dy_factors(f.family, f.m)[None, :])


def derivative(f: SpectralScalar, sx: int, sy: int) -> SpectralScalar:
    out = f
    for _ in range(sy):
        out = dy(out)
    if sx:
        p, _, _ = wavenumbers(f.m)
        out = out.with_coeffs(out.coeffs * ((1j * p) ** sx)[:, None])
    return out


def laplacian(f: SpectralScalar) -> SpectralScalar:
    _, _, k2 = wavenumbers(f.m)
    return f.with_coeffs(-k2 * f.coeffs)


def inv_neg_laplacian(f: SpectralScalar) -> SpectralScalar:
    """Divide by ``kappa^2``; the varpi (0, 0) mode maps to zero."""
    _, _, k2 = wavenumbers(f.m)
    c = np.zeros_like(f.coeffs)
    nz = k2 > 0
    c[nz] = f.coeffs[nz] / k2[nz]
    return f.with_coeffs(c)


def gradient(f: SpectralScalar) -> VelocityField:
    """Gradient of a varpi-family scalar (a pressure or potential)."""
    if f.family is not VARPI:
        raise ValueError("gradient is defined for varpi-family potentials")
    return VelocityField(dx(f), dy(f))


def perp_gradient(psi: SpectralScalar) -> VelocityField:
    """``(-d_y psi, d_x psi)`` for an omega-family stream function."""
    if psi.family is not OMEGA:
        raise ValueError("stream functions live in the omega family")
    return VelocityField(-dy(psi), dx(psi))


def divergence(v: VelocityField) -> SpectralScalar:
    """``d_x u1 + d_y u2`` as a varpi-family field."""
    return dx(v.u1) + dy(v.u2)


# ---------------------------------------------------------------------------
# truncation


def project(f: SpectralScalar, m_new: int) -> SpectralScalar:
    """Zero every mode with ``|p| > m_new`` or ``q > m_new`` (shape kept)."""
    m = f.m
    if m_new > m:
        raise ValueError(f"cannot project m={m} onto larger m'={m_new}")
    c = f.coeffs.copy()
    p, q, _ = wavenumbers(m)
    c[(np.abs(p)[:, None] > m_new) | (q[None, :] > m_new)] = 0.0
    return f.with_coeffs(c)


def truncate(f: SpectralScalar, m_new: int) -> SpectralScalar:
    """Project and shrink the storage to truncation ``m_new``."""
    m = f.m
    if m_new > m:
        raise ValueError(f"cannot truncate m={m} to larger m'={m_new}")
    return f.with_coeffs(f.coeffs[m - m_new: m + m_new + 1, : m_new + 1])


def embed(f: SpectralScalar, m_new: int) -> SpectralScalar:
    """Zero-pad the storage to a larger truncation."""
    m = f.m
    if m_new < m:
        raise ValueError("embed needs m' >= m")
    c = np.zeros((2 * m_new + 1, m_new + 1), dtype=complex)
    c[m_new - m: m_new + m + 1, : m + 1] = f.coeffs
    return f.with_coeffs(c)


def project_velocity(v: VelocityField, m_new: int) -> VelocityField:
    return VelocityField(project(v.u1, m_new), project(v.u2, m_new))


# ---------------------------------------------------------------------------
# Leray projection


def leray_arrays(c1: np.ndarray, c2: np.ndarray):
    """Modewise ``v + grad (-Lap)^{-1} div v`` on raw coefficient arrays."""
    m = c1.shape[1] - 1
    p, _, k2 = wavenumbers(m)
    s = dy_factors(OMEGA, m)[None, :]
    ip = (1j * p)[:, None]
    div = ip * c1 + s * c2
    phi = np.zeros_like(div)
    nz = k2 > 0
    phi[nz] = div[nz] / k2[nz]
    # d_x phi stays varpi; d_y phi maps varpi -> omega with factor -s
    r1 = c1 + ip * phi
    r2 = c2 - s * phi
    r2[:, 0] = 0.0
    r2[m, :] = 0.0  # p = 0: the projection removes every vertical component
    return r1, r2


def leray(v: VelocityField) -> VelocityField:
    r1, r2 = leray_arrays(v.u1.coeffs, v.u2.coeffs)
    return VelocityField(v.u1.with_coeffs(r1), v.u2.with_coeffs(r2))


# ---------------------------------------------------------------------------
# mean / fluctuation split


def split_mean(f: SpectralScalar):
    """Return ``(f_tilde, f_bar)``: the x-average profile and the remainder."""
    m = f.m
    mean = Profile(f.family, f.coeffs[m].real / SQRT2PI)
    c = f.coeffs.copy()
    c[m] = 0.0
    return mean, f.with_coeffs(c)


def fluctuation(f: SpectralScalar) -> SpectralScalar:
    c = f.coeffs.copy()
    c[f.m] = 0.0
    return f.with_coeffs(c)


# ---------------------------------------------------------------------------
# norms and inner products


def sobolev_weights(m: int, k: float) -> np.ndarray:
    _, _, k2 = wavenumbers(m)
    return (1.0 + k2) ** k


def homogeneous_weights(m: int, n: float) -> np.ndarray:
    _, _, k2 = wavenumbers(m)
    if n == 0:
        return np.ones_like(k2)
    return k2 ** n


def sobolev_norm(f, k: float = 0) -> float:
    """``H^k`` norm of a scalar, a velocity (componentwise sum) or a profile."""
    if isinstance(f, Profile):
        return f.sobolev_norm(k)
    if isinstance(f, VelocityField):
        return float(np.hypot(sobolev_norm(f.u1, k), sobolev_norm(f.u2, k)))
    w = sobolev_weights(f.m, k)
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2)))


def homogeneous_norm(f, n: float) -> float:
    if isinstance(f, VelocityField):
        return float(np.hypot(homogeneous_norm(f.u1, n), homogeneous_norm(f.u2, n)))
    w = homogeneous_weights(f.m, n)
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2)))


def inner(f: SpectralScalar, g: SpectralScalar, k: float = 0, homogeneous: bool = False) -> float:
    """Real ``H^k`` (or homogeneous) inner product of two real fields."""
    if f.family is not g.family or f.m != g.m:
        raise ValueError("inner product of incompatible fields")
    w = homogeneous_weights(f.m, k) if homogeneous else sobolev_weights(f.m, k)
    return float(np.sum(w * (f.coeffs.conj() * g.coeffs).real))


def inner_velocity(a: VelocityField, b: VelocityField, k: float = 0, homogeneous: bool = False) -> float:
    return inner(a.u1, b.u1, k, homogeneous) + inner(a.u2, b.u2, k, homogeneous)
