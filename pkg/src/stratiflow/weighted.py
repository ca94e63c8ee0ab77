"""Integrals against a y-dependent weight.

For a profile ``h(y)`` and two real fields ``f`` (family A) and ``g``
(family B) on the strip,

    int f g h dx dy = sum_p sum_{q,q'} F[p,q] M[q,q'] conj(G[p,q'])

with the Gram matrix ``M[q,q'] = int_{-1}^{1} phi^A_q phi^B_q' h dy``.  The
matrix is exact: every profile is a trigonometric polynomial, so ``M`` is a
finite sum of closed-form integrals.
"""
from __future__ import annotations

from math import comb

import numpy as np

from .basis import (
    SpectralScalar,
    as_family,
    basis_slice,
    dy_factors,
    exponential_matrix,
    exp_integral,
    integrate_slice,
    multiply_slices,
)
from .spectral_ops import Profile

# the constant function 1 = sqrt(2) c_0
UNIT_PROFILE = Profile("varpi", [np.sqrt(2.0)])


def weighted_gram(h: Profile, fam_a, fam_b, m: int) -> np.ndarray:
    """``M[q, q'] = int phi^A_q(y) phi^B_q'(y) h(y) dy`` for ``q, q' = 0..m``."""
    fam_a, fam_b = as_family(fam_a), as_family(fam_b)
    ta = exponential_matrix(fam_a, m)
    tb = exponential_matrix(fam_b, m)
    th = exponential_matrix(h.family, h.m) @ h.coeffs.astype(complex)
    kh = h.m
    n = np.arange(-2 * m, 2 * m + 1)
    k3 = np.arange(-kh, kh + 1)
    c = exp_integral(n[:, None] + k3[None, :]) @ th
    idx = np.arange(2 * m + 1)
    H = c[idx[:, None] + idx[None, :]]
    return (ta.T @ H @ tb).real


def weighted_gram_slices(h: Profile, fam_a, fam_b, m: int) -> np.ndarray:
    """Reference for :func:`weighted_gram` built from slice products."""
    fam_a, fam_b = as_family(fam_a), as_family(fam_b)
    hs = None
    for q in range(h.family.q_min, h.m + 1):
        term = basis_slice(h.family, q) * h.coeffs[q]
        hs = term if hs is None else hs + term
    M = np.zeros((m + 1, m + 1))
    if hs is None:
        return M
    for q in range(fam_a.q_min, m + 1):
        hq = multiply_slices(hs, basis_slice(fam_a, q))
        for r in range(fam_b.q_min, m + 1):
            M[q, r] = integrate_slice(multiply_slices(hq, basis_slice(fam_b, r))).real
    return M


def _derivative_coeffs(f: SpectralScalar, sy: int):
    c = f.coeffs
    fam = f.family
    for _ in range(sy):
        c = c * dy_factors(fam, f.m)[None, :]
        fam = fam.flipped
    return c, fam


def weighted_bilinear(f: SpectralScalar, g: SpectralScalar, h: Profile | None, order: int,
                      homogeneous: bool = True) -> float:
    """Derivative-summed weighted integral of two real fields.

    Homogeneous:   ``sum_{s1+s2=n} binom(n, s1) int d^s f d^s g h``.
    Inhomogeneous: ``sum_{j<=k} binom(k, j)`` of the homogeneous order-j sums,
    which for ``h = 1`` equals the ``(1+kappa^2)^k`` inner product.

    ``h = None`` means the constant weight 1.
    """
    if f.m != g.m:
        raise ValueError("fields at different truncations")
    m = f.m
    p2 = np.arange(-m, m + 1, dtype=float) ** 2
    total = 0.0
    grams = {}
    for sy in range(order + 1):
        if homogeneous:
            xw = comb(order, sy) * (p2 ** (order - sy) if order - sy else np.ones_like(p2))
        else:
            xw = comb(order, sy) * (1.0 + p2) ** (order - sy)
        fc, fa = _derivative_coeffs(f, sy)
        gc, ga = _derivative_coeffs(g, sy)
        if h is None and fa is ga:
            rows = np.sum(fc * gc.conj(), axis=1).real
        else:
            if (fa, ga) not in grams:
                grams[fa, ga] = weighted_gram(UNIT_PROFILE if h is None else h, fa, ga, m)
            M = grams[fa, ga]
            rows = np.einsum("pq,qr,pr->p", fc, M, gc.conj()).real
        total += float(np.sum(xw * rows))
    return total


def weighted_velocity_sq(u1: SpectralScalar, u2: SpectralScalar, w_minus_one: Profile | None,
                         order: int, homogeneous: bool = True) -> float:
    """``sum over components`` of the weighted square with weight ``1 + g``."""
    total = 0.0
    for c in (u1, u2):
        total += weighted_bilinear(c, c, None, order, homogeneous)
        if w_minus_one is not None:
            total += weighted_bilinear(c, c, w_minus_one, order, homogeneous)
    return total


def weighted_sobolev_sq(f: SpectralScalar, w_minus_one: Profile | None, k: int) -> float:
    """``||f||^2_{H^k_w}`` with ``w = 1 + g``."""
    total = weighted_bilinear(f, f, None, k, homogeneous=False)
    if w_minus_one is not None:
        total += weighted_bilinear(f, f, w_minus_one, k, homogeneous=False)
    return total

