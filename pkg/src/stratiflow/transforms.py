"""Exact products of band-limited fields by matrix transforms.

A field of truncation ``m`` is a trigonometric polynomial in ``exp(i p x)``
and ``exp(i k pi y / 2)`` with ``|p|, |k| <= m``.  A product of two such
fields has ``|p|, |k| <= 2m``.  Sampling on a uniform grid of ``3m+1`` points
in x and ``4m+1`` points over one period ``[-2, 2)`` in y, a discrete Fourier
transform recovers every product coefficient with ``|p| <= m`` and
``|k| <= 2m`` without aliasing; the closed-form integrals of
``exp(i k pi y/2) phi_q(y)`` over ``[-1, 1]`` then give the Galerkin
coefficients.  The only error is floating-point round-off.

All transforms are dense matrix products, so results do not depend on any
FFT planning and are reproducible run to run.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .basis import (
    OMEGA,
    SQRT2PI,
    VARPI,
    Family,
    SpectralScalar,
    as_family,
    projection_integrals,
    vertical_matrix,
)


class ProductGrid:
    """Precomputed transform matrices for truncation ``m``."""

    def __init__(self, m: int):
        self.m = m
        self.nx = 3 * m + 1
        self.ny = 4 * m + 1
        self.x = 2.0 * np.pi * np.arange(self.nx) / self.nx
        self.y = -2.0 + 4.0 * np.arange(self.ny) / self.ny
        p = np.arange(-m, m + 1)
        self.ex = np.exp(1j * np.outer(self.x, p)) / SQRT2PI
        self._phi_t = {fam: np.ascontiguousarray(vertical_matrix(fam, m, self.y).T) for fam in Family}
        p_pos = np.arange(0, m + 1)
        self.ax = np.exp(-1j * np.outer(p_pos, self.x)) * (SQRT2PI / self.nx)
        K = 2 * m
        k = np.arange(-K, K + 1)
        dft = np.exp(-1j * np.outer(self.y, k) * (np.pi / 2.0)) / self.ny
        self._wy = {}
        for fam in Family:
            w = dft @ projection_integrals(fam, m, K)
            # conjugate-symmetric sum over +-k: the matrix is real
            self._wy[fam] = np.ascontiguousarray(w.real)

    # physical values ---------------------------------------------------------

    def to_grid(self, coeffs: np.ndarray, family) -> np.ndarray:
        """Real samples ``(nx, ny)`` (or a stack ``(..., nx, ny)``) of hermitian coefficients."""
        family = as_family(family)
        return (self.ex @ coeffs).real @ self._phi_t[family]

    def from_grid(self, values: np.ndarray, family) -> np.ndarray:
        """Galerkin coefficients ``(2m+1, m+1)`` of a product sampled on the grid."""
        family = as_family(family)
        m = self.m
        half = self.ax @ (values @ self._wy[family])
        out = np.empty((2 * m + 1, m + 1), dtype=complex)
        out[m:] = half
        out[m, :] = half[0].real
        out[:m] = np.conj(half[:0:-1])
        if family is OMEGA:
            out[:, 0] = 0.0
        return out


@lru_cache(maxsize=16)
def product_grid(m: int) -> ProductGrid:
    return ProductGrid(m)


def multiply(f: SpectralScalar, g: SpectralScalar, family_out) -> SpectralScalar:
    """Galerkin projection of ``f g`` onto ``family_out`` at the common truncation."""
    if f.m != g.m:
        raise ValueError("factors at different truncations")
    pg = product_grid(f.m)
    vals = pg.to_grid(f.coeffs, f.family) * pg.to_grid(g.coeffs, g.family)
    return SpectralScalar(as_family(family_out), pg.from_grid(vals, family_out))


def parity_family(a, b) -> Family:
    """Family that contains the product of an ``a`` field and a ``b`` field.

    Omega profiles are odd about ``y = -1`` in ``theta = pi (y+1)/2`` and varpi
    profiles even, so equal families multiply into varpi and mixed into omega.
    """
    return VARPI if as_family(a) is as_family(b) else OMEGA
