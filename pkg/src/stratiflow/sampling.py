"""Sup-norms of spectral fields on a refined diagnostic grid.

The maximum is taken on a dense grid (4x the transform resolution by
default, endpoints of ``[-1, 1]`` included) and then improved by one Newton
step at the discrete argmax, accepted only if it increases the value and
stays inside the domain.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .basis import SpectralScalar, horizontal_matrix, vertical_matrix
from .spectral_ops import Profile, derivative


def diagnostic_nodes(m: int, refine: int = 4):
    nx = refine * (3 * m + 1)
    ny = refine * 6 * max(m, 1) + 1
    x = 2.0 * np.pi * np.arange(nx) / nx
    y = np.linspace(-1.0, 1.0, ny)
    return x, y


def grid_values(f: SpectralScalar, x, y) -> np.ndarray:
    """Real samples on the tensor grid ``x`` by ``y``."""
    return (horizontal_matrix(f.m, x) @ f.coeffs).real @ vertical_matrix(f.family, f.m, y).T


def sup_profile(f: Profile, refine: int = 4) -> float:
    """``max_y |f(y)|`` on ``[-1, 1]``."""
    if not np.any(f.coeffs):
        return 0.0
    _, y = diagnostic_nodes(f.m, refine)
    vals = f(y)
    i = int(np.argmax(np.abs(vals)))
    best = abs(vals[i])
    d1, d2 = f.dy(), f.dy().dy()
    y0 = y[i]
    curv = float(d2(y0))
    if curv != 0.0:
        y1 = y0 - float(d1(y0)) / curv
        if -1.0 <= y1 <= 1.0:
            best = max(best, abs(float(f(y1))))
    return float(best)


def min_profile(f: Profile, refine: int = 4) -> float:
    """``min_y f(y)`` on ``[-1, 1]``, polished like :func:`sup_profile`."""
    _, y = diagnostic_nodes(f.m, refine)
    vals = f(y)
    i = int(np.argmin(vals))
    best = float(vals[i])
    d1, d2 = f.dy(), f.dy().dy()
    y0 = y[i]
    curv = float(d2(y0))
    if curv > 0.0:
        y1 = y0 - float(d1(y0)) / curv
        if -1.0 <= y1 <= 1.0:
            best = min(best, float(f(y1)))
    return best


def sup_magnitude(fields: Sequence[SpectralScalar], refine: int = 4) -> float:
    """``max_{x,y} sqrt(sum_i f_i(x, y)^2)`` for real fields ``f_i``."""
    fields = [f for f in fields if np.any(f.coeffs)]
    if not fields:
        return 0.0
    m = fields[0].m
    x, y = diagnostic_nodes(m, refine)
    sq = sum(grid_values(f, x, y) ** 2 for f in fields)
    j, i = np.unravel_index(int(np.argmax(sq)), sq.shape)
    best = float(sq[j, i])
    z0 = np.array([x[j], y[i]])
    grad = np.zeros(2)
    hess = np.zeros((2, 2))
    for f in fields:
        v = float(f(z0[0], z0[1]).real)
        fx = float(derivative(f, 1, 0)(z0[0], z0[1]).real)
        fy = float(derivative(f, 0, 1)(z0[0], z0[1]).real)
        fxx = float(derivative(f, 2, 0)(z0[0], z0[1]).real)
        fxy = float(derivative(f, 1, 1)(z0[0], z0[1]).real)
        fyy = float(derivative(f, 0, 2)(z0[0], z0[1]).real)
        g = np.array([fx, fy])
        grad += 2.0 * v * g
        hess += 2.0 * (np.outer(g, g) + v * np.array([[fxx, fxy], [fxy, fyy]]))
    try:
        step = np.linalg.solve(hess, grad)
    except np.linalg.LinAlgError:
        step = None
    if step is not None and np.all(np.isfinite(step)):
        z1 = z0 - step
        if -1.0 <= z1[1] <= 1.0:
            val = sum(float(f(z1[0], z1[1]).real) ** 2 for f in fields)
            best = max(best, val)
    return float(np.sqrt(best))
