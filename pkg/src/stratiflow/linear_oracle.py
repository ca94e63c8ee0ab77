"""Exact and semi-exact solutions of the linearized and quasi-linearized systems.

Linearized system (advection dropped)::

    d_t rho_bar = -u2,        d_t u + u = -grad Pi_L + (0, rho_bar)

decouples into 2x2 systems per mode with generator ``[[0, -1], [lam, -1]]``,
``lam = p^2 / kappa^2``.  The quasi-linear system replaces ``-u2`` by
``-(1 + G(y)) u2`` for a frozen profile ``G``; horizontal modes still
decouple and each one is propagated by an exact matrix exponential.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, linalg

from .basis import OMEGA, VARPI, SpectralScalar, dy_factors, wavenumbers
from .dynamics import StateVector, buoyancy_arrays
from .spectral_ops import Profile, fluctuation, sobolev_norm
from .sampling import sup_profile
from .weighted import weighted_gram, weighted_sobolev_sq


class WeightBoundWarning(UserWarning):
    """The frozen weight violates the smallness hypothesis of the decay lemma."""


# ---------------------------------------------------------------------------
# modal 2x2 systems


@dataclass(frozen=True)
class ModalLinearSystem:
    lam: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[0.0, -1.0], [self.lam, -1.0]])

    @property
    def eigenvalues(self) -> np.ndarray:
        d = np.sqrt(complex(1.0 - 4.0 * self.lam))
        return np.array([(-1.0 + d) / 2.0, (-1.0 - d) / 2.0])

    def propagator(self, t: float) -> np.ndarray:
        return modal_propagator(self.lam, t)


def _sinhc(z: complex, t: float) -> complex:
    """``sinh(z t) / z`` with the removable singularity at ``z = 0`` handled."""
    x = z * t
    if abs(x) < 1e-4:
        return t * (1.0 + x * x / 6.0 + x ** 4 / 120.0)
    return np.sinh(x) / z


def modal_propagator(lam: float, t: float) -> np.ndarray:
    """``exp(t [[0, -1], [lam, -1]])``.

    With ``A + I/2`` squaring to ``delta^2 I`` (``delta^2 = 1/4 - lam``) the
    eigen-decomposition collapses to
    ``e^{-t/2} (cosh(delta t) I + sinh(delta t)/delta (A + I/2))``, which also
    covers the defective case ``lam = 1/4`` (``delta = 0``) without division.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    a = np.array([[0.0, -1.0], [lam, -1.0]])
    shifted = a + 0.5 * np.eye(2)
    disc = 0.25 - lam
    if disc >= 0:
        d = np.sqrt(disc)
        c = np.cosh(d * t)
        s = _sinhc(d, t).real
    else:
        w = np.sqrt(-disc)
        c = np.cos(w * t)
        s = np.sin(w * t) / w if w * t > 1e-4 else t * (1.0 - (w * t) ** 2 / 6.0)
    return np.exp(-0.5 * t) * (c * np.eye(2) + s * shifted)


def leray_factor(m: int) -> np.ndarray:
    """``lam[p+m, q] = p^2 / kappa^2`` (0 where ``kappa = 0``)."""
    p, _, k2 = wavenumbers(m)
    lam = np.zeros_like(k2)
    nz = k2 > 0
    lam[nz] = (p[:, None] ** 2 * np.ones_like(k2))[nz] / k2[nz]
    return lam


def linear_solution(s: StateVector, t: float) -> StateVector:
    """Exact solution of the linearized Galerkin system after time ``t``.

    Each mode ``(rho, u2)`` is propagated by the 2x2 exponential; ``u1`` follows
    from its own equation ``d_t u1 = -u1 + i p s_q rho / kappa^2`` which is
    solved with the same exponential (``u1`` is a fixed multiple of ``u2``
    forcing plus a decaying free part).
    """
    m = s.m
    r, a, b = s.arrays()
    lam = leray_factor(m)
    p, _, k2 = wavenumbers(m)
    r_new = np.zeros_like(r)
    b_new = np.zeros_like(b)
    a_new = a * np.exp(-t)
    # u1 driven by rho: forcing coefficient c = i p s / kappa^2, and
    # rho(t) = P11 rho0 + P12 u20; integrate e^{-(t-s)} c rho(s) ds exactly by
    # augmenting the 2x2 system with the u1 row.
    s_om = dy_factors(OMEGA, m)
    for i in range(2 * m + 1):
        for q in range(1, m + 1):
            P = modal_propagator(lam[i, q], t)
            r_new[i, q] = P[0, 0] * r[i, q] + P[0, 1] * b[i, q]
            b_new[i, q] = P[1, 0] * r[i, q] + P[1, 1] * b[i, q]
            if k2[i, q] > 0 and p[i] != 0:
                c = 1j * p[i] * s_om[q] / k2[i, q]
                gen = np.array([[0.0, -1.0, 0.0], [lam[i, q], -1.0, 0.0], [1.0, 0.0, -1.0]])
                E = linalg.expm(gen * t)
                a_new[i, q] += c * (E[2, 0] * r[i, q] + E[2, 1] * b[i, q])
    return StateVector.from_arrays((r_new, a_new, b_new), s.t + t)


# ---------------------------------------------------------------------------
# stream-function formulation and spectral identities


def solve_stream_poisson(rho_bar: SpectralScalar) -> SpectralScalar:
    """Solve ``Lap phi = d_x rho_bar``: coefficients ``-i p / kappa^2 rho_bar``.

    Then ``grad_perp phi = d_t u + u`` for linearized states.
    """
    if rho_bar.family is not OMEGA:
        raise ValueError("rho_bar must be an omega-family field")
    m = rho_bar.m
    if np.any(rho_bar.coeffs[m] != 0):
        raise ValueError("rho_bar has p=0 content; remove the horizontal mean first")
    p, _, k2 = wavenumbers(m)
    c = np.zeros_like(rho_bar.coeffs)
    nz = k2 > 0
    c[nz] = (-1j * p[:, None] * rho_bar.coeffs)[nz] / k2[nz]
    return SpectralScalar(OMEGA, c)


def meter_n(rho_bar: SpectralScalar) -> float:
    """``sum p^2 / kappa^2 |F[rho_bar]|^2`` (the mean column contributes 0)."""
    return float(np.sum(leray_factor(rho_bar.m) * np.abs(rho_bar.coeffs) ** 2))


def damping_lower_bound(rho_bar: SpectralScalar, N: float, alpha: float):
    """``(lhs, rhs)`` of ``||d_t u + u||^2 >= ||rho_bar||^2/N - ||rho_bar||^2_{H^alpha}/N^(1+alpha)``."""
    if not N > 0:
        raise ValueError("N must be positive")
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    m = rho_bar.m
    _, _, k2 = wavenumbers(m)
    mag = np.abs(rho_bar.coeffs) ** 2
    lhs = meter_n(rho_bar)
    rhs = float(np.sum(mag)) / N - float(np.sum((1.0 + k2) ** alpha * mag)) / N ** (1.0 + alpha)
    return lhs, rhs


# ---------------------------------------------------------------------------
# quasi-linear system


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """Frozen profile ``G(y)`` (varpi family, the role of ``d_y rho_tilde``)."""

    G: Profile
    k: int = 2
    epsilon: float = 0.05

    def __post_init__(self):
        if self.G.family is not VARPI:
            raise ValueError("G must be a varpi-family profile")

    @classmethod
    def from_mean(cls, mean: Profile, k: int = 2, epsilon: float = 0.05) -> "WeightFunction":
        return cls(mean.dy(), k, epsilon)

    def w(self, y):
        return 1.0 + self.G(y)

    def bound(self) -> float:
        """``max(||G||_{H^{k+1}}, ||d_t G||_inf)``; the frozen profile has ``d_t G = 0``."""
        return self.G.sobolev_norm(self.k + 1)

    def satisfied(self, rtol: float = 1e-12) -> bool:
        # the slack absorbs round-off when G is scaled to sit exactly on the bound
        return self.bound() <= self.epsilon * (1.0 + rtol)

    def w_star_range(self):
        g = sup_profile(self.G)
        return 1.0 - g, 1.0 + g

    def multiplication_matrix(self, m: int) -> np.ndarray:
        """``M[q, q'] = int b_q G b_q' dy`` so ``(G u2)[p] = u2[p] @ M.T``."""
        return weighted_gram(self.G, OMEGA, OMEGA, m)


def quasilinear_rhs(s: StateVector, W: WeightFunction, warn: bool = True) -> StateVector:
    """``d_t rho_bar = -P_m[(1 + G) u2]``, ``d_t u = -u + L(0, rho)``."""
    if warn and not W.satisfied():
        warnings.warn(f"weight bound {W.bound():.3g} exceeds epsilon={W.epsilon}", WeightBoundWarning,
                      stacklevel=2)
    r, a, b = s.arrays()
    M = W.multiplication_matrix(s.m)
    dr = -(b + b @ M.T)
    dr[:, 0] = 0.0
    b1, b2 = buoyancy_arrays(r)
    return StateVector.from_arrays((dr, -a + b1, -b + b2), s.t)


class QuasilinearPropagator:
    """Exact flow of the frozen-coefficient quasi-linear system.

    For every ``p > 0`` the unknowns ``(rho[p, 1..m], u1[p, 0..m], u2[p, 1..m])``
    obey a linear ODE with a constant matrix; its exponential over one step is
    computed once.  Negative ``p`` follow by conjugation.  At ``p = 0`` the
    mean density is frozen, ``u2`` vanishes and ``u1`` decays like ``e^{-t}``.
    """

    def __init__(self, W: WeightFunction, m: int, dt: float):
        self.W, self.m, self.dt = W, m, dt
        M = W.multiplication_matrix(m)[1:, 1:]
        p, _, k2 = wavenumbers(m)
        s_om = dy_factors(OMEGA, m)
        n = m
        self._maps = []
        for pi in range(1, m + 1):
            i = pi + m
            A = np.zeros((3 * n + 1, 3 * n + 1), dtype=complex)
            R = slice(0, n)
            U1 = slice(n, 2 * n + 1)
            U2 = slice(2 * n + 1, 3 * n + 1)
            A[R, U2] = -(np.eye(n) + M)
            A[U1, U1] = -np.eye(n + 1)
            A[U2, U2] = -np.eye(n)
            A[U1, R][1:, :] = np.diag(1j * pi * s_om[1:] / k2[i, 1:])
            A[U2, R] = np.diag(pi ** 2 / k2[i, 1:])
            self._maps.append(linalg.expm(A * dt))
        self._decay = np.exp(-dt)

    def step(self, s: StateVector) -> StateVector:
        m = self.m
        r, a, b = (c.copy() for c in s.arrays())
        for pi in range(1, m + 1):
            i = pi + m
            x = np.concatenate([r[i, 1:], a[i], b[i, 1:]])
            y = self._maps[pi - 1] @ x
            r[i, 1:], a[i], b[i, 1:] = y[:m], y[m:2 * m + 1], y[2 * m + 1:]
            j = -pi + m
            r[j], a[j], b[j] = np.conj(r[i]), np.conj(a[i]), np.conj(b[i])
        a[m] = a[m] * self._decay
        b[m] = 0.0
        return StateVector.from_arrays((r, a, b), s.t + self.dt)


def quasilinear_energy(s: StateVector, W: WeightFunction, k: int | None = None) -> float:
    """``||u||^2_{H^k_w} + ||rho_bar||^2_{H^k} + ||d_t u||^2_{H^k} + ||u2||^2_{H^k_w}``."""
    k = W.k if k is None else k
    ut = quasilinear_rhs(s, W, warn=False)
    rbar = fluctuation(s.rho)
    return (weighted_sobolev_sq(s.u1, W.G, k) + weighted_sobolev_sq(s.u2, W.G, k)
            + sobolev_norm(rbar, k) ** 2
            + sobolev_norm(ut.u1, k) ** 2 + sobolev_norm(ut.u2, k) ** 2
            + weighted_sobolev_sq(s.u2, W.G, k))


def decay_envelope_check(series: Sequence[float], times: Sequence[float], e_init_alpha: float,
                         alpha: float) -> float:
    """``sup_t E_k(t) (1 + t)^(alpha/2) / E_{k+alpha}(0)`` (0 for zero data)."""
    e = np.asarray(series, dtype=float)
    t = np.asarray(times, dtype=float)
    if e.size < 20 or e.size != t.size:
        raise ValueError("decay envelope needs at least 20 samples with matching times")
    if e_init_alpha == 0.0:
        if np.any(e != 0):
            raise ValueError("nonzero energy with zero initial higher-order energy")
        return 0.0
    return float(np.max(e * (1.0 + t) ** (alpha / 2.0)) / e_init_alpha)


# ---------------------------------------------------------------------------
# integral lemmas


class QuadratureError(RuntimeError):
    pass


def _checked_quad(f, a: float, b: float, points: Sequence[float] = (), tol: float = 1e-10) -> float:
    """Adaptive quadrature cross-checked against a split-interval evaluation."""
    if b <= a:
        return 0.0
    pts = [x for x in points if a < x < b]
    val, err = integrate.quad(f, a, b, points=pts or None, epsabs=0.0, epsrel=tol, limit=500)
    # independent second evaluation on a doubled partition
    edges = np.unique(np.concatenate([[a, b], pts, np.linspace(a, b, 3)]))
    val2 = sum(integrate.quad(f, lo, hi, epsabs=0.0, epsrel=tol, limit=500)[0]
               for lo, hi in zip(edges[:-1], edges[1:]))
    if abs(val - val2) > 10 * tol * max(abs(val), abs(val2), 1e-300):
        raise QuadratureError(f"quadrature disagreement {val} vs {val2} on [{a}, {b}]")
    return val


def calculus_integral(alpha: float, t: float, tol: float = 1e-10) -> float:
    """``int_0^t exp(-2 (sqrt(1+t) - sqrt(1+s))) (1+s)^(-(1+alpha)/2) ds``."""
    st = np.sqrt(1.0 + t)

    def f(s):
        return np.exp(-2.0 * (st - np.sqrt(1.0 + s))) * (1.0 + s) ** (-(1.0 + alpha) / 2.0)

    width = st  # the kernel decays on the scale sqrt(1+t) below s = t
    pts = [max(0.0, t - c * width) for c in (1.0, 4.0, 16.0)]
    return _checked_quad(f, 0.0, t, pts, tol)


def calculus_lemma_check(alpha: float, t_grid: Sequence[float], tol: float = 1e-10) -> float:
    """``max_t I(t) (1+t)^(alpha/2)`` over ``t_grid``."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    return max(calculus_integral(alpha, t, tol) * (1.0 + t) ** (alpha / 2.0) for t in t_grid)


def basic_integral(delta: float, q: float, t: float, tol: float = 1e-10) -> float:
    """``int_0^t (1 + t - s)^(-delta) (1 + s)^(-1-q) ds``."""

    def f(s):
        return (1.0 + t - s) ** (-delta) * (1.0 + s) ** (-1.0 - q)

    pts = [min(t, 1.0), t / 2.0, max(0.0, t - 1.0)]
    return _checked_quad(f, 0.0, t, pts, tol)


def basic_lemma_check(delta: float, q: float, t_grid: Sequence[float], tol: float = 1e-10) -> float:
    """``max_t I(t) (1+t)^min(delta, 1+q)`` over ``t_grid``."""
    if delta <= 0 or q <= 0:
        raise ValueError("delta and q must be positive")
    e = min(delta, 1.0 + q)
    return max(basic_integral(delta, q, t, tol) * (1.0 + t) ** e for t in t_grid)


def tail_slope(delta: float, q: float, t_tail: Sequence[float], tol: float = 1e-10) -> float:
    """Least-squares log-log slope of the basic integral over ``t_tail``."""
    t = np.asarray(t_tail, dtype=float)
    vals = np.array([basic_integral(delta, q, ti, tol) for ti in t])
    return float(np.polyfit(np.log1p(t), np.log(vals), 1)[0])
