"""Galerkin system for the damped Boussinesq perturbation equations.

Unknowns at truncation m: density perturbation ``rho`` (omega family) and
velocity ``u = (u1, u2)`` (varpi, omega).  The truncated system is::

    d_t rho = -u2 - P_m[(u . grad) rho]
    d_t u   = -u - L (Q_m, P_m)[(u . grad) u] + L (0, rho)

with ``L`` the Leray projector.  Nonlinear terms are exact Galerkin
coefficients (no aliasing), see :mod:`stratiflow.transforms`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np

from .basis import (
    OMEGA,
    SQRT2PI,
    VARPI,
    SpectralScalar,
    analyze,
    dy_factors,
    inner_product_with_basis,
    make_grid,
    multiply_slices,
    synthesize,
    to_raw_trig,
    vertical_matrix,
    wavenumbers,
)
from .sampling import sup_magnitude
from .spectral_ops import (
    VelocityField,
    derivative,
    divergence,
    dx,
    dy,
    leray_arrays,
)
from .transforms import product_grid

Arrays = Tuple[np.ndarray, np.ndarray, np.ndarray]


class BlowupError(FloatingPointError):
    """Raised when a step produces non-finite values or exceeds a size cap."""

    def __init__(self, message: str, t: float, diagnostic: dict | None = None):
        super().__init__(message)
        self.t = t
        self.diagnostic = diagnostic or {}


@dataclass(frozen=True, eq=False)
class StateVector:
    rho: SpectralScalar
    u1: SpectralScalar
    u2: SpectralScalar
    t: float = 0.0

    def __post_init__(self):
        if self.rho.family is not OMEGA or self.u1.family is not VARPI or self.u2.family is not OMEGA:
            raise ValueError("state needs rho, u2 in the omega family and u1 in the varpi family")
        if not (self.rho.m == self.u1.m == self.u2.m):
            raise ValueError("state components at different truncations")

    @property
    def m(self) -> int:
        return self.rho.m

    @property
    def velocity(self) -> VelocityField:
        return VelocityField(self.u1, self.u2)

    @classmethod
    def zeros(cls, m: int, t: float = 0.0) -> "StateVector":
        return cls(SpectralScalar.zeros(OMEGA, m), SpectralScalar.zeros(VARPI, m),
                   SpectralScalar.zeros(OMEGA, m), t)

    @classmethod
    def from_fields(cls, rho: SpectralScalar, u: VelocityField, t: float = 0.0) -> "StateVector":
        return cls(rho, u.u1, u.u2, t)

    @classmethod
    def from_arrays(cls, arrays: Arrays, t: float = 0.0) -> "StateVector":
        r, a, b = arrays
        return cls(SpectralScalar(OMEGA, r), SpectralScalar(VARPI, a), SpectralScalar(OMEGA, b), t)

    def arrays(self) -> Arrays:
        return self.rho.coeffs, self.u1.coeffs, self.u2.coeffs

    def with_time(self, t: float) -> "StateVector":
        return StateVector(self.rho, self.u1, self.u2, t)

    def __add__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.rho + other.rho, self.u1 + other.u1, self.u2 + other.u2, self.t)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.rho - other.rho, self.u1 - other.u1, self.u2 - other.u2, self.t)

    def __mul__(self, a) -> "StateVector":
        return StateVector(self.rho * a, self.u1 * a, self.u2 * a, self.t)

    __rmul__ = __mul__

    def flat(self) -> np.ndarray:
        return np.concatenate([c.ravel() for c in self.arrays()])

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(c)) for c in self.arrays()))

    # invariants -----------------------------------------------------------

    def reality_defect(self) -> float:
        return max(self.rho.reality_defect(), self.u1.reality_defect(), self.u2.reality_defect())

    def divergence_defect(self) -> float:
        """``||div u|| / ||u||`` (0 for a zero velocity)."""
        norm = self.velocity.l2_norm()
        if norm == 0.0:
            return 0.0
        return divergence(self.velocity).l2_norm() / norm

    def u2_mean_defect(self) -> float:
        return float(np.max(np.abs(self.u2.coeffs[self.m])))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(c)) for c in self.arrays())


@dataclass(frozen=True, eq=False)
class RhsBreakdown:
    """Additive pieces of the right-hand side, each shaped like a state."""

    linear_damping: StateVector
    buoyancy_leray: StateVector
    advection_rho: StateVector
    advection_u: StateVector
    forcing_rho: StateVector

    def total(self) -> StateVector:
        return (self.linear_damping + self.buoyancy_leray + self.advection_rho
                + self.advection_u + self.forcing_rho)

    def parts(self):
        return {
            "linear_damping": self.linear_damping,
            "buoyancy_leray": self.buoyancy_leray,
            "advection_rho": self.advection_rho,
            "advection_u": self.advection_u,
            "forcing_rho": self.forcing_rho,
        }


# ---------------------------------------------------------------------------
# coefficient-array kernels


class _Ops:
    def __init__(self, m: int):
        p, _, k2 = wavenumbers(m)
        self.m = m
        self.ip = (1j * p)[:, None]
        self.s_omega = dy_factors(OMEGA, m)[None, :]
        self.s_varpi = dy_factors(VARPI, m)[None, :]
        inv = np.zeros_like(k2)
        inv[k2 > 0] = 1.0 / k2[k2 > 0]
        self.inv_k2 = inv
        # Leray image of (0, rho): u1 part i p s_q / kappa^2, u2 part p^2 / kappa^2
        self.buoy1 = self.ip * self.s_omega * inv
        self.buoy2 = (p ** 2)[:, None] * inv
        self.buoy2[:, 0] = 0.0


@lru_cache(maxsize=16)
def _ops(m: int) -> _Ops:
    return _Ops(m)


def advection_arrays(r, a, b) -> Arrays:
    """Exact Galerkin coefficients of ``(u . grad) rho``, ``(u . grad) u1``, ``(u . grad) u2``."""
    m = r.shape[1] - 1
    op = _ops(m)
    pg = product_grid(m)
    omega_stack = np.stack([b, op.ip * r, op.s_varpi * a, op.ip * b])
    varpi_stack = np.stack([a, op.s_omega * r, op.ip * a, op.s_omega * b])
    w = pg.to_grid(omega_stack, OMEGA)
    v = pg.to_grid(varpi_stack, VARPI)
    U1, U2 = v[0], w[0]
    n_rho = pg.from_grid(U1 * w[1] + U2 * v[1], OMEGA)
    n_u1 = pg.from_grid(U1 * v[2] + U2 * w[2], VARPI)
    n_u2 = pg.from_grid(U1 * w[3] + U2 * v[3], OMEGA)
    return n_rho, n_u1, n_u2


def rhs_arrays(r, a, b, nonlinear: bool = True) -> Arrays:
    """Total right-hand side on raw coefficient arrays."""
    op = _ops(r.shape[1] - 1)
    dr = -b
    d1 = -a + op.buoy1 * r
    d2 = -b + op.buoy2 * r
    if nonlinear:
        n_rho, n_u1, n_u2 = advection_arrays(r, a, b)
        l1, l2 = leray_arrays(n_u1, n_u2)
        dr = dr - n_rho
        d1 = d1 - l1
        d2 = d2 - l2
    return dr, d1, d2


def buoyancy_arrays(r):
    op = _ops(r.shape[1] - 1)
    return op.buoy1 * r, op.buoy2 * r


# ---------------------------------------------------------------------------
# public operations


def advect(v: VelocityField, f: SpectralScalar) -> SpectralScalar:
    """Galerkin projection of ``(v . grad) f`` onto the family of ``f``."""
    if v.m != f.m:
        raise ValueError("velocity and field at different truncations")
    pg = product_grid(f.m)
    fx, fy = dx(f), dy(f)
    vals = (pg.to_grid(v.u1.coeffs, VARPI) * pg.to_grid(fx.coeffs, fx.family)
            + pg.to_grid(v.u2.coeffs, OMEGA) * pg.to_grid(fy.coeffs, fy.family))
    return SpectralScalar(f.family, pg.from_grid(vals, f.family))


def advect_slices(v: VelocityField, f: SpectralScalar) -> SpectralScalar:
    """Reference route for :func:`advect` using raw trigonometric slices.

    For every output mode ``p`` the x-modes ``p1 + p2 = p`` are convolved; in y
    the slices are multiplied in closed form and projected with exact
    integrals.  Cost grows like ``m^4``; meant for verification.
    """
    m = f.m
    fx, fy = dx(f), dy(f)
    u1 = [to_raw_trig(v.u1, p) for p in range(-m, m + 1)]
    u2 = [to_raw_trig(v.u2, p) for p in range(-m, m + 1)]
    gx = [to_raw_trig(fx, p) for p in range(-m, m + 1)]
    gy = [to_raw_trig(fy, p) for p in range(-m, m + 1)]
    out = np.zeros((2 * m + 1, m + 1), dtype=complex)
    for p in range(-m, m + 1):
        acc = None
        for p1 in range(max(-m, p - m), min(m, p + m) + 1):
            p2 = p - p1
            term = multiply_slices(u1[p1 + m], gx[p2 + m]) + multiply_slices(u2[p1 + m], gy[p2 + m])
            acc = term if acc is None else acc + term
        for q in range(f.family.q_min, m + 1):
            out[p + m, q] = inner_product_with_basis(acc, f.family, q) / SQRT2PI
    return SpectralScalar(f.family, out)


def advect_quadrature(v: VelocityField, f: SpectralScalar, refine: int = 4) -> SpectralScalar:
    """Grid oracle for :func:`advect`: pointwise product on an over-resolved
    Gauss-Legendre grid followed by quadrature analysis."""
    grid = make_grid(f.m, refine=refine)
    vals = (synthesize(v.u1, grid).values * synthesize(dx(f), grid).values
            + synthesize(v.u2, grid).values * synthesize(dy(f), grid).values)
    return analyze(grid.with_values(vals), f.family, f.m)


def rhs(s: StateVector, nonlinear: bool = True) -> RhsBreakdown:
    r, a, b = s.arrays()
    z_om = np.zeros_like(r)
    z_va = np.zeros_like(a)
    t = s.t

    def sv(x, y, z):
        return StateVector.from_arrays((x, y, z), t)

    b1, b2 = buoyancy_arrays(r)
    if nonlinear:
        n_rho, n_u1, n_u2 = advection_arrays(r, a, b)
        l1, l2 = leray_arrays(n_u1, n_u2)
        adv_rho = sv(-n_rho, z_va, z_om)
        adv_u = sv(z_om, -l1, -l2)
    else:
        adv_rho = sv(z_om, z_va, z_om)
        adv_u = sv(z_om, z_va, z_om)
    return RhsBreakdown(
        linear_damping=sv(z_om, -a, -b),
        buoyancy_leray=sv(z_om, b1, b2),
        advection_rho=adv_rho,
        advection_u=adv_u,
        forcing_rho=sv(-b, z_va, z_om),
    )


def time_derivative(s: StateVector, nonlinear: bool = True) -> StateVector:
    """Total right-hand side as a state (fast path of ``rhs(s).total()``)."""
    return StateVector.from_arrays(rhs_arrays(*s.arrays(), nonlinear=nonlinear), s.t)


RhsFunction = Callable[[np.ndarray, np.ndarray, np.ndarray], Arrays]


def rk4_arrays(y: Arrays, dt: float, f: RhsFunction) -> Arrays:
    k1 = f(*y)
    k2 = f(*(yi + 0.5 * dt * ki for yi, ki in zip(y, k1)))
    k3 = f(*(yi + 0.5 * dt * ki for yi, ki in zip(y, k2)))
    k4 = f(*(yi + dt * ki for yi, ki in zip(y, k3)))
    return tuple(yi + (dt / 6.0) * (a + 2.0 * b + 2.0 * c + d)
                 for yi, a, b, c, d in zip(y, k1, k2, k3, k4))


def step_rk4(s: StateVector, dt: float, nonlinear: bool = True,
             rhs_fn: RhsFunction | None = None) -> StateVector:
    """One classical Runge-Kutta step; raises :class:`BlowupError` on non-finite output."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    f = rhs_fn if rhs_fn is not None else (lambda r, a, b: rhs_arrays(r, a, b, nonlinear))
    out = rk4_arrays(s.arrays(), dt, f)
    if not all(np.all(np.isfinite(c)) for c in out):
        raise BlowupError("non-finite coefficients after RK4 step", s.t + dt,
                          {"t_start": s.t, "dt": dt, "max_abs_before": s.max_abs()})
    return StateVector.from_arrays(out, s.t + dt)


def step_doubling_error(s: StateVector, dt: float, nonlinear: bool = True) -> float:
    """Max-norm difference between one step of ``dt`` and two of ``dt/2``.

    For RK4 this estimates the local error of the half-step pair times ~16/15.
    """
    full = step_rk4(s, dt, nonlinear)
    half = step_rk4(step_rk4(s, 0.5 * dt, nonlinear), 0.5 * dt, nonlinear)
    return float(np.max(np.abs(full.flat() - half.flat())))


def integrate(s: StateVector, dt: float, n_steps: int, nonlinear: bool = True) -> StateVector:
    """``n_steps`` fixed RK4 steps; the clock is ``t0 + i * dt``."""
    y = s.arrays()
    f = (lambda r, a, b: rhs_arrays(r, a, b, nonlinear))
    for _ in range(n_steps):
        y = rk4_arrays(y, dt, f)
    out = StateVector.from_arrays(y, s.t + n_steps * dt)
    if not out.is_finite():
        raise BlowupError("non-finite coefficients", out.t)
    return out


# ---------------------------------------------------------------------------
# pressure and diagnostics


def pressure_parts(s: StateVector, nonlinear: bool = True):
    """``(Pi_L, Pi_NL)`` with ``Pi_L = -(-Lap)^{-1} d_y rho_bar`` and
    ``Pi_NL = (-Lap)^{-1} div (Q_m, P_m)[(u . grad) u]``."""
    r, a, b = s.arrays()
    op = _ops(s.m)
    rbar = r.copy()
    rbar[s.m] = 0.0
    pl = -op.s_omega * rbar * op.inv_k2
    if nonlinear:
        _, n1, n2 = advection_arrays(r, a, b)
        pnl = (op.ip * n1 + op.s_omega * n2) * op.inv_k2
    else:
        pnl = np.zeros_like(pl)
    return SpectralScalar(VARPI, pl), SpectralScalar(VARPI, pnl)


def reconstruct_pressure(s: StateVector, nonlinear: bool = True) -> SpectralScalar:
    pl, pnl = pressure_parts(s, nonlinear)
    return pl + pnl


def blowup_integrand(s: StateVector, refine: int = 4) -> float:
    """``||grad u||_inf + ||grad rho||_inf`` (Frobenius norm for the velocity gradient)."""
    grad_u = [derivative(c, sx, sy) for c in (s.u1, s.u2) for sx, sy in ((1, 0), (0, 1))]
    grad_rho = [derivative(s.rho, 1, 0), derivative(s.rho, 0, 1)]
    return sup_magnitude(grad_u, refine) + sup_magnitude(grad_rho, refine)


def boundary_trace_max(s: StateVector, max_order: int = 4) -> float:
    """Largest relative trace at ``y = +-1`` of quantities that must vanish there.

    Checked: even y-derivatives of ``rho`` and ``u2`` and odd y-derivatives of
    ``u1``, up to ``max_order``.  Each trace is divided by the sum of absolute
    coefficients of the same derivative, so the audit is scale free.
    """
    worst = 0.0
    checks = [(s.rho, 0), (s.u2, 0), (s.u1, 1)]
    for f, first in checks:
        for n in range(first, max_order + 1, 2):
            g = derivative(f, 0, n)
            scale = float(np.sum(np.abs(g.coeffs)))
            if scale == 0.0:
                continue
            ends = vertical_matrix(g.family, f.m, np.array([-1.0, 1.0]))
            traces = g.coeffs @ ends.T
            worst = max(worst, float(np.max(np.abs(traces))) / scale)
    return worst
