"""Energy functionals, monitors and exact balance identities.

Notation (``<.,.>_k`` is the ``(1+kappa^2)^k`` inner product, ``(.,.)_n`` the
homogeneous order-n one, ``W_n`` the derivative-summed integral with weight
``w = 1 + d_y rho_tilde``):

* ``e_k  = ||u||_k^2 + ||rho||_k^2``
* ``E_k  = (||u||_k^2 + ||rho||_k^2 + ||u_t||_k^2 + ||u2||_k^2) / 2``
* ``Edot_n = (||rho||_{dot H^n}^2 + W_n(u, u)) / 2``
* ``frakE_{k+1} = E_k + Edot_{k+1}``

For the Galerkin system the time derivatives of ``E_k`` and ``Edot_n`` are
sums of inner products that can be assembled exactly from the state; the
balance residuals compare them with centred differences along a trajectory.
"""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, fields
from typing import Sequence

import numpy as np

from .basis import OMEGA, SQRT2PI, VARPI, SpectralScalar
from .dynamics import (
    StateVector,
    advect,
    blowup_integrand,
    boundary_trace_max,
    reconstruct_pressure,
    time_derivative,
)
from .sampling import min_profile, sup_profile
from .spectral_ops import (
    Profile,
    VelocityField,
    derivative,
    inner,
    inner_velocity,
    sobolev_norm,
    split_mean,
)
from .transforms import multiply
from .weighted import weighted_bilinear


class NonPositiveWeightWarning(UserWarning):
    """``1 + d_y rho_tilde`` is not positive somewhere; weighted energies lose meaning."""


@dataclass(frozen=True)
class EnergyReport:
    t: float
    e_k: float
    E_k: float
    Edot_k1: float
    frakE_k1: float
    psi1: float
    psi2: float
    weight_min: float
    boundary_trace_max: float
    blowup_integrand: float

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    def as_dict(self):
        return asdict(self)


# ---------------------------------------------------------------------------
# basic pieces


def mean_gradient(s: StateVector) -> Profile:
    """``g = d_y rho_tilde`` as a varpi-family profile."""
    mean, _ = split_mean(s.rho)
    return mean.dy()


def weight_min(s: StateVector) -> float:
    """``min_y (1 + d_y rho_tilde)``."""
    g = mean_gradient(s)
    if not np.any(g.coeffs):
        return 1.0
    return 1.0 + min_profile(g)


def _weighted_pair(a: VelocityField, b: VelocityField, g: Profile | None, n: int) -> float:
    """``W_n(a, b)`` with weight ``1 + g``."""
    total = 0.0
    for x, y in ((a.u1, b.u1), (a.u2, b.u2)):
        total += weighted_bilinear(x, y, None, n)
        if g is not None:
            total += weighted_bilinear(x, y, g, n)
    return total


def _nonzero(g: Profile) -> Profile | None:
    return g if np.any(g.coeffs) else None


def compute_e_k(s: StateVector, k: int) -> float:
    return sobolev_norm(s.velocity, k) ** 2 + sobolev_norm(s.rho, k) ** 2


def compute_E_k(s: StateVector, k: int, nonlinear: bool = True, ut: VelocityField | None = None) -> float:
    """Half-sum of ``||u||, ||rho||, ||u_t||, ||u2||`` squared in ``H^k``.

    ``u_t`` is taken from the right-hand side unless supplied.
    """
    if ut is None:
        ut = time_derivative(s, nonlinear).velocity
    return 0.5 * (sobolev_norm(s.velocity, k) ** 2 + sobolev_norm(s.rho, k) ** 2
                  + sobolev_norm(ut, k) ** 2 + sobolev_norm(s.u2, k) ** 2)


def weighted_velocity_integral(s: StateVector, n: int) -> float:
    """``sum_s binom(n, s) int |d^s u|^2 (1 + d_y rho_tilde)``."""
    return _weighted_pair(s.velocity, s.velocity, _nonzero(mean_gradient(s)), n)


def compute_weighted(s: StateVector, n: int, warn: bool = True) -> float:
    """``Edot_n = (||rho||^2_{dot H^n} + W_n(u, u)) / 2``."""
    if warn:
        wmin = weight_min(s)
        if wmin <= 0.0:
            warnings.warn(f"weight minimum {wmin:.3g} is not positive", NonPositiveWeightWarning,
                          stacklevel=2)
    return 0.5 * (inner(s.rho, s.rho, n, homogeneous=True) + weighted_velocity_integral(s, n))


def compute_frak_e(s: StateVector, k: int, nonlinear: bool = True) -> float:
    return compute_E_k(s, k, nonlinear) + compute_weighted(s, k + 1, warn=False)


def compute_psi(s: StateVector, k: int):
    """``(Psi_1, Psi_2)`` monitors at order ``k``."""
    g_inf = sup_profile(mean_gradient(s))
    if g_inf >= 1.0:
        raise ZeroDivisionError(f"||d_y rho_tilde||_inf = {g_inf:.3g} >= 1")
    r = sobolev_norm(s.rho, k + 1)
    u = sobolev_norm(s.velocity, k)
    wint = max(weighted_velocity_integral(s, k + 1), 0.0)
    psi1 = r + u + np.sqrt((1.0 + g_inf) / (1.0 - g_inf)) * np.sqrt(wint)
    psi2 = (r + u + r * u) / (1.0 - g_inf)
    return float(psi1), float(psi2)


def energy_report(s: StateVector, k: int, nonlinear: bool = True) -> EnergyReport:
    ut = time_derivative(s, nonlinear).velocity
    E = compute_E_k(s, k, nonlinear, ut)
    Ed = compute_weighted(s, k + 1, warn=False)
    wmin = weight_min(s)
    try:
        psi1, psi2 = compute_psi(s, k)
    except ZeroDivisionError:
        psi1 = psi2 = float("inf")
    return EnergyReport(
        t=float(s.t),
        e_k=compute_e_k(s, k),
        E_k=E,
        Edot_k1=Ed,
        frakE_k1=E + Ed,
        psi1=psi1,
        psi2=psi2,
        weight_min=wmin,
        boundary_trace_max=boundary_trace_max(s),
        blowup_integrand=blowup_integrand(s),
    )


# ---------------------------------------------------------------------------
# exact time derivatives


def _advect_velocity(v: VelocityField, u: VelocityField) -> VelocityField:
    return VelocityField(advect(v, u.u1), advect(v, u.u2))


def E_k_rate_terms(s: StateVector, k: int, nonlinear: bool = True) -> dict:
    """Exact ``dE_k/dt`` split into its inner-product terms.

    ``-||u||^2 - ||u_t||^2 - <rho, u.grad rho> - <u, (u.grad)u>
    - <u2_t, u.grad rho> - <u_t, d_t[(u.grad)u]>``; projections are implicit
    because every inner product is taken against a truncated field.
    """
    ds = time_derivative(s, nonlinear)
    u, ut = s.velocity, ds.velocity
    terms = {
        "damping_u": -sobolev_norm(u, k) ** 2,
        "damping_ut": -sobolev_norm(ut, k) ** 2,
    }
    if nonlinear:
        n_rho = advect(u, s.rho)
        n_u = _advect_velocity(u, u)
        dn_u = _advect_velocity(ut, u) + _advect_velocity(u, ut)
        terms["rho_advection"] = -inner(s.rho, n_rho, k)
        terms["u_advection"] = -inner_velocity(u, n_u, k)
        terms["ut2_rho_advection"] = -inner(ut.u2, n_rho, k)
        terms["ut_advection_rate"] = -inner_velocity(ut, dn_u, k)
    return terms


def E_k_rate(s: StateVector, k: int, nonlinear: bool = True) -> float:
    return float(sum(E_k_rate_terms(s, k, nonlinear).values()))


def weighted_rate_terms(s: StateVector, n: int, nonlinear: bool = True) -> dict:
    """Exact ``d Edot_n / dt`` split into seven terms.

    With ``g = d_y rho_tilde``, ``w = 1 + g`` and ``Pi`` the reconstructed pressure:

    * ``dissipation``  ``-W_n(u, u)``
    * ``advection_u``  ``-W_n(u, (u.grad)u)``
    * ``pressure``     ``sum_s binom int d^s u2 d^s Pi d_y g`` (boundary-free after parts)
    * ``advection_rho`` ``-(rho_bar, u.grad rho_bar)_n``
    * ``commutator``   ``W_n(u2, rho_bar) - (rho_bar, w u2)_n``
    * ``weight_rate``  ``W_n``-type integral of ``|d^n u|^2`` against ``d_t g / 2``
    * ``mean_transfer`` ``(d_y rho_tilde, u2 rho_bar)_n``

    Without advection the mean profile is frozen, ``w u2`` becomes ``u2`` in the
    commutator and ``mean_transfer`` drops out.
    """
    m = s.m
    ds = time_derivative(s, nonlinear)
    u = s.velocity
    mean, rbar = split_mean(s.rho)
    g = mean.dy()
    gz = _nonzero(g)
    g_field = g.as_field(m)
    terms = {"dissipation": -_weighted_pair(u, u, gz, n)}

    if nonlinear:
        terms["advection_u"] = -_weighted_pair(u, _advect_velocity(u, u), gz, n)
        terms["advection_rho"] = -inner(rbar, advect(u, rbar), n, homogeneous=True)
    else:
        terms["advection_u"] = 0.0
        terms["advection_rho"] = 0.0

    pressure = reconstruct_pressure(s, nonlinear)
    gy = _nonzero(g.dy())
    terms["pressure"] = weighted_bilinear(s.u2, pressure, gy, n) if gy is not None else 0.0

    # the factor w in d_t rho_bar = -w u2 - ... comes from advection of the mean
    wu2 = s.u2 + multiply(g_field, s.u2, OMEGA) if nonlinear else s.u2
    comm = weighted_bilinear(s.u2, rbar, None, n)
    if gz is not None:
        comm += weighted_bilinear(s.u2, rbar, gz, n)
    terms["commutator"] = comm - inner(rbar, wu2, n, homogeneous=True)

    mean_t, _ = split_mean(ds.rho)
    gt = _nonzero(mean_t.dy())
    terms["weight_rate"] = 0.5 * (weighted_bilinear(s.u1, s.u1, gt, n)
                                  + weighted_bilinear(s.u2, s.u2, gt, n)) if gt is not None else 0.0

    if nonlinear:
        terms["mean_transfer"] = inner(g_field, multiply(s.u2, rbar, VARPI), n, homogeneous=True)
    else:
        terms["mean_transfer"] = 0.0
    return terms


def weighted_rate(s: StateVector, n: int, nonlinear: bool = True) -> float:
    return float(sum(weighted_rate_terms(s, n, nonlinear).values()))


def energy_balance_residual(window: Sequence[StateVector], dt: float, k: int, weighted: bool = False,
                            nonlinear: bool = True) -> float:
    """Centred difference of ``E_k`` (or ``Edot_{k+1}``) minus the assembled rate.

    ``window`` holds at least three consecutive states spaced by ``dt``; the
    residual is evaluated at every interior state and the largest absolute
    value is returned.
    """
    if len(window) < 3:
        raise ValueError("need at least three consecutive states")
    if weighted:
        vals = [compute_weighted(s, k + 1, warn=False) for s in window]
        rate = lambda s: weighted_rate(s, k + 1, nonlinear)  # noqa: E731
    else:
        vals = [compute_E_k(s, k, nonlinear) for s in window]
        rate = lambda s: E_k_rate(s, k, nonlinear)  # noqa: E731
    worst = 0.0
    for i in range(1, len(window) - 1):
        fd = (vals[i + 1] - vals[i - 1]) / (2.0 * dt)
        worst = max(worst, abs(fd - rate(window[i])))
    return worst


def i6_leading_terms(s: StateVector, n: int):
    """The two top-order integrals that cancel in the weighted estimate.

    ``I1 = -int d_y^(n+1) rho_tilde * u2 * d_y^n rho_bar`` assembled through the
    weighted Gram matrix, and ``I2 = +int d_y^n(d_y rho_tilde) * (u2 d_y^n rho_bar)``
    assembled by an exact product followed by projection on the mean profile.
    """
    mean, rbar = split_mean(s.rho)
    h = mean.derivative(n + 1)
    dn_rbar = derivative(rbar, 0, n)
    i1 = -weighted_bilinear(s.u2, dn_rbar, _nonzero(h), 0) if np.any(h.coeffs) else 0.0
    prod = multiply(s.u2, dn_rbar, h.family)
    i2 = float(SQRT2PI * np.sum(h.coeffs * prod.coeffs[s.m].real))
    return i1, i2
