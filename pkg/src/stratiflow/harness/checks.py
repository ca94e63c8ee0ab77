"""Invariant suite run against one configuration; failures are data."""
from __future__ import annotations

import time
import traceback

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import linalg

from ..basis import OMEGA, VARPI, SpectralScalar, dy_factors, vertical_matrix, vertical_profile, wavenumbers
from ..dynamics import (
    StateVector,
    advect,
    advect_quadrature,
    advect_slices,
    boundary_trace_max,
    integrate,
    rk4_arrays,
    time_derivative,
)
from ..energy import compute_frak_e, energy_balance_residual, i6_leading_terms
from ..linear_oracle import (
    QuasilinearPropagator,
    WeightFunction,
    damping_lower_bound,
    linear_solution,
    meter_n,
    modal_propagator,
    quasilinear_energy,
    quasilinear_rhs,
)
from ..spectral_ops import (
    VelocityField,
    dx,
    dy,
    fluctuation,
    inner,
    leray,
    project,
    sobolev_norm,
)
from .config import RunConfig
from .initial import generate_initial_data, random_mean_profile
from .io import Checkpoint, checkpoint_bytes, parse_checkpoint

INJECTIONS = ("reality", "divergence")


def random_scalar(rng: np.random.Generator, family, m: int, slope: float = 2.0) -> SpectralScalar:
    """Real field with decaying random coefficients (for operator checks)."""
    _, _, k2 = wavenumbers(m)
    z = rng.standard_normal((2 * m + 1, m + 1)) + 1j * rng.standard_normal((2 * m + 1, m + 1))
    z = 0.5 * (z + np.conj(z[::-1]))
    z *= (1.0 + k2) ** (-slope / 2.0)
    f = SpectralScalar.zeros(family, m)
    if f.family is OMEGA:
        z[:, 0] = 0.0
    return f.with_coeffs(z)


def inject_fault(s: StateVector, kind: str) -> StateVector:
    """Deliberately break one invariant of a state."""
    r, a, b = (c.copy() for c in s.arrays())
    m = s.m
    if kind == "reality":
        r[m + 1, 1] += 1e-3 * (1.0 + abs(r[m + 1, 1]))
    elif kind == "divergence":
        # hermitian perturbation so only the divergence constraint breaks
        a[m + 1, 1] += 1e-3 * (1.0 + abs(a[m + 1, 1]))
        a[m - 1, 1] = np.conj(a[m + 1, 1])
    else:
        raise ValueError(f"unknown fault {kind!r}; choose from {INJECTIONS}")
    return StateVector.from_arrays((r, a, b), s.t)


# ---------------------------------------------------------------------------
# individual checks: each returns (value, threshold) and passes if value <= threshold


def check_basis_gram(cfg, s, rng):
    n = 4 * cfg.m + 40
    y, w = leggauss(n)
    worst = 0.0
    for fam in (OMEGA, VARPI):
        phi = vertical_matrix(fam, cfg.m, y)[:, fam.q_min:]
        G = phi.T @ (w[:, None] * phi)
        worst = max(worst, float(np.max(np.abs(G - np.eye(G.shape[0])))))
    return worst, 1e-12


def check_derivative_maps(cfg, s, rng):
    y = np.linspace(-1.0, 1.0, 101)
    h = 1e-20
    worst = 0.0
    for fam in (OMEGA, VARPI):
        fac = dy_factors(fam, cfg.m)
        for q in range(fam.q_min, cfg.m + 1):
            d = np.imag(vertical_profile(fam, q, y + 1j * h)) / h
            image = fac[q] * vertical_profile(fam.flipped, q, y) if q else 0.0
            worst = max(worst, float(np.max(np.abs(d - image))) / max(1, q))
    return worst, 1e-10


def check_projectors(cfg, s, rng):
    m2 = max(cfg.m // 2, 0)
    f, g = random_scalar(rng, OMEGA, cfg.m), random_scalar(rng, OMEGA, cfg.m)
    adj = abs(inner(project(f, m2), g) - inner(f, project(g, m2)))
    comm = max(np.max(np.abs(project(dx(f), m2).coeffs - dx(project(f, m2)).coeffs)),
               np.max(np.abs(project(dy(f), m2).coeffs - dy(project(f, m2)).coeffs)))
    return float(max(adj, comm)), 1e-12


def check_leray(cfg, s, rng):
    v = VelocityField(random_scalar(rng, VARPI, cfg.m), random_scalar(rng, OMEGA, cfg.m))
    lv = leray(v)
    llv = leray(lv)
    idem = max(np.max(np.abs(llv.u1.coeffs - lv.u1.coeffs)), np.max(np.abs(llv.u2.coeffs - lv.u2.coeffs)))
    div = np.max(np.abs((dx(lv.u1) + dy(lv.u2)).coeffs))
    return float(max(idem, div)), 1e-12


def check_reality(cfg, s, rng):
    return s.reality_defect(), 1e-12


def check_divergence(cfg, s, rng):
    return s.divergence_defect(), 1e-12


def check_u2_mean(cfg, s, rng):
    return s.u2_mean_defect(), 1e-14


def check_boundary(cfg, s, rng):
    return boundary_trace_max(s), 1e-10


def check_initial_energy(cfg, s, rng):
    target = cfg.epsilon ** 2
    got = compute_frak_e(s, cfg.kappa, cfg.mode == "nonlinear")
    return abs(got - target) / target if target else got, 1e-10


def check_advection_oracle(cfg, s, rng):
    # the three routes are compared relative to the size of the inputs, since the
    # product itself can cancel to round-off for special states
    v = s.velocity
    fast = advect(v, s.rho)
    scale = v.l2_norm() * sobolev_norm(s.rho, 1)
    d = max((fast - advect_slices(v, s.rho)).l2_norm(), (fast - advect_quadrature(v, s.rho)).l2_norm())
    return d / scale if scale else d, 1e-10


def check_rhs_structure(cfg, s, rng):
    d = time_derivative(s, True)
    return max(d.divergence_defect(), d.u2_mean_defect(), d.reality_defect()), 1e-12


def check_energy_balance(cfg, s, rng):
    """Centred-difference residual relative to the energy, and its dt-halving ratio."""
    out = []
    for dt in (1e-3, 5e-4):
        window = [s, integrate(s, dt, 1), integrate(s, dt, 2)]
        res_e = energy_balance_residual(window, dt, cfg.k_energy)
        res_w = energy_balance_residual(window, dt, cfg.k_energy, weighted=True)
        out.append((res_e, res_w))
    scale = compute_frak_e(s, cfg.k_energy)
    if scale == 0.0:
        return max(max(o) for o in out), 1e-6
    worst = 0.0
    for i in range(2):
        big, small = out[0][i] / scale, out[1][i] / scale
        # above the round-off floor the residual must shrink like dt^2
        if small > 1e-12 and not 3.5 <= big / small <= 4.5:
            return float("inf"), 1e-6
        worst = max(worst, big)
    return worst, 1e-6


def check_i6_cancellation(cfg, s, rng):
    i1, i2 = i6_leading_terms(s, cfg.k_energy + 1)
    return abs(i1 + i2) / max(abs(i1), abs(i2), 1e-300) if (i1 or i2) else 0.0, 1e-10


def check_meter_identity(cfg, s, rng):
    d = time_derivative(s, nonlinear=False)
    lhs = (d.velocity + s.velocity).l2_norm() ** 2
    rhs = meter_n(fluctuation(s.rho))
    return abs(lhs - rhs) / max(rhs, 1e-300) if rhs else lhs, 1e-12


def check_lower_bound(cfg, s, rng):
    worst = 0.0
    rbar = fluctuation(random_scalar(rng, OMEGA, cfg.m))
    for N in np.geomspace(0.5, 1e3, 12):
        for alpha in (1, 2, 4):
            lhs, rhs = damping_lower_bound(rbar, N, alpha)
            worst = max(worst, (rhs - lhs) / max(abs(lhs), 1e-300))
    return worst, 1e-12


def check_modal_propagator(cfg, s, rng):
    worst = 0.0
    for lam in (0.0, 0.1, 0.25, 0.5, 1.0):
        A = np.array([[0.0, -1.0], [lam, -1.0]])
        for t in (0.3, 2.0, 10.0):
            worst = max(worst, float(np.max(np.abs(modal_propagator(lam, t) - linalg.expm(A * t)))))
    return worst, 1e-12


def check_linear_solution(cfg, s, rng):
    exact = linear_solution(s, 0.5)
    num = integrate(s, 0.01, 50, nonlinear=False)
    scale = max(exact.max_abs(), 1e-300)
    return float(np.max(np.abs(exact.flat() - num.flat()))) / scale, 1e-8


def _quasilinear_setup(cfg, s):
    mean = random_mean_profile(cfg.seed, cfg.m, 4.0, 0.05, cfg.k_energy + 1)
    W = WeightFunction.from_mean(mean, cfg.k_energy, 0.05)
    x = StateVector(fluctuation(s.rho) + mean.as_field(cfg.m), s.u1, s.u2)
    return W, x


def check_quasilinear_propagator(cfg, s, rng):
    W, x = _quasilinear_setup(cfg, s)
    dt, n = 0.5, 50
    one = QuasilinearPropagator(W, cfg.m, dt).step(x)
    f = lambda r, a, b: quasilinear_rhs(StateVector.from_arrays((r, a, b)), W, warn=False).arrays()  # noqa: E731
    y = x.arrays()
    for _ in range(n):
        y = rk4_arrays(y, dt / n, f)
    scale = max(x.max_abs(), 1e-300)
    return float(np.max(np.abs(one.flat() - StateVector.from_arrays(y).flat()))) / scale, 1e-8


def check_quasilinear_monotone(cfg, s, rng):
    W, x = _quasilinear_setup(cfg, s)
    prop = QuasilinearPropagator(W, cfg.m, 0.5)
    q = [quasilinear_energy(x, W)]
    for _ in range(20):
        x = prop.step(x)
        q.append(quasilinear_energy(x, W))
    return max([0.0] + [(b - a) / a for a, b in zip(q, q[1:]) if a > 0]), 1e-12


def check_rk4_order(cfg, s, rng):
    T = 1.0
    sols = [integrate(s, T / n, n) for n in (10, 20, 40)]
    e1 = np.max(np.abs(sols[0].flat() - sols[1].flat()))
    e2 = np.max(np.abs(sols[1].flat() - sols[2].flat()))
    if e2 < 1e-13 * max(s.max_abs(), 1e-300):
        return 0.0, 0.25
    return abs(np.log2(e1 / e2) - 4.0), 0.25


def check_checkpoint_roundtrip(cfg, s, rng):
    ck = Checkpoint(cfg, 7, s.with_time(0.125), {"a": 1.0 / 3.0})
    data = checkpoint_bytes(ck)
    back = parse_checkpoint(data)
    same = all(np.array_equal(x, y) for x, y in zip(back.state.arrays(), ck.state.arrays()))
    same = same and checkpoint_bytes(back) == data and back.cfg == cfg
    return 0.0 if same else 1.0, 0.0


CHECKS = {
    "basis_gram": check_basis_gram,
    "derivative_maps": check_derivative_maps,
    "projectors": check_projectors,
    "leray": check_leray,
    "reality": check_reality,
    "divergence_free": check_divergence,
    "u2_zero_mean": check_u2_mean,
    "boundary_traces": check_boundary,
    "initial_energy": check_initial_energy,
    "advection_oracle": check_advection_oracle,
    "rhs_structure": check_rhs_structure,
    "energy_balance": check_energy_balance,
    "i6_cancellation": check_i6_cancellation,
    "meter_identity": check_meter_identity,
    "lower_bound": check_lower_bound,
    "modal_propagator": check_modal_propagator,
    "linear_solution": check_linear_solution,
    "quasilinear_propagator": check_quasilinear_propagator,
    "quasilinear_monotone": check_quasilinear_monotone,
    "rk4_order": check_rk4_order,
    "checkpoint_roundtrip": check_checkpoint_roundtrip,
}


def check_suite(cfg: RunConfig, state: StateVector | None = None, inject: str | None = None,
                only=None) -> dict:
    """Run every named check; returns ``{name: {pass, value, threshold, seconds}}``."""
    names = list(CHECKS) if only is None else list(only)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValueError(f"unknown check(s) {unknown}; available: {sorted(CHECKS)}")
    rng = np.random.default_rng(cfg.seed)
    ledger = {}
    try:
        s = generate_initial_data(cfg) if state is None else state
    except Exception as exc:  # noqa: BLE001
        return {"initial_data": {"pass": False, "error": f"{type(exc).__name__}: {exc}"}}
    if inject:
        s = inject_fault(s, inject)
    for name in names:
        t0 = time.perf_counter()
        try:
            value, thr = CHECKS[name](cfg, s, rng)
            value = float(value)
            entry = {"pass": bool(value <= thr), "value": value, "threshold": thr}
        except Exception as exc:  # noqa: BLE001
            entry = {"pass": False, "error": f"{type(exc).__name__}: {exc}",
                     "trace": traceback.format_exc(limit=3)}
        entry["seconds"] = round(time.perf_counter() - t0, 3)
        ledger[name] = entry
    return ledger
