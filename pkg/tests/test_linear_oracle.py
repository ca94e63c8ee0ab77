import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from helpers import LAM11, max_diff, rand_field, rand_state, single_mode
from stratiflow.basis import OMEGA, VARPI, SpectralScalar
from stratiflow.dynamics import StateVector, integrate, time_derivative
from stratiflow.linear_oracle import (
    ModalLinearSystem,
    QuadratureError,
    QuasilinearPropagator,
    WeightBoundWarning,
    WeightFunction,
    basic_integral,
    basic_lemma_check,
    calculus_integral,
    calculus_lemma_check,
    damping_lower_bound,
    decay_envelope_check,
    leray_factor,
    linear_solution,
    meter_n,
    modal_propagator,
    quasilinear_energy,
    quasilinear_rhs,
    solve_stream_poisson,
    tail_slope,
)
from stratiflow.spectral_ops import Profile, dx, fluctuation, laplacian, perp_gradient

# several profiles below sit deliberately above the smallness bound
pytestmark = pytest.mark.filterwarnings("ignore::stratiflow.linear_oracle.WeightBoundWarning")

# exp(t A) for A = [[0, -1], [0.9, -1]], t = 1: 80-term Taylor series in 40-digit mpmath
PROPAGATOR_09 = np.array([[0.6913199390937451748, -0.54292591224546625575],
                          [0.48863332102091963017, 0.14839402684827891905]])

# sup_t E_2(t) (1+t) / E_4(0) for the broadband quasi-linear set-up below, m = 16
BROADBAND_ENVELOPE_M16 = 1.6162001203433223e-4


def no_mean(f):
    c = f.coeffs.copy()
    c[f.m] = 0.0
    return f.with_coeffs(c)


# ---------------------------------------------------------------------------
# stream function and spectral identities


def test_stream_poisson_example():
    rho = single_mode(OMEGA, 3, 1, 1)
    phi = solve_stream_poisson(rho)
    assert phi.coeff(1, 1) == pytest.approx(-1j * LAM11, abs=1e-15)
    assert phi.coeff(-1, 1) == pytest.approx(1j * LAM11, abs=1e-15)


def test_stream_poisson_rejects_mean():
    with pytest.raises(ValueError):
        solve_stream_poisson(single_mode(OMEGA, 3, 0, 1))
    with pytest.raises(ValueError):
        solve_stream_poisson(SpectralScalar.zeros(VARPI, 3))


def test_stream_function_reproduces_linear_forcing():
    rng = np.random.default_rng(1)
    rho = no_mean(rand_field(rng, OMEGA, 5))
    phi = solve_stream_poisson(rho)
    lap = laplacian(phi)
    assert max_diff(lap.coeffs, dx(rho).coeffs) < 1e-13
    s = StateVector(rho, SpectralScalar.zeros(VARPI, 5), SpectralScalar.zeros(OMEGA, 5))
    ut = time_derivative(s, nonlinear=False)
    v = perp_gradient(phi)
    assert max_diff(ut.u1.coeffs, v.u1.coeffs) < 1e-14 and max_diff(ut.u2.coeffs, v.u2.coeffs) < 1e-14


def test_meter_identity():
    """``||d_t u + u||^2`` for a linearized state equals ``sum p^2 / kappa^2 |rho|^2``."""
    rng = np.random.default_rng(2)
    rho = no_mean(rand_field(rng, OMEGA, 6))
    s = StateVector(rho, SpectralScalar.zeros(VARPI, 6), SpectralScalar.zeros(OMEGA, 6))
    ut = time_derivative(s, nonlinear=False).velocity
    assert meter_n(rho) == pytest.approx(ut.l2_norm() ** 2, rel=1e-13)
    assert meter_n(single_mode(OMEGA, 3, 1, 1)) == pytest.approx(2 * LAM11, rel=1e-15)


def test_damping_bound_example():
    rho = single_mode(OMEGA, 3, 1, 1, hermitian=False)
    lhs, rhs = damping_lower_bound(rho, 2.0, 1.0)
    assert lhs == pytest.approx(LAM11, rel=1e-15)
    assert rhs == pytest.approx(0.5 - 0.25 * (2 + (np.pi / 2) ** 2), rel=1e-15)


def test_damping_bound_validation():
    rho = single_mode(OMEGA, 3, 1, 1)
    with pytest.raises(ValueError):
        damping_lower_bound(rho, 0.0, 1.0)
    with pytest.raises(ValueError):
        damping_lower_bound(rho, 1.0, 0.5)


@given(seed=st.integers(0, 2 ** 32 - 1), N=st.floats(0.1, 1e4), alpha=st.floats(1.0, 4.0))
def test_damping_lower_bound_holds(seed, N, alpha):
    rho = no_mean(rand_field(np.random.default_rng(seed), OMEGA, 6, slope=1.0))
    lhs, rhs = damping_lower_bound(rho, N, alpha)
    assert lhs >= rhs - 1e-12 * abs(lhs)


def test_leray_factor():
    lam = leray_factor(2)
    assert lam[3, 1] == pytest.approx(LAM11)
    assert np.all(lam[2] == 0)
    assert np.all((lam >= 0) & (lam <= 1))
    assert np.all(lam[:, 1:] < 1)


# ---------------------------------------------------------------------------
# modal propagator


def test_modal_propagator_frozen_value():
    assert max_diff(modal_propagator(0.9, 1.0), PROPAGATOR_09) < 1e-13


def test_modal_propagator_identity_at_zero():
    assert max_diff(modal_propagator(0.3, 0.0), np.eye(2)) == 0


def test_modal_propagator_defective_case():
    # lam = 1/4: A + I/2 is nilpotent, exp(tA) = e^{-t/2} (I + t (A + I/2))
    t = 1.7
    A = np.array([[0.0, -1.0], [0.25, -1.0]])
    ref = np.exp(-t / 2) * (np.eye(2) + t * (A + 0.5 * np.eye(2)))
    assert max_diff(modal_propagator(0.25, t), ref) < 1e-15


@pytest.mark.parametrize("lam", [0.0, 0.1, 0.25 - 1e-9, 0.25 + 1e-9, 0.5, LAM11, 0.99])
@pytest.mark.parametrize("t", [1e-6, 0.3, 5.0])
def test_modal_propagator_against_expm(lam, t):
    A = ModalLinearSystem(lam).matrix
    assert max_diff(modal_propagator(lam, t), linalg.expm(A * t)) < 1e-13


@given(lam=st.floats(0.0, 0.999), s=st.floats(0.0, 3.0), t=st.floats(0.0, 3.0))
@settings(max_examples=25)
def test_modal_semigroup(lam, s, t):
    assert max_diff(modal_propagator(lam, s + t), modal_propagator(lam, s) @ modal_propagator(lam, t)) < 1e-13


def test_modal_propagator_rejects_negative_time():
    with pytest.raises(ValueError):
        modal_propagator(0.5, -1.0)


def test_modal_eigenvalues():
    sysm = ModalLinearSystem(0.9)
    ev = np.sort_complex(np.linalg.eigvals(sysm.matrix))
    assert max_diff(np.sort_complex(sysm.eigenvalues), ev) < 1e-14
    assert np.all(sysm.eigenvalues.real < 0)
    assert max_diff(sysm.propagator(0.4), modal_propagator(0.9, 0.4)) == 0


def test_linear_solution_against_rk4():
    s = rand_state(3, 4, amp=1.0)
    ref = integrate(s, 1e-2, 100, nonlinear=False)
    out = linear_solution(s, 1.0)
    assert max_diff(out.flat(), ref.flat()) < 1e-9
    assert out.t == pytest.approx(1.0)


def test_linear_solution_keeps_constraints():
    s = rand_state(4, 5, amp=1.0)
    out = linear_solution(s, 2.0)
    assert out.divergence_defect() < 1e-13 and out.reality_defect() < 1e-14
    assert max_diff(linear_solution(s, 0.0).flat(), s.flat()) < 1e-15


# ---------------------------------------------------------------------------
# quasi-linear system


def test_weight_function_bound():
    G = Profile(VARPI, [0.0, 0.0, 1.0])
    W = WeightFunction(G, k=2, epsilon=0.05)
    assert W.bound() == pytest.approx(np.sqrt((1 + np.pi ** 2) ** 3), rel=1e-14)
    assert not W.satisfied()
    scaled = WeightFunction(Profile(VARPI, G.coeffs * 0.05 / W.bound()), k=2, epsilon=0.05)
    assert scaled.satisfied()
    lo, hi = scaled.w_star_range()
    assert lo < 1 < hi and hi - 1 == pytest.approx(1 - lo)
    with pytest.raises(ValueError):
        WeightFunction(Profile(OMEGA, [0.0, 1.0]))


def test_weight_from_mean():
    mean = Profile(OMEGA, [0.0, 0.01, 0.02])
    W = WeightFunction.from_mean(mean)
    assert max_diff(W.G.coeffs, mean.dy().coeffs) == 0
    y = np.linspace(-1, 1, 5)
    assert max_diff(W.w(y), 1 + mean.dy()(y)) == 0


def test_quasilinear_rhs_reduces_to_linearized():
    s = rand_state(5, 4)
    W = WeightFunction(Profile(VARPI, [0.0]))
    a = quasilinear_rhs(s, W)
    b = time_derivative(s, nonlinear=False)
    assert max_diff(a.flat(), b.flat()) < 1e-15


def test_quasilinear_rhs_profile_example():
    """``G = c_2`` times ``u2 = b_1 a_1``: the density rate is ``-(1 + G) u2`` projected."""
    from numpy.polynomial.legendre import leggauss

    m = 4
    G = Profile(VARPI, [0.0, 0.0, 0.01])
    u2 = single_mode(OMEGA, m, 1, 1, hermitian=False)
    s = StateVector(SpectralScalar.zeros(OMEGA, m), SpectralScalar.zeros(VARPI, m), u2)
    dr = quasilinear_rhs(s, WeightFunction(G)).rho
    y, w = leggauss(60)
    b1 = np.cos(np.pi * y / 2)
    for q in range(1, m + 1):
        bq = np.cos(q * np.pi * y / 2) if q % 2 else np.sin(q * np.pi * y / 2)
        ref = -np.sum(w * (1 + G(y)) * b1 * bq)
        assert dr.coeff(1, q) == pytest.approx(ref, abs=1e-14)


def test_quasilinear_rhs_zero_u2_keeps_density():
    rng = np.random.default_rng(6)
    rho = rand_field(rng, OMEGA, 4)
    s = StateVector(rho, SpectralScalar.zeros(VARPI, 4), SpectralScalar.zeros(OMEGA, 4))
    d = quasilinear_rhs(s, WeightFunction(Profile(VARPI, [0.0, 0.01])))
    assert not np.any(d.rho.coeffs)


def test_quasilinear_rhs_warns_outside_hypothesis():
    s = rand_state(7, 3)
    with pytest.warns(WeightBoundWarning):
        quasilinear_rhs(s, WeightFunction(Profile(VARPI, [0.0, 1.0])))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        quasilinear_rhs(s, WeightFunction(Profile(VARPI, [0.0, 1.0])), warn=False)


def test_quasilinear_propagator_against_rk4():
    s = rand_state(8, 4, amp=1.0)
    W = WeightFunction(Profile(VARPI, [0.0, 0.005, -0.003]))
    prop = QuasilinearPropagator(W, 4, 0.5)
    out = prop.step(s)
    y = s
    h = 0.5 / 50
    for _ in range(50):
        k1 = quasilinear_rhs(y, W)
        k2 = quasilinear_rhs(y + k1 * (h / 2), W)
        k3 = quasilinear_rhs(y + k2 * (h / 2), W)
        k4 = quasilinear_rhs(y + k3 * h, W)
        y = y + (k1 + 2 * k2 + 2 * k3 + k4) * (h / 6)
    assert max_diff(out.flat(), y.flat()) < 1e-8
    assert out.reality_defect() < 1e-15 and out.t == pytest.approx(0.5)


def broadband_state(m):
    rho = SpectralScalar.from_modes(OMEGA, m, {(1, q): 1.0 for q in range(1, m + 1)})
    return StateVector(rho, SpectralScalar.zeros(VARPI, m), SpectralScalar.zeros(OMEGA, m))


def broadband_weight():
    G = Profile(VARPI, [0.0, 0.0, 1.0])
    return WeightFunction(Profile(VARPI, G.coeffs * 0.05 / G.sobolev_norm(3)), k=2, epsilon=0.05)


def test_quasilinear_energy_monotone_and_frozen_envelope():
    m = 16
    W = broadband_weight()
    assert W.satisfied()
    s = broadband_state(m)
    prop = QuasilinearPropagator(W, m, 0.5)
    e0_alpha = quasilinear_energy(s, W, k=4)
    series, times = [quasilinear_energy(s, W)], [0.0]
    for i in range(100):
        s = prop.step(s)
        series.append(quasilinear_energy(s, W))
        times.append(s.t)
    assert np.all(np.diff(series) <= 1e-12 * series[0])
    env = decay_envelope_check(series, times, e0_alpha, 2.0)
    assert env == pytest.approx(BROADBAND_ENVELOPE_M16, rel=1e-8)


def test_envelope_examples():
    t = np.linspace(0, 19, 20)
    e = 4.0 / (1 + t)
    assert decay_envelope_check(e, t, 2.0, 2.0) == pytest.approx(2.0)
    assert decay_envelope_check(np.zeros(20), t, 0.0, 2.0) == 0.0
    with pytest.raises(ValueError):
        decay_envelope_check(np.ones(20), t, 0.0, 2.0)
    with pytest.raises(ValueError):
        decay_envelope_check(e[:5], t[:5], 2.0, 2.0)


def test_quasilinear_energy_zero_state():
    assert quasilinear_energy(StateVector.zeros(3), broadband_weight()) == 0.0


def test_quasilinear_energy_ignores_mean_density():
    s = StateVector(single_mode(OMEGA, 3, 0, 1), SpectralScalar.zeros(VARPI, 3), SpectralScalar.zeros(OMEGA, 3))
    assert not np.any(fluctuation(s.rho).coeffs)
    assert quasilinear_energy(s, broadband_weight()) == 0.0


# ---------------------------------------------------------------------------
# integral lemmas


def test_calculus_integral_frozen():
    assert calculus_integral(2, 10.0) == pytest.approx(0.1387247881688852, rel=1e-9)
    assert calculus_lemma_check(2, [10.0]) == pytest.approx(1.5259726698577372, rel=1e-9)
    assert calculus_lemma_check(2, np.linspace(0, 10, 11)) == pytest.approx(1.5707853963756597, rel=1e-9)
    assert calculus_integral(2, 0.0) == 0.0


def test_calculus_integral_against_trapezoid():
    t = 50.0
    s = np.linspace(0, t, 400001)
    f = np.exp(-2 * (np.sqrt(1 + t) - np.sqrt(1 + s))) * (1 + s) ** -1.5
    trap = np.sum((f[1:] + f[:-1]) / 2 * np.diff(s))
    assert calculus_integral(2, t) == pytest.approx(trap, rel=1e-8)


@pytest.mark.parametrize("alpha", [1.0, 2.0, 3.0])
def test_calculus_lemma_bounded(alpha):
    val = calculus_lemma_check(alpha, np.geomspace(1, 1000, 12))
    assert 0 < val < 10


def test_lemma_validation():
    with pytest.raises(ValueError):
        calculus_lemma_check(0.5, [1.0])
    with pytest.raises(ValueError):
        basic_lemma_check(0.0, 1.0, [1.0])


def test_basic_integral_frozen_and_closed_form():
    assert basic_lemma_check(1.25, 0.25, np.geomspace(1, 1000, 30)) == pytest.approx(6.783536323975986, rel=1e-9)
    assert tail_slope(2, 1, np.geomspace(100, 1000, 10)) == pytest.approx(-2.0202606102537723, rel=1e-9)
    # delta = 1, q = 0 (only allowed inside basic_integral): int (1+t-s)^-1 (1+s)^-1 = 2 log(1+t) / (2+t)
    t = 7.0
    assert basic_integral(1.0, 0.0, t) == pytest.approx(2 * np.log1p(t) / (2 + t), rel=1e-10)


def test_quadrature_error_type():
    assert issubclass(QuadratureError, RuntimeError)
