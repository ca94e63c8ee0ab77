"""Shared builders for tests."""
import numpy as np

from stratiflow.basis import OMEGA, VARPI, SpectralScalar, wavenumbers
from stratiflow.dynamics import StateVector
from stratiflow.spectral_ops import VelocityField, leray

LAM11 = 1.0 / (1.0 + (np.pi / 2) ** 2)

# acceptance outcomes, printed by the terminal-summary hook in conftest.py
ACCEPTANCE = {}


def record(n, title, ok, detail):
    ACCEPTANCE[n] = (title, bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {n} {title}: {detail}")
    assert ok, detail


def rand_field(rng, family, m, slope=2.0, zero_mean=False):
    """Real random field with coefficients decaying like (1 + kappa^2)^(-slope/2)."""
    _, _, k2 = wavenumbers(m)
    z = rng.standard_normal((2 * m + 1, m + 1)) + 1j * rng.standard_normal((2 * m + 1, m + 1))
    z = 0.5 * (z + np.conj(z[::-1]))
    z *= (1.0 + k2) ** (-slope / 2.0)
    if SpectralScalar.zeros(family, m).family is OMEGA:
        z[:, 0] = 0.0
    if zero_mean:
        z[m] = 0.0
    return SpectralScalar(family, z)


def rand_velocity(rng, m, slope=2.0):
    v = VelocityField(rand_field(rng, VARPI, m, slope), rand_field(rng, OMEGA, m, slope))
    return leray(v)


def rand_state(seed, m, amp=0.1, slope=3.0):
    rng = np.random.default_rng(seed)
    v = rand_velocity(rng, m, slope)
    rho = rand_field(rng, OMEGA, m, slope)
    return StateVector(rho * amp, v.u1 * amp, v.u2 * amp)


def single_mode(family, m, p, q, value=1.0, hermitian=True):
    return SpectralScalar.from_modes(family, m, {(p, q): value}, hermitian=hermitian)


def max_diff(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
