"""Seeded initial data.

Random numbers come from the Philox4x64-10 counter-based generator: the key
is the run seed and the counter is ``(stream, p, q, 0)``, so every mode draws
from its own fixed position and the draws do not depend on the truncation.
Two 64-bit outputs become uniforms ``(x >> 11) * 2^-53`` and a Box-Muller
transform turns them into one complex Gaussian, which keeps the streams
reproducible outside numpy.
"""
from __future__ import annotations

import numpy as np
from scipy import optimize

from ..basis import OMEGA, VARPI, SpectralScalar, wavenumbers
from ..dynamics import StateVector
from ..energy import compute_frak_e
from ..spectral_ops import Profile, perp_gradient
from .config import RunConfig

STREAM_RHO = 0
STREAM_PSI = 1
STREAM_MEAN = 2


def mode_gaussian(seed: int, stream: int, p: int, q: int) -> complex:
    """Standard complex Gaussian ``(n1 + i n2)/sqrt(2)`` for one mode."""
    bg = np.random.Philox(key=int(seed) & (2 ** 64 - 1),
                          counter=[stream, p & (2 ** 64 - 1), q, 0])
    raw = bg.random_raw(2)
    u1 = (int(raw[0]) >> 11) * 2.0 ** -53
    u2 = (int(raw[1]) >> 11) * 2.0 ** -53
    r = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 lies in (0, 1]
    z = r * np.exp(2j * np.pi * u2)
    return complex(z / np.sqrt(2.0))


def random_field(seed: int, stream: int, m: int, slope: float, include_mean: bool = True,
                 extra_decay: float = 0.0) -> SpectralScalar:
    """Real omega-family field with ``|F| ~ (1 + kappa^2)^(-(slope + extra_decay)/2)``."""
    _, _, k2 = wavenumbers(m)
    c = np.zeros((2 * m + 1, m + 1), dtype=complex)
    p_start = 0 if include_mean else 1
    for p in range(p_start, m + 1):
        for q in range(1, m + 1):
            z = mode_gaussian(seed, stream, p, q)
            if p == 0:
                z = z.real * np.sqrt(2.0)
            amp = (1.0 + k2[p + m, q]) ** (-(slope + extra_decay) / 2.0)
            c[p + m, q] = amp * z
            if p:
                c[-p + m, q] = np.conj(c[p + m, q])
    return SpectralScalar(OMEGA, c)


def random_mean_profile(seed: int, m: int, slope: float, size: float, order: int) -> Profile:
    """Mean density profile whose ``d_y`` has ``H^order[-1,1]`` norm ``size``."""
    c = np.zeros(m + 1)
    q = np.arange(m + 1)
    for qq in range(1, m + 1):
        c[qq] = mode_gaussian(seed, STREAM_MEAN, 0, qq).real * np.sqrt(2.0)
    c *= (1.0 + (q * np.pi / 2.0) ** 2) ** (-slope / 2.0)
    mean = Profile(OMEGA, c)
    norm = mean.dy().sobolev_norm(order)
    if norm == 0.0 or size == 0.0:
        return Profile(OMEGA, np.zeros(m + 1))
    return Profile(OMEGA, c * (size / norm))


def raw_state(cfg: RunConfig, seed: int | None = None) -> StateVector:
    """Unscaled fluctuation: ``rho_bar`` and ``u = grad_perp psi``."""
    seed = cfg.seed if seed is None else seed
    rho = random_field(seed, STREAM_RHO, cfg.m, cfg.spectrum_slope, include_mean=False)
    psi = random_field(seed, STREAM_PSI, cfg.m, cfg.spectrum_slope, extra_decay=1.0)
    u = perp_gradient(psi)
    return StateVector(rho, u.u1, u.u2)


def _with_mean(s: StateVector, mean: Profile) -> StateVector:
    return StateVector(s.rho + mean.as_field(s.m), s.u1, s.u2, s.t)


def generate_initial_data(cfg: RunConfig, max_reseed: int = 8) -> StateVector:
    """Random state scaled so that ``frakE_{kappa+1}(0) = epsilon^2``.

    The fluctuation is multiplied by a scalar found by root bracketing; a
    mean profile (``mean_epsilon > 0``) is added unscaled before the solve.
    """
    nonlinear = cfg.mode == "nonlinear"
    if cfg.epsilon == 0.0:
        return StateVector.zeros(cfg.m)
    mean = random_mean_profile(cfg.seed, cfg.m, cfg.spectrum_slope, cfg.mean_epsilon, cfg.k_energy + 1)
    target = cfg.epsilon ** 2
    for attempt in range(max_reseed):
        seed = cfg.seed + attempt * 1_000_003
        fluct = raw_state(cfg, seed)
        if fluct.max_abs() == 0.0:
            continue

        def excess(c):
            return compute_frak_e(_with_mean(fluct * c, mean), cfg.kappa, nonlinear) - target

        base = excess(0.0)
        if base >= 0.0:
            raise ValueError("the mean profile alone already exceeds epsilon^2; lower mean_epsilon")
        hi = np.sqrt(target / max(excess(1.0) - base, 1e-300))
        while excess(hi) < 0.0:
            hi *= 2.0
        c = optimize.brentq(excess, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        state = _with_mean(fluct * c, mean)
        got = compute_frak_e(state, cfg.kappa, nonlinear)
        if abs(got - target) > 1e-10 * target:
            raise RuntimeError(f"energy normalization failed: {got} vs {target}")
        return state
    raise RuntimeError("could not draw a nonzero initial state")
