import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.legendre import leggauss

from helpers import max_diff, rand_field
from stratiflow.basis import OMEGA, VARPI, make_grid, synthesize, vertical_matrix
from stratiflow.sampling import diagnostic_nodes, grid_values, min_profile, sup_magnitude, sup_profile
from stratiflow.spectral_ops import Profile, derivative, sobolev_norm
from stratiflow.weighted import (
    UNIT_PROFILE,
    weighted_bilinear,
    weighted_gram,
    weighted_gram_slices,
    weighted_sobolev_sq,
    weighted_velocity_sq,
)


def gram_quadrature(h, fa, fb, m, n=200):
    y, w = leggauss(n)
    A = vertical_matrix(fa, m, y)
    B = vertical_matrix(fb, m, y)
    return (A * (w * h(y))[:, None]).T @ B


@pytest.mark.parametrize("fa", [OMEGA, VARPI])
@pytest.mark.parametrize("fb", [OMEGA, VARPI])
@pytest.mark.parametrize("hfam", [OMEGA, VARPI])
def test_gram_three_routes(fa, fb, hfam):
    h = Profile(hfam, [0.3, -0.7, 0.2, 0.05])
    m = 5
    fast = weighted_gram(h, fa, fb, m)
    assert max_diff(fast, weighted_gram_slices(h, fa, fb, m)) < 1e-13
    assert max_diff(fast, gram_quadrature(h, fa, fb, m)) < 1e-13


def test_unit_weight_gives_identity():
    for fam in (OMEGA, VARPI):
        M = weighted_gram(UNIT_PROFILE, fam, fam, 4)
        I = np.eye(5)
        if fam is OMEGA:
            I[0, 0] = 0.0
        assert max_diff(M, I) < 1e-14


def test_empty_profile():
    assert not np.any(weighted_gram_slices(Profile(OMEGA, [0.0]), VARPI, VARPI, 3))


def test_bilinear_unit_weight_is_sobolev():
    rng = np.random.default_rng(1)
    f = rand_field(rng, OMEGA, 5)
    for k in range(4):
        assert weighted_bilinear(f, f, None, k, homogeneous=False) == pytest.approx(sobolev_norm(f, k) ** 2, rel=1e-13)
        assert weighted_bilinear(f, f, UNIT_PROFILE, k, homogeneous=False) == pytest.approx(
            sobolev_norm(f, k) ** 2, rel=1e-13)


@pytest.mark.parametrize("order", [0, 1, 2])
def test_weighted_bilinear_against_grid(order):
    """Sum over ``sx + sy = n`` of ``binom(n, sx) int d f d g h`` on a quadrature grid."""
    from math import comb

    rng = np.random.default_rng(order)
    f, g = rand_field(rng, VARPI, 4), rand_field(rng, VARPI, 4)
    h = Profile(VARPI, [0.1, 0.2, -0.3])
    grid = make_grid(4, refine=6)
    hv = h(grid.y)[None, :]
    ref = 0.0
    for sx in range(order + 1):
        a = synthesize(derivative(f, sx, order - sx), grid).values
        b = synthesize(derivative(g, sx, order - sx), grid).values
        ref += comb(order, sx) * grid.with_values(a * b * hv).integrate()
    assert weighted_bilinear(f, g, h, order) == pytest.approx(ref, rel=1e-11, abs=1e-13)


def test_bilinear_truncation_mismatch():
    rng = np.random.default_rng(2)
    with pytest.raises(ValueError):
        weighted_bilinear(rand_field(rng, OMEGA, 3), rand_field(rng, OMEGA, 4), None, 1)


@settings(max_examples=15)
@given(seed=st.integers(0, 2 ** 32 - 1), k=st.integers(0, 3))
def test_weighted_norm_bracketed_by_weight_range(seed, k):
    rng = np.random.default_rng(seed)
    f = rand_field(rng, OMEGA, 4)
    g = Profile(VARPI, rng.uniform(-0.1, 0.1, 3))
    lo, hi = 1 - sup_profile(g), 1 + sup_profile(g)
    val = weighted_sobolev_sq(f, g, k)
    base = sobolev_norm(f, k) ** 2
    assert lo * base * (1 - 1e-12) <= val <= hi * base * (1 + 1e-12)


def test_velocity_square_sums_components():
    rng = np.random.default_rng(3)
    u1, u2 = rand_field(rng, VARPI, 4), rand_field(rng, OMEGA, 4)
    g = Profile(VARPI, [0.0, 0.05])
    total = weighted_velocity_sq(u1, u2, g, 2)
    parts = sum(weighted_bilinear(c, c, None, 2) + weighted_bilinear(c, c, g, 2) for c in (u1, u2))
    assert total == pytest.approx(parts, rel=1e-14)
    assert weighted_velocity_sq(u1, u2, None, 2) == pytest.approx(
        weighted_bilinear(u1, u1, None, 2) + weighted_bilinear(u2, u2, None, 2), rel=1e-14)


# ---------------------------------------------------------------------------
# sup norms


def test_sup_profile_examples():
    # c_1 = sin(pi y / 2) has |max| 1 at the walls
    assert sup_profile(Profile(VARPI, [0.0, 1.0])) == pytest.approx(1.0, rel=1e-14)
    # b_2 = sin(pi y) peaks at y = +-1/2
    assert sup_profile(Profile(OMEGA, [0.0, 0.0, -2.0])) == pytest.approx(2.0, rel=1e-14)
    assert sup_profile(Profile(OMEGA, [0.0])) == 0.0
    assert min_profile(Profile(VARPI, [np.sqrt(2), 0.0, 0.5])) == pytest.approx(0.5, rel=1e-12)


def test_sup_profile_against_dense_sampling():
    rng = np.random.default_rng(4)
    h = Profile(VARPI, rng.standard_normal(7))
    y = np.linspace(-1, 1, 200001)
    dense = np.max(np.abs(h(y)))
    assert sup_profile(h) >= dense * (1 - 1e-12)
    assert sup_profile(h) == pytest.approx(dense, rel=1e-8)


def test_sup_magnitude_against_dense_sampling():
    rng = np.random.default_rng(5)
    fs = [rand_field(rng, OMEGA, 3), rand_field(rng, VARPI, 3)]
    x = np.linspace(0, 2 * np.pi, 801)
    y = np.linspace(-1, 1, 801)
    dense = np.sqrt(np.max(sum(grid_values(f, x, y) ** 2 for f in fs)))
    assert sup_magnitude(fs) == pytest.approx(dense, rel=1e-5)
    assert sup_magnitude(fs) >= dense * (1 - 1e-9)


def test_diagnostic_nodes_include_walls():
    x, y = diagnostic_nodes(4)
    assert y[0] == -1.0 and y[-1] == 1.0 and x[0] == 0.0 and x.size == 4 * 13
