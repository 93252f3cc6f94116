from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acnsf.spectral import (
    GridSpec,
    SpectralField,
    VectorField,
    dealias_product,
    differential_operator,
    forward,
    gradient,
    hermitian_defect,
    inverse_laplacian,
    l2_norm,
    laplacian,
    make_grid,
    to_physical,
    to_spectral,
)


def rand_field(grid, rng, band=None, vector=False, mean_zero=False):
    shape = ((grid.dim,) if vector else ()) + grid.shape
    c = forward(rng.standard_normal(shape), grid.dim)
    if band is not None:
        m = np.abs(grid.mode_index)
        mask = np.ones(grid.shape, dtype=bool)
        for ax in range(grid.dim):
            sl = [None] * grid.dim
            sl[ax] = slice(None)
            mask &= (m[tuple(sl)] <= band)
        c = c * mask
    if mean_zero:
        c[(Ellipsis,) + (0,) * grid.dim] = 0
    return VectorField(grid, c) if vector else SpectralField(grid, c)


def test_make_grid_wavevectors():
    g = make_grid(3, 32)
    assert g.shape == (32, 32, 32)
    assert sorted(g.mode_index) == list(range(-15, 17))
    np.testing.assert_allclose(g.k[0, :, 0, 0], g.mode_index)


def test_smallest_grid():
    g = make_grid(2, 8)
    assert g.shape == (8, 8)


@pytest.mark.parametrize("args, msg", [
    ((3, 7), "n must be even"),
    ((4, 8), "dim must be 2 or 3"),
    ((1, 8), "dim must be 2 or 3"),
    ((2, 6), "at least 8"),
])
def test_make_grid_rejects(args, msg):
    with pytest.raises(ValueError, match=msg):
        make_grid(*args)


def test_rejects_bad_length_and_pad():
    with pytest.raises(ValueError, match="length"):
        make_grid(2, 8, length=0.0)
    with pytest.raises(ValueError, match="pad_factor"):
        make_grid(2, 8, pad_factor=Fraction(5, 4))


def test_length_scales_wavevectors():
    g = make_grid(2, 8, length=1.0)
    assert g.k[0].max() == pytest.approx(2 * np.pi * 4)


def test_constant_transform():
    g = make_grid(3, 8)
    c = to_spectral(np.ones(g.shape), g).coeffs
    assert c[0, 0, 0] == pytest.approx(1.0)
    c[0, 0, 0] = 0
    assert np.abs(c).max() < 1e-15


def test_sine_transform():
    g = make_grid(3, 16)
    c = to_spectral(np.sin(g.coords[0]), g).coeffs
    assert c[1, 0, 0] == pytest.approx(-0.5j)
    assert c[-1, 0, 0] == pytest.approx(0.5j)
    c[1, 0, 0] = c[-1, 0, 0] = 0
    assert np.abs(c).max() < 1e-15


@pytest.mark.parametrize("dim, n", [(2, 8), (2, 64), (3, 16)])
def test_round_trip(dim, n):
    g = make_grid(dim, n)
    f = np.random.default_rng(n).standard_normal(g.shape)
    back = to_physical(to_spectral(f, g))
    assert np.linalg.norm(back - f) <= 1e-12 * np.linalg.norm(f)


def test_vector_round_trip_and_hermitian():
    g = make_grid(3, 8)
    f = np.random.default_rng(1).standard_normal((3,) + g.shape)
    V = to_spectral(f, g)
    assert isinstance(V, VectorField)
    assert hermitian_defect(V.coeffs, 3) < 1e-15
    np.testing.assert_allclose(V.physical(), f, atol=1e-13)


def test_shape_mismatch():
    g = make_grid(2, 8)
    with pytest.raises(ValueError, match="does not match"):
        to_spectral(np.zeros((8, 9)), g)


def test_laplacian_eigenfunction():
    g = make_grid(3, 16)
    s = to_spectral(np.sin(g.coords[0]), g)
    assert l2_norm(laplacian(s) + s) <= 1e-13 * l2_norm(s)
    assert l2_norm(inverse_laplacian(s) + s) <= 1e-13 * l2_norm(s)


def test_gradient_and_divergence_of_sine():
    g = make_grid(2, 16)
    x = g.coords
    grad = differential_operator(to_spectral(np.sin(x[0]) * np.cos(2 * x[1]), g), "gradient").physical()
    np.testing.assert_allclose(grad[0], np.cos(x[0]) * np.cos(2 * x[1]), atol=1e-13)
    np.testing.assert_allclose(grad[1], -2 * np.sin(x[0]) * np.sin(2 * x[1]), atol=1e-13)
    div = differential_operator(to_spectral(np.array([np.sin(x[0]), np.cos(x[1])]), g), "divergence").physical()
    np.testing.assert_allclose(div, np.cos(x[0]) - np.sin(x[1]), atol=1e-13)


def test_inverse_laplacian_rejects_mean():
    g = make_grid(2, 8)
    with pytest.raises(ValueError, match="inverse Laplacian undefined on means"):
        inverse_laplacian(to_spectral(np.ones(g.shape), g))


def test_unknown_operator():
    g = make_grid(2, 8)
    with pytest.raises(ValueError, match="unknown operator"):
        differential_operator(g.zeros(), "curl")


def test_laplacian_inverse_round_trip():
    g = make_grid(3, 16)
    F = rand_field(g, np.random.default_rng(2), mean_zero=True)
    back = laplacian(inverse_laplacian(F))
    # the Nyquist planes carry |k|^2 too, so the round trip is exact on every mode
    assert l2_norm(back - F) <= 1e-10 * l2_norm(F)


def test_parseval():
    g = make_grid(3, 16)
    f = np.random.default_rng(3).standard_normal(g.shape)
    quad = np.sqrt(np.sum(f**2) * g.volume / g.size)
    assert l2_norm(to_spectral(f, g)) == pytest.approx(quad, rel=1e-12)


def test_operators_commute():
    g = make_grid(3, 16)
    F = rand_field(g, np.random.default_rng(4), band=5, mean_zero=True)
    a = differential_operator(laplacian(F), "gradient")
    b = laplacian(gradient(F))
    assert l2_norm(a - b) <= 1e-12 * l2_norm(a)
    c = inverse_laplacian(differential_operator(gradient(F), "divergence"))
    assert l2_norm(c - F) <= 1e-12 * l2_norm(F)


def test_product_of_sines():
    g = make_grid(2, 16)
    s = to_spectral(np.sin(g.coords[0]), g)
    prod = dealias_product(s, s).physical()
    np.testing.assert_allclose(prod, (1 - np.cos(2 * g.coords[0])) / 2, atol=1e-15)


def test_unit_multiplier():
    g = make_grid(3, 8)
    b = rand_field(g, np.random.default_rng(5))
    one = to_spectral(np.ones(g.shape), g)
    # Nyquist-carrying input is still reproduced: the split halves recombine on truncation
    assert l2_norm(dealias_product(one, b) - b) <= 1e-14 * l2_norm(b)


def convolution_oracle(a, b, grid):
    """Direct sum over k = p + q of Nyquist-free coefficients, kept on |k_i| < n/2."""
    n, d = grid.n, grid.dim
    idx = grid.mode_index
    out = np.zeros(grid.shape, dtype=complex)
    nz_a = np.argwhere(np.abs(a) > 0)
    nz_b = np.argwhere(np.abs(b) > 0)
    for pa in nz_a:
        for pb in nz_b:
            k = idx[pa] + idx[pb]
            if np.all(np.abs(k) < n // 2):
                out[tuple(k % n)] += a[tuple(pa)] * b[tuple(pb)]
    return out


@pytest.mark.parametrize("dim, n", [(2, 12), (3, 12)])
@pytest.mark.parametrize("pad", [Fraction(3, 2), Fraction(2)])
def test_dealias_matches_convolution(dim, n, pad):
    g = make_grid(dim, n, pad_factor=pad)
    rng = np.random.default_rng(dim * 10 + n)
    a = rand_field(g, rng, band=n // 3)
    b = rand_field(g, rng, band=n // 3)
    got = dealias_product(a, b).coeffs
    want = convolution_oracle(a.coeffs, b.coeffs, g)
    keep = ~g.nyquist_mask  # the oracle only covers modes strictly inside the grid
    assert np.abs(got - want)[keep].max() <= 1e-12 * np.abs(want).max()


def test_dealias_grid_mismatch():
    with pytest.raises(ValueError, match="different grids"):
        dealias_product(make_grid(2, 8).zeros(), make_grid(2, 16).zeros())


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(-3, 3), beta=st.floats(-3, 3))
def test_dealias_symmetric_bilinear(seed, alpha, beta):
    g = make_grid(2, 16)
    rng = np.random.default_rng(seed)
    a, b, c = (rand_field(g, rng) for _ in range(3))
    ab = dealias_product(a, b)
    assert l2_norm(ab - dealias_product(b, a)) <= 1e-13 * max(l2_norm(ab), 1e-300)
    lhs = dealias_product(a * alpha + c * beta, b)
    rhs = ab * alpha + dealias_product(c, b) * beta
    assert l2_norm(lhs - rhs) <= 1e-12 * max(l2_norm(lhs), l2_norm(ab) + l2_norm(c) * l2_norm(b), 1e-300)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.sampled_from([2, 3]))
def test_spectral_round_trip_property(seed, dim):
    g = make_grid(dim, 8)
    f = np.random.default_rng(seed).standard_normal(g.shape)
    back = to_physical(to_spectral(f, g))
    assert np.linalg.norm(back - f) <= 1e-12 * np.linalg.norm(f)


def test_gridspec_is_hashable_value():
    assert GridSpec(2, 8) == make_grid(2, 8)
