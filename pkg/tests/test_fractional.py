import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from fsl.farfield import FarFieldProfile
from fsl.field import Field, Grid
from fsl.fractional import (SpectralOperator, apply_lambda, heat_semigroup, periodic_poisson_1d,
                            poisson_constant, poisson_convolve_quadrature, poisson_evaluate)


def test_poisson_constant_values():
    assert poisson_constant(1) == pytest.approx(1 / np.pi)
    assert poisson_constant(2) == pytest.approx(1 / (2 * np.pi))
    assert poisson_constant(3) == pytest.approx(1 / np.pi**2)
    with pytest.raises(ValueError):
        poisson_constant(0)


@pytest.mark.parametrize("t", [0.1, 1.0, 7.0])
def test_poisson_kernel_unit_mass(t):
    m1, _ = integrate.quad(lambda x: float(poisson_evaluate(x, t)), -np.inf, np.inf)
    m2, _ = integrate.quad(lambda r: 2 * np.pi * r * float(poisson_evaluate(np.array([r, 0.0]), t, n=2)),
                           0, np.inf)
    assert m1 == pytest.approx(1.0, abs=1e-9)
    assert m2 == pytest.approx(1.0, abs=1e-9)


def test_periodic_kernel_is_image_sum():
    x = np.linspace(-5, 5, 11)
    images = sum(poisson_evaluate(x + m * 10.0, 0.7) for m in range(-20000, 20001))
    assert np.allclose(periodic_poisson_1d(x, 0.7, 10.0), images, rtol=1e-4)


def test_fractional_laplacian_on_modes():
    g = Grid(1, np.pi, 64)
    x = g.axis()
    for s in (0.5, 1.0, 2.0):
        op = SpectralOperator.fractional_laplacian(g, s)
        assert np.allclose(op.apply(np.sin(3 * x)), 3**s * np.sin(3 * x))
    g2 = Grid(2, np.pi, 32)
    X, Y = g2.mesh()
    op2 = SpectralOperator.fractional_laplacian(g2, 1.0)
    assert np.allclose(op2.apply(np.cos(3 * X + 4 * Y)), 5 * np.cos(3 * X + 4 * Y))


def test_semigroup_equals_periodic_poisson_convolution():
    g = Grid(1, 10.0, 256)
    x = g.axis()
    w = np.exp(-x * x) * (1 + 0.3 * x)
    t = 0.6
    spectral = SpectralOperator.semigroup(g, t).apply(w)
    kern = periodic_poisson_1d(x[:, None] - x[None, :], t, g.length)
    direct = kern @ w * g.dx
    assert np.allclose(spectral, direct, atol=1e-6)


def test_quadrature_oracle_on_R():
    # P(t) * P(1) = P(1 + t): Poisson kernel data have a closed-form flow
    w0 = lambda z: float(poisson_evaluate(z, 1.0))
    pts = np.array([-3.0, 0.0, 0.5, 4.0])
    got = poisson_convolve_quadrature(w0, 0.5, pts, support=(-200.0, 200.0))
    assert np.allclose(got, poisson_evaluate(pts, 1.5), atol=1e-6)
    with pytest.raises(ValueError):
        poisson_convolve_quadrature(w0, 0.5, pts)
    with pytest.raises(ValueError):
        poisson_convolve_quadrature(w0, 0.0, pts, support=(-1, 1))


def test_heat_semigroup_shifts_background():
    g = Grid(1, 32.0, 256)
    h = FarFieldProfile.shock(1.0)
    fld = Field(g, np.exp(-g.axis() ** 2), background=h, tau=1.0)
    out = heat_semigroup(fld, 0.5)
    assert out.tau == 1.5 and out.t == 0.5
    assert np.allclose(out.values, SpectralOperator.semigroup(g, 0.5).apply(fld.values))
    assert heat_semigroup(fld, 0.0) is fld
    with pytest.raises(ValueError):
        heat_semigroup(fld, 0.5, s=0.5)
    with pytest.raises(ValueError):
        heat_semigroup(fld, 0.5, epsilon=0.1)
    with pytest.raises(ValueError):
        heat_semigroup(fld, -1.0)


def test_apply_lambda_of_background_closed_form():
    g = Grid(1, 16.0, 128)
    h = FarFieldProfile.shock(0.6, 0.1)
    fld = Field(g, np.zeros(128), background=h, tau=2.0)
    lam = apply_lambda(fld)
    assert lam.background is None
    assert np.allclose(lam.values, -(2 * 0.6 / np.pi) * g.axis() / (4.0 + g.axis() ** 2))


def test_apply_lambda_matches_hilbert_derivative():
    # Lambda of the Gaussian: -(1/pi) p.v. int e'(z)/(x - z) dz in closed form via Dawson
    g = Grid(1, 40.0, 2048)
    x = g.axis()
    out = apply_lambda(Field(g, np.exp(-x * x))).values
    lam_exact = lambda z: (2 / np.sqrt(np.pi)) * (1 - 2 * z * special.dawsn(z))
    # the box is periodic: add the images of the slowly decaying tail
    M = 400
    exact = sum(lam_exact(x + m * g.length) for m in range(-M, M + 1))
    exact -= (2 / np.sqrt(np.pi)) / (g.length**2 * (M + 0.5))  # images beyond M, ~ -1/(sqrt(pi) z^2)
    sel = np.abs(x) < 5
    assert np.allclose(out[sel], exact[sel], atol=1e-8)


def test_order_checks():
    g = Grid(1, 1.0, 16)
    with pytest.raises(ValueError):
        SpectralOperator.fractional_laplacian(g, 0.0)
    with pytest.raises(ValueError):
        SpectralOperator.semigroup(g, -0.1)
    with pytest.raises(ValueError):
        SpectralOperator(g, -np.ones(9))
    with pytest.raises(ValueError):
        poisson_evaluate(0.0, 0.0)


@settings(max_examples=25, deadline=None)
@given(t1=st.floats(0.0, 2.0), t2=st.floats(0.0, 2.0), seed=st.integers(0, 2**16))
def test_semigroup_property_and_positivity(t1, t2, seed):
    g = Grid(1, 8.0, 64)
    w = np.random.default_rng(seed).random(64)
    s = lambda t, v: SpectralOperator.semigroup(g, t).apply(v)
    assert np.allclose(s(t1, s(t2, w)), s(t1 + t2, w), atol=1e-12)
    assert s(t1, w).sum() == pytest.approx(w.sum())
    if t1 > 0.05:
        # the periodic Poisson kernel is positive; spectral rounding only
        assert s(t1, w).min() >= -1e-12
