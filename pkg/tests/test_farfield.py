import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from fsl.farfield import FarFieldProfile
from fsl.fractional import poisson_convolve_angular


def _poisson_step_quad(a, mu, x, tau):
    # P(., tau) * (mu - a sign) on R, integrated directly
    ker = lambda z: tau / np.pi / ((x - z) ** 2 + tau**2)
    left, _ = integrate.quad(ker, -np.inf, 0.0, epsabs=1e-13)
    right, _ = integrate.quad(ker, 0.0, np.inf, epsabs=1e-13)
    return mu + a * left - a * right


@pytest.mark.parametrize("x", [-7.0, -0.3, 0.0, 1.1, 40.0])
@pytest.mark.parametrize("tau", [0.5, 1.0, 3.0])
def test_shock_reference_matches_poisson_flow(x, tau):
    h = FarFieldProfile.shock(a=0.7, mu=0.2)
    assert h.reference(x, tau=tau) == pytest.approx(_poisson_step_quad(0.7, 0.2, x, tau), abs=1e-10)


def test_shock_limits_and_bounds():
    h = FarFieldProfile.shock(a=1.0, mu=0.5)
    assert h.h(-3.0) == 1.5 and h.h(2.0) == -0.5
    assert h.bounds() == (-0.5, 1.5)
    assert h.sup() == 1.5
    assert h.reference(np.array([-1e12, 1e12]), tau=1.0) == pytest.approx([1.5, -0.5])
    assert np.array_equal(h.reference(np.array([-1.0, 2.0]), tau=0.0), [1.5, -0.5])


@pytest.mark.parametrize("pt", [(1.0, 0.0), (0.3, -0.8), (-2.0, 1.5), (0.0, 4.0)])
def test_angular_reference_matches_quadrature(pt):
    hfun = lambda th: np.cos(th) + 0.3 * np.sin(2 * th) - 0.1
    h = FarFieldProfile.angular(hfun, 64)
    got = h.reference(np.array(pt[0]), np.array(pt[1]), tau=1.0)
    assert got == pytest.approx(poisson_convolve_angular(hfun, *pt, t=1.0), abs=1e-7)


@pytest.mark.parametrize("n", [1, 2])
def test_lambda_reference_is_minus_tau_derivative(n):
    # phi_tau solves the linear equation with time tau, so Lambda phi = -d phi / d tau
    if n == 1:
        h = FarFieldProfile.shock(a=1.3, mu=0.0)
        pts = (np.linspace(-9, 9, 37),)
    else:
        h = FarFieldProfile.angular(lambda th: np.sin(th) ** 2 + np.cos(3 * th), 32)
        xs = np.linspace(-4, 4, 9)
        pts = (xs[:, None], xs[None, :] + 0.01)
    tau, d = 1.7, 1e-5
    fd = -(h.reference(*pts, tau=tau + d) - h.reference(*pts, tau=tau - d)) / (2 * d)
    assert np.allclose(h.lambda_reference(*pts, tau=tau), fd, atol=1e-8)


def test_tail_amplitude():
    h = FarFieldProfile.shock(a=0.8)
    y = 1e6
    assert abs(h.reference(y, tau=1.0) - h.h(y)) * y == pytest.approx(h.tail_amplitude(), rel=1e-9)


def test_constant_and_descriptor_roundtrip():
    c1 = FarFieldProfile.constant(0.4)
    c2 = FarFieldProfile.constant(0.4, n=2)
    assert c1.is_constant and c2.is_constant
    assert np.allclose(c2.reference(np.array([1.0, -3.0]), np.array([2.0, 0.5])), 0.4)
    for prof in (FarFieldProfile.shock(0.3, -0.1, tau=2.0), FarFieldProfile.angular(np.cos, 16, tau=0.5)):
        back = FarFieldProfile.from_descriptor(prof.descriptor())
        assert back.descriptor() == prof.descriptor()
    assert FarFieldProfile.from_descriptor(None) is None
    with pytest.raises(ValueError):
        FarFieldProfile.from_descriptor({"kind": "weird"})


def test_invalid_profiles():
    with pytest.raises(ValueError):
        FarFieldProfile(n=3)
    with pytest.raises(ValueError):
        FarFieldProfile(n=2)
    with pytest.raises(ValueError):
        FarFieldProfile.shock(tau=-1.0)
    with pytest.raises(ValueError):
        FarFieldProfile.shock().lambda_reference(0.0, tau=0.0)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(-2, 2), mu=st.floats(-2, 2), lam=st.floats(0.1, 10), x=st.floats(-50, 50))
def test_reference_scaling(a, mu, lam, x):
    h = FarFieldProfile.shock(a, mu)
    # phi_tau(lam x) = phi_{tau/lam}(x) and the range is within the data bounds
    assert h.reference(lam * x, tau=1.0) == pytest.approx(h.reference(x, tau=1.0 / lam), abs=1e-12)
    lo, hi = h.bounds()
    assert lo - 1e-12 <= h.reference(x, tau=1.0) <= hi + 1e-12
