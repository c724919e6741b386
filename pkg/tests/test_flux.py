import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fsl.farfield import FarFieldProfile
from fsl.field import Field, Grid
from fsl.flux import (FluxFunction, as_components, burgers, divided_difference, g_coefficient,
                      get_flux, godunov_flux, lipschitz_on, llf_flux, numerical_flux, polynomial,
                      signed_square)

vals = st.floats(-3, 3, allow_nan=False)


def _burgers_riemann(ul, ur):
    # flux at x/t = 0 of the entropy Riemann solution
    if ul > ur:
        s = 0.5 * (ul + ur)
        u = ul if s > 0 else ur
    else:
        u = ul if ul > 0 else (ur if ur < 0 else 0.0)
    return 0.5 * u * u


@pytest.mark.parametrize("ul,ur", [(1, -1), (-1, 1), (2, 1), (-2, -1), (1, 2), (-0.5, 1.5), (0.3, -0.7), (-0.3, 0.7)])
def test_godunov_burgers_matches_riemann_solution(ul, ur):
    got = godunov_flux(burgers(), np.array(float(ul)), np.array(float(ur)))
    assert float(got) == pytest.approx(_burgers_riemann(ul, ur))


def test_godunov_rejects_nonconvex():
    with pytest.raises(ValueError):
        godunov_flux(get_flux("cubic"), np.zeros(2), np.ones(2))


@settings(max_examples=60, deadline=None)
@given(u=vals, a=vals, b=vals, name=st.sampled_from(["burgers", "cubic", "abs", "signed_square"]))
def test_numerical_fluxes_consistent_and_monotone(u, a, b, name):
    f = get_flux(name)
    kinds = ["llf"] + (["godunov"] if f.convex else [])
    lo, hi = min(a, b), max(a, b)
    for kind in kinds:
        F = numerical_flux(kind)
        assert float(F(f, np.array(u), np.array(u))) == pytest.approx(float(f(u)), abs=1e-12)
        # nondecreasing in the left state, nonincreasing in the right one (within [-3, 3])
        assert F(f, np.array(hi), np.array(u)) >= F(f, np.array(lo), np.array(u)) - 1e-12
        assert F(f, np.array(u), np.array(hi)) <= F(f, np.array(u), np.array(lo)) + 1e-12


def test_presets_and_lipschitz():
    assert get_flux("burgers").lipschitz_on(2.0) == 2.0
    assert get_flux("cubic").lipschitz_on(2.0) == 12.0
    assert get_flux("abs").lipschitz_on(5.0) == 1.0
    assert get_flux("abs").smoothness == "lipschitz"
    assert signed_square(0.5).lipschitz_on(1.0) == 1.5
    assert get_flux("zero").is_zero
    with pytest.raises(ValueError):
        get_flux("nope")
    with pytest.raises(ValueError):
        FluxFunction("x", abs, abs, smoothness="rough")
    with pytest.raises(ValueError):
        FluxFunction("x", abs, abs, convex=True)


@settings(max_examples=30, deadline=None)
@given(coeffs=st.lists(st.floats(-2, 2), min_size=1, max_size=5), m=st.floats(0.1, 3))
def test_polynomial_lipschitz_against_sampling(coeffs, m):
    p = polynomial(coeffs)
    u = np.linspace(-m, m, 20001)
    sampled = float(np.max(np.abs(p.df(u))))
    assert p.lipschitz_on(m) == pytest.approx(sampled, rel=1e-6, abs=1e-9)


def test_polynomial_ignores_negligible_leading_coefficient():
    p = polynomial([0.0, 0.0, 0.0, 1.0, 2.2250738585e-313])
    assert p.lipschitz_on(1.0) == pytest.approx(3.0)
    q = polynomial([0.0, 1.0, 1e-320])
    assert q.convex and q.argmin == -np.inf
    assert polynomial([0.0]).lipschitz_on(1.0) == 0.0


def test_polynomial_convexity_flags():
    assert polynomial([0, 0, 0.5]).convex and polynomial([0, 0, 0.5]).argmin == 0.0
    assert polynomial([0, 2]).convex and polynomial([0, 2]).argmin == -np.inf
    assert not polynomial([0, 0, -1]).convex
    assert not polynomial([0, 0, 0, 1]).convex
    assert get_flux([0, 0, 0.5])(2.0) == pytest.approx(2.0)


def test_components_and_vector_lipschitz():
    comps = as_components("burgers", 2)
    assert comps[0].name == "burgers" and comps[1].is_zero
    assert lipschitz_on((burgers(), burgers()), 1.5, n=2) == 3.0
    with pytest.raises(ValueError):
        as_components((burgers(),), 2)


@settings(max_examples=50, deadline=None)
@given(u=vals, v=vals)
def test_divided_difference(u, v):
    f = burgers()
    got = float(divided_difference(f, np.array(u), np.array(v)))
    assert got == pytest.approx(0.5 * (u + v), abs=1e-9)


def test_g_coefficient_shape_and_values():
    g = Grid(1, 8.0, 32)
    h = FarFieldProfile.shock(1.0)
    u = Field(g, np.exp(-g.axis() ** 2), background=h)
    us = Field(g, np.zeros(32), background=h)
    c = g_coefficient(u, us, "burgers")
    assert c.shape == (1, 32)
    assert np.allclose(c[0], 0.5 * (u.total() + us.total()))
    with pytest.raises(ValueError):
        g_coefficient(u, Field(Grid(1, 4.0, 32), np.zeros(32)), "burgers")
