import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from fsl.farfield import FarFieldProfile
from fsl.field import Field, Grid
from fsl.norms import (AmalgamIndex, MovingWeight, amalgam_norm, ball_integral, cube_layout, cube_norms,
                       holder_seminorm, lq_norm, smooth_bump, tv_norm, weighted_l1)


def test_lq_norm_of_gaussian():
    g = Grid(1, 20.0, 2048)
    f = Field(g, np.exp(-g.axis() ** 2))
    assert lq_norm(f, 1) == pytest.approx(np.sqrt(np.pi), rel=1e-10)
    assert lq_norm(f, 2) == pytest.approx((np.pi / 2) ** 0.25, rel=1e-10)
    assert lq_norm(f, np.inf) == pytest.approx(1.0, abs=1e-4)
    with pytest.raises(ValueError):
        lq_norm(f, 0.5)


def test_cube_indicator_has_unit_cube_norms():
    g = Grid(1, 8.0, 1024)  # cube faces on cell edges
    x = g.axis()
    f = Field(g, ((x > 1.5) & (x < 2.5)).astype(float))
    local, lay = cube_norms(f, 1)
    assert local[lay.centers == 2][0] == pytest.approx(1.0)
    assert np.allclose(np.delete(local, np.flatnonzero(lay.centers == 2)), 0.0)
    for p, q in [(1, 1), (2, 1), (np.inf, 1), (np.inf, np.inf), (1, 3)]:
        assert amalgam_norm(f, AmalgamIndex(p, q)) == pytest.approx(1.0)


def test_cube_layout_clips_half_cubes():
    lay = cube_layout(Grid(1, 4.0, 64))
    # box [-4, 4): cubes centred at -4 and 4 stick out
    assert lay.centers[0] == -4 and lay.centers[-1] == 4
    assert lay.clipped[0] and lay.clipped[-1] and not lay.clipped[1:-1].any()
    assert lay.hi[0] - lay.lo[0] == pytest.approx(0.5)


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("p", [1.0, 2.0, 3.5])
def test_amalgam_with_equal_exponents_is_lebesgue(n, p):
    g = Grid(n, 6.3, 64)
    rng = np.random.default_rng(int(p * 10) + n)
    f = Field(g, rng.normal(size=g.shape))
    assert amalgam_norm(f, AmalgamIndex(p, p)) == pytest.approx(lq_norm(f, p), rel=1e-12)


def test_amalgam_integrals_are_exact_for_off_lattice_cubes():
    # cube faces cut cells; compare with exact integral of the piecewise-constant function
    g = Grid(1, 5.0, 16)
    vals = np.arange(16, dtype=float)
    f = Field(g, vals)
    local, lay = cube_norms(f, 1)
    edges = -5.0 + np.arange(17) * g.dx
    pc = lambda z: vals[np.clip(np.searchsorted(edges, z, side="right") - 1, 0, 15)]
    for k, lo, hi in zip(lay.centers, lay.lo, lay.hi):
        exact, _ = integrate.quad(pc, lo, hi, points=edges[(edges > lo) & (edges < hi)], limit=100)
        assert local[lay.centers == k][0] == pytest.approx(exact, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**16), p1=st.floats(1, 6), dp=st.floats(0, 6))
def test_amalgam_embeddings(seed, p1, dp):
    g = Grid(1, 10.0, 128)
    f = Field(g, np.random.default_rng(seed).normal(size=128))
    p2 = p1 + dp
    # l^p1 into l^p2 outside, L^inf local norm dominates L^q on unit cubes
    assert amalgam_norm(f, AmalgamIndex(p2, 1)) <= amalgam_norm(f, AmalgamIndex(p1, 1)) * (1 + 1e-12)
    assert amalgam_norm(f, AmalgamIndex(p1, 2)) <= amalgam_norm(f, AmalgamIndex(p1, np.inf)) * (1 + 1e-12)


def test_amalgam_info():
    g = Grid(2, 3.0, 32)
    f = Field(g, np.ones(g.shape))
    val, info = amalgam_norm(f, AmalgamIndex(1, 1), return_info=True)
    assert val == pytest.approx(36.0)
    assert info["cubes"] == 49 and info["clipped_cubes"] == 49 - 25


def test_tv_norm():
    g = Grid(1, 10.0, 256)
    h = FarFieldProfile.shock(0.75, 0.1)
    step = Field(g, np.zeros(256), background=h, tau=0.5)
    assert tv_norm(step) == pytest.approx(1.5)
    bump = Field(g, np.exp(-g.axis() ** 2))
    assert tv_norm(bump) == pytest.approx(2 * bump.values.max())
    with pytest.raises(ValueError):
        tv_norm(Field(Grid(2, 1.0, 16), np.zeros((16, 16))))


def test_smooth_bump_and_moving_weight():
    r = np.linspace(0, 3, 301)
    b = smooth_bump(r)
    assert np.all(b[r <= 1] == 1) and np.all(b[r >= 2] == 0)
    assert np.all(np.diff(b) <= 1e-15)
    w = MovingWeight(L=2.0, t=1.5, x0=(1.0,), radius=0.5)
    assert w(np.array([1.0 + 3.0])) == 1.0   # inside the moving plateau
    assert w(np.array([1.0 + 4.1])) == 0.0
    assert w.at_time(0.0)(np.array([2.1])) == 0.0
    with pytest.raises(ValueError):
        MovingWeight(L=-1.0)
    with pytest.raises(ValueError):
        w(np.array([0.0]), np.array([0.0]))


def test_weighted_l1_and_ball_integral():
    g = Grid(1, 20.0, 1024)
    f = Field(g, np.ones(1024))
    assert ball_integral(f, 0.3, 2.7) == pytest.approx(5.4)
    big = MovingWeight(radius=100.0)
    assert weighted_l1(f, big) == pytest.approx(40.0)
    g2 = Grid(2, 4.0, 256)
    assert ball_integral(Field(g2, np.ones(g2.shape)), (0.0, 0.0), 1.0) == pytest.approx(np.pi, rel=1e-2)


def test_holder_seminorm():
    g = Grid(1, 4.0, 256)
    x = g.axis()
    lin = Field(g, 3 * x)
    assert holder_seminorm(lin, 1.0) == pytest.approx(3.0)
    root = Field(g, np.sqrt(np.abs(x)))
    assert holder_seminorm(root, 0.5, max_separation=8.0) <= 1.0 + 1e-12
    with pytest.raises(ValueError):
        holder_seminorm(lin, 1.5)
    with pytest.raises(ValueError):
        holder_seminorm(lin, 0.5, max_separation=g.dx / 2)
    g2 = Grid(2, 2.0, 32)
    X, Y = g2.mesh()
    assert holder_seminorm(Field(g2, X + Y), 1.0) == pytest.approx(np.sqrt(2))
