import dataclasses

import numpy as np
import pytest

from fsl.evolve import evolve_nonlinear
from fsl.farfield import FarFieldProfile
from fsl.field import Field, Grid, read_snapshot
from fsl.selfsimilar import (ProfileNotConverged, compute_profile, count_sign_changes, export, fit_tail,
                             is_monotone, solution_at, steady_state_check)


@pytest.fixture(scope="module")
def burgers_profile():
    return compute_profile(FarFieldProfile.shock(1.0), "burgers", grid=Grid(1, 64.0, 512), tol=1e-7)


def test_linear_profile_is_arctan():
    h = FarFieldProfile.shock(0.7, 0.2)
    p = compute_profile(h, "zero", grid=Grid(1, 32.0, 256))
    y = p.grid.axis()
    assert np.allclose(p.values(), 0.2 - (1.4 / np.pi) * np.arctan(y), atol=1e-14)
    assert p.monotone


def test_constant_far_field_gives_constant_profile():
    p = compute_profile(FarFieldProfile.constant(0.3), "burgers", grid=Grid(1, 16.0, 128))
    assert p.is_constant()
    assert np.all(p.values() == 0.3)
    with pytest.raises(ValueError, match="constant"):
        fit_tail(p)


def test_burgers_profile_shape(burgers_profile):
    p = burgers_profile
    v = p.values()
    # f(u) = u^2/2 and odd data: the profile is odd and decreasing
    assert np.max(np.abs(v + v[::-1])) < 1e-12
    assert p.monotone and is_monotone(v, decreasing=True)
    assert p.sign_changes[-1] == 0
    assert p.residual < 1e-7
    assert np.all(np.abs(v) < 1.0)


def test_burgers_profile_matches_physical_evolution(burgers_profile):
    # step data smoothed to scale tau = 0.1 and evolved to t = 10 in the physical frame
    h = FarFieldProfile.shock(1.0)
    g = Grid(1, 256.0, 2048)
    u = evolve_nonlinear(Field(g, np.zeros(2048), background=h, tau=0.1, t=0.0), "burgers", t_end=10.0).final()
    y = np.linspace(-8, 8, 33)
    assert np.max(np.abs(u.evaluate(10 * y) - burgers_profile.evaluate(y))) < 1e-2
    ss = solution_at(burgers_profile, 10.0, Grid(1, 256.0, 2048))
    assert ss.t == 10.0
    assert np.allclose(ss.evaluate(10 * y), burgers_profile.evaluate(y), atol=1e-9)


def test_steady_state_check(burgers_profile):
    err = steady_state_check(burgers_profile, "burgers", 0.01)
    assert err < 1e-3


def test_tail_fit(burgers_profile):
    tf = fit_tail(burgers_profile, (8, 32))
    assert tf.slope == pytest.approx(-1.0, abs=0.05)
    assert tf.slope_left == pytest.approx(tf.slope_right, abs=1e-10)
    assert tf.two_sided_ratio < 1.1
    with pytest.raises(ValueError, match="0.8 Y"):
        fit_tail(burgers_profile, (8, 60))
    with pytest.raises(ValueError):
        fit_tail(burgers_profile, (10, 5))


def test_tail_fit_refuses_values_below_truncation(burgers_profile):
    # |U - h| ~ 0.6 / y on the window; a loose steady state must block the fit
    loose = dataclasses.replace(burgers_profile, convergence_error=0.01)
    with pytest.raises(ValueError, match="truncation"):
        fit_tail(loose, (8, 32))


def test_not_converged_keeps_history():
    with pytest.raises(ProfileNotConverged) as err:
        compute_profile(FarFieldProfile.shock(1.0), "burgers", grid=Grid(1, 32.0, 256), tol=1e-12, s_max=1.0)
    hist = err.value.history
    assert hist.shape[1] == 2 and hist.shape[0] >= 3
    assert np.all(np.diff(hist[:, 0]) > 0)


def test_count_sign_changes():
    assert count_sign_changes(np.array([0.0, 1.0, 2.0, 1.0, 0.0, 1.0])) == 2
    assert count_sign_changes(np.linspace(1, 0, 10)) == 0
    assert count_sign_changes(np.array([1.0, 1.0, 1.0])) == 0


def test_export(tmp_path, burgers_profile):
    snap, side = export(burgers_profile, tmp_path / "profile.snap", tail_window=(8, 32))
    back = read_snapshot(snap)
    assert np.array_equal(back.values, burgers_profile.field.values)
    text = side.read_text()
    assert "tail_slope" in text and "residual" in text and "monotone = true" in text
    _, side2 = export(burgers_profile, tmp_path / "p2.snap", tail_window=(1e-3, 1e-2))
    assert "refused" in side2.read_text()
