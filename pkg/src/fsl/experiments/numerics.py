"""Verifiers of the discretisation itself: linear exactness and first-order convergence."""

from __future__ import annotations

import time

import numpy as np

from ..evolve import SchemeConfig, evolve_linear_continuity, evolve_nonlinear
from ..farfield import FarFieldProfile
from ..field import Field, Grid, make_shock_data
from ..flux import zero
from ..fractional import poisson_convolve_quadrature
from .report import ExperimentReport

LINEAR_DEFAULTS = {
    "a": 1.0, "mu": 0.0, "tau": 1.0, "N": 4096, "X": 128.5, "t_end": 1.0, "tol": 1e-6,
    "runtime_max": 10.0, "bump_height": 0.5, "bump_width": 1.0, "oracle_points": 9, "cfl": 0.4,
}


def verify_linear_exactness(params: dict) -> ExperimentReport:
    """With zero flux the scheme must reproduce the exact Poisson flow of step and bump data."""
    t0 = time.perf_counter()
    rep = ExperimentReport("linear_exactness", dict(params))
    grid = Grid(1, params["X"], params["N"])
    h = FarFieldProfile.shock(params["a"], params["mu"])
    tau, T = params["tau"], params["t_end"]
    cfg = SchemeConfig(cfl=params["cfl"])
    u0 = make_shock_data(grid, h, None, tau=tau)
    traj = evolve_nonlinear(u0, zero(), cfg, t_end=T)
    u = traj.final()
    rep.artifacts.update(step_trajectory=traj, step_final=u)
    exact = params["mu"] - (2 * params["a"] / np.pi) * np.arctan(grid.axis() / (tau + T))
    scale = max(float(np.max(np.abs(exact))), 1e-300)
    err = float(np.max(np.abs(u.total() - exact))) / scale
    elapsed = time.perf_counter() - t0
    rep.check("step_relative_linf", err <= params["tol"], err, params["tol"])
    rep.check("runtime", elapsed < params["runtime_max"], elapsed, params["runtime_max"])
    rep.add_series("step_solution", grid.axis(), u.total(), ("x", "u"))
    # bump on top of the step, against the periodised kernel integrated by quadrature
    hb, wb = params["bump_height"], params["bump_width"]
    bump = lambda x: hb * np.exp(-(np.asarray(x) / wb) ** 2)
    ub = evolve_nonlinear(make_shock_data(grid, h, bump, tau=tau), zero(), cfg, t_end=T).final()
    pts = np.linspace(-6 * wb, 6 * wb, params["oracle_points"])
    oracle = poisson_convolve_quadrature(bump, T, pts, support=(-grid.X, grid.X), period=grid.length)
    perturb = Field(grid, ub.values).evaluate(pts)
    berr = float(np.max(np.abs(perturb - oracle)) / np.max(np.abs(oracle)))
    rep.check("bump_relative_linf", berr <= params["tol"], berr, params["tol"], {"points": pts.tolist()})
    rep.runtime = time.perf_counter() - t0
    return rep


REFINEMENT_DEFAULTS = {
    "N": 4096, "X": 32.0, "speed": 0.5, "t_end": 1.0, "width": 1.0, "ratio_min": 1.9, "cfl": 0.4,
}


def _continuity_error(grid: Grid, c: float, T: float, width: float, cfl: float) -> float:
    x = grid.axis()
    v0 = np.exp(-(x / width) ** 2) / (np.sqrt(np.pi) * width)
    tr = evolve_linear_continuity(Field(grid, v0), np.array([c]), SchemeConfig(cfl=cfl), t_end=T)
    k = grid.wavenumbers()[0]
    exact = np.fft.irfft(np.fft.rfft(v0) * np.exp(-T * np.abs(k) - 1j * k * c * T), n=grid.N)
    return float(np.abs(tr.final().values - exact).sum() * grid.dx)


def verify_refinement(params: dict) -> ExperimentReport:
    """Doubling the resolution halves the L1 error of the drift-diffusion scheme."""
    t0 = time.perf_counter()
    rep = ExperimentReport("refinement", dict(params))
    N = params["N"]
    errs = {}
    for n in (N // 2, N):
        errs[n] = _continuity_error(Grid(1, params["X"], n), params["speed"], params["t_end"],
                                    params["width"], params["cfl"])
    ratio = errs[N // 2] / errs[N]
    rep.ratios.update(error_coarse=errs[N // 2], error_fine=errs[N], reduction=ratio)
    rep.add_series("l1_error", list(errs), list(errs.values()), ("N", "L1 error"))
    rep.check("error_reduction", ratio >= params["ratio_min"], ratio, params["ratio_min"])
    rep.runtime = time.perf_counter() - t0
    return rep
