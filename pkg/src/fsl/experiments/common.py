"""Shared pieces of the verifiers: data suites, fits, tolerances and run pipelines."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from ..evolve import (SchemeConfig, evolve_nonlinear, evolve_similarity, to_similarity)
from ..farfield import FarFieldProfile
from ..field import Field, Grid, make_shock_data
from ..flux import as_components, get_flux
from ..norms import lq_norm

log = logging.getLogger(__name__)

FLOOR = 1e-12


# -- parameters -------------------------------------------------------------

def resolve_params(defaults: dict, overrides: dict | None) -> dict:
    """Merge ``overrides`` into ``defaults``; unknown names are rejected."""
    overrides = dict(overrides or {})
    unknown = sorted(set(overrides) - set(defaults))
    if unknown:
        raise ValueError(f"unknown parameter(s): {', '.join(unknown)}")
    out = dict(defaults)
    out.update(overrides)
    return out


def scheme(params: dict, frame: str = "physical") -> SchemeConfig:
    return SchemeConfig(flux=params.get("flux_kind", "auto"), cfl=params.get("cfl", 0.4),
                        epsilon=params.get("epsilon", 0.0), frame=frame)


def flux_of(params: dict):
    return get_flux(params.get("flux", "burgers"))


def shock_profile(params: dict) -> FarFieldProfile:
    return FarFieldProfile.shock(a=params.get("a", 1.0), mu=params.get("mu", 0.0))


# -- perturbations ----------------------------------------------------------

@dataclass(frozen=True)
class Perturbation:
    """Analytic 1-d perturbation ``v0`` with exact norms on the real line.

    ``decaying`` is False for the heavy tail, which does not vanish at the
    box edge; ``far_field`` then supplies it beyond the box.
    """

    kind: str
    fn: Callable
    decaying: bool = True
    support: float = np.inf

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    def is_zero(self) -> bool:
        return self.kind == "none"

    def lp_norm(self, p: float, interval: tuple | None = None) -> float:
        """``||v0||_p`` on ``interval`` (default the real line) by adaptive quadrature."""
        if self.is_zero():
            return 0.0
        lo, hi = interval if interval is not None else (-np.inf, np.inf)
        if np.isinf(p):
            xs = np.linspace(max(lo, -200.0), min(hi, 200.0), 400001)
            return float(np.max(np.abs(self(xs))))
        val = 0.0
        cuts = sorted({lo, hi, *[c for c in (-10.0, 0.0, 10.0) if lo < c < hi]})
        for a, b in zip(cuts[:-1], cuts[1:]):
            part, _ = integrate.quad(lambda z: abs(float(self(z))) ** p, a, b, limit=500,
                                     epsabs=1e-13, epsrel=1e-11)
            val += part
        return float(val ** (1.0 / p))


def make_perturbation(kind: str = "bump", mass: float = 1.0, width: float = 1.0, center: float = 0.0,
                      amplitude: float = 0.5, beta: float = 0.55, separation: float = 8.0,
                      height: float | None = None) -> Perturbation:
    """Standard perturbations.

    ``bump``: Gaussian of the given mass (or peak ``height``); ``two_bumps``:
    a bump and a half-height negative bump ``separation`` apart; ``indicator``:
    ``height`` times the indicator of an interval of length ``width``;
    ``heavy_tail``: ``amplitude <x>^(-beta)``, which lies in ``L^p`` only for
    ``p > 1/beta``; ``none``: zero.
    """
    if kind == "none":
        return Perturbation("none", lambda x: np.zeros_like(x))
    if width <= 0:
        raise ValueError("bump width must be positive")
    peak = mass / (np.sqrt(np.pi) * width) if height is None else float(height)
    if kind == "bump":
        return Perturbation("bump", lambda x: peak * np.exp(-((x - center) / width) ** 2))
    if kind == "two_bumps":
        c1, c2 = center - separation / 2, center + separation / 2
        return Perturbation("two_bumps", lambda x: peak * (np.exp(-((x - c1) / width) ** 2)
                                                           - 0.5 * np.exp(-((x - c2) / width) ** 2)))
    if kind == "indicator":
        amp = 1.0 if height is None else float(height)
        return Perturbation("indicator", lambda x: amp * (np.abs(x - center) < 0.5 * width).astype(float))
    if kind == "heavy_tail":
        return Perturbation("heavy_tail", lambda x: amplitude * (1.0 + x * x) ** (-beta / 2), decaying=False)
    raise ValueError(f"unknown perturbation kind {kind!r}")


def perturbation_from(params: dict) -> Perturbation:
    return make_perturbation(params.get("perturbation", "bump"), mass=params.get("mass", 1.0),
                             width=params.get("width", 1.0), center=params.get("center", 0.0),
                             amplitude=params.get("amplitude", 0.5), beta=params.get("beta", 0.55),
                             height=params.get("height"))


def data_resolution_error(pert: Perturbation, grid: Grid, p: float) -> float:
    """Relative mismatch between the sampled ``||v0||_p`` and quadrature on the same box."""
    if pert.is_zero():
        return 0.0
    sampled = lq_norm(Field(grid, pert(grid.axis())), p)
    exact = pert.lp_norm(p, (-grid.X, grid.X))
    return abs(sampled - exact) / exact


# -- fits and tolerances ----------------------------------------------------

def fit_slope(t, y, window: tuple | None = None, decades: float = 2.0) -> dict:
    """Least-squares slope of ``log y`` against ``log t``.

    Uses ``window`` when given, otherwise the last ``decades`` decades of ``t``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is None:
        window = (t.max() / 10**decades, t.max())
    sel = (t >= window[0] * (1 - 1e-9)) & (t <= window[1] * (1 + 1e-9)) & (y > 0)
    if sel.sum() < 3:
        raise ValueError("fewer than three positive points in the fit window")
    lt, ly = np.log(t[sel]), np.log(y[sel])
    A = np.column_stack([lt, np.ones_like(lt)])
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    dof = max(1, sel.sum() - 2)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    return {"slope": float(coef[0]), "intercept": float(coef[1]), "stderr": float(np.sqrt(cov[0, 0])),
            "points": int(sel.sum()), "window": [float(window[0]), float(window[1])]}


def richardson_tolerance(fine: float, coarse: float, dx_fine: float, base: float = 1e-3) -> tuple[float, float]:
    """``(tol, kappa)`` with ``tol = base + kappa dx`` and ``kappa`` from two grids.

    For a first-order quantity ``q_N = q + kappa dx`` the difference of the two
    grids is ``kappa dx_fine``.
    """
    kappa = abs(fine - coarse) / dx_fine
    return base + kappa * dx_fine, kappa


def relative_spread(a: float, b: float) -> float:
    den = max(abs(a), abs(b))
    return 0.0 if den == 0 else abs(a - b) / den


def coarse_grid(grid: Grid) -> Grid:
    return Grid(grid.n, grid.X, grid.N // 2)


# -- run audits ------------------------------------------------------------------

class PairAudit:
    """Tracks sup-norms and ``||u_i - u_j||_1`` over a batched physical run.

    Used as an ``evolve_nonlinear`` callback; ``pairs`` index batch members.
    """

    def __init__(self, pairs=((0, 1),)):
        self.pairs = list(pairs)
        self.l1: dict = {p: [] for p in self.pairs}
        self.sup_increase = -np.inf
        self._last_sup = None

    def start(self, fields):
        vals = np.stack([f.total() for f in fields])
        bg = fields[0].background
        far = bg.sup() if bg is not None else 0.0
        self._sup0 = np.maximum(np.max(np.abs(vals), axis=1), far)
        dx = fields[0].grid.cell_volume
        for i, j in self.pairs:
            self.l1[(i, j)].append(float(np.abs(fields[i].values - fields[j].values).sum() * dx))

    def __call__(self, integ):
        v = integ.v
        far = integ.bg.sup() if integ.bg is not None else 0.0
        tot = integ.total()
        sup = np.maximum(np.max(np.abs(tot.reshape(tot.shape[0], -1)), axis=1), far)
        self.sup_increase = max(self.sup_increase, float(np.max(sup - self._sup0)))
        dx = integ.grid.cell_volume
        for i, j in self.pairs:
            self.l1[(i, j)].append(float(np.abs(v[i] - v[j]).sum() * dx))

    def l1_increase(self) -> float:
        worst = -np.inf
        for s in self.l1.values():
            if len(s) > 1:
                worst = max(worst, float(np.max(np.diff(s))))
        return worst


def record_audit(report, audit: PairAudit, label: str, tol: float = 1e-6, l1: bool = True) -> None:
    """Checks for the maximum principle and, for decaying differences, L1 contraction.

    Data that do not decay feed difference mass through the box edge, so the
    L1 check is skipped for them (``l1=False``).
    """
    report.check(f"max_principle[{label}]", audit.sup_increase <= tol, audit.sup_increase, tol,
                 {"run": label, "sup_increase": audit.sup_increase})
    inc = audit.l1_increase()
    if l1:
        report.check(f"l1_contraction[{label}]", inc <= tol, inc, tol, {"run": label, "l1_increase": inc})
    report.ratios.setdefault("audits", {})[label] = {"sup_increase": audit.sup_increase, "l1_increase": inc}


# -- the shock pair pipeline --------------------------------------------------

def transported_far_field(pert: Perturbation, h: FarFieldProfile, f) -> Callable:
    """Perturbation beyond the box for non-decaying data: transport at the far-field speed."""
    comp = as_components(f, 1)[0]

    def ff(x, t):
        x = np.asarray(x, dtype=float)
        c = comp.df(np.asarray(h.h(x), dtype=float))
        return pert(x - c * t)

    return ff


@dataclass
class PairRun:
    """Similarity-frame trajectories of ``u`` (data ``phi_0 + v0``) and ``u^SS`` (data ``phi_0``)."""

    grid: Grid
    t: np.ndarray
    U: list
    Uss: list
    audit: PairAudit
    l1_similarity: np.ndarray
    tv_t: np.ndarray | None = None
    tv_u: np.ndarray | None = None


def shock_pair(params: dict, pert: Perturbation, grid: Grid, t_out, t_switch: float = 1.0,
               diagnostics: bool = False) -> PairRun:
    """Evolve ``u`` and the self-similar solution from the same step data.

    Both start from the pure step ``h(x/|x|)`` (``tau = 0``) so the second member
    is the self-similar solution itself, computed by the same scheme.  The
    physical frame covers ``[0, t_switch]``; the similarity frame then runs to
    ``max(t_out)``.  Returns the fields at ``t_out`` in similarity variables;
    with ``diagnostics`` the per-step total variation of ``u`` is kept too.
    """
    f = flux_of(params)
    h = shock_profile(params)
    u0 = make_shock_data(grid, h, None if pert.is_zero() else pert, tau=0.0)
    us0 = make_shock_data(grid, h, None, tau=0.0)
    ff_phys = None
    if not pert.decaying:
        ffv = transported_far_field(pert, h, f)
        ff_phys = lambda x, t: np.array([ffv(x, t), np.zeros_like(np.asarray(x, dtype=float))]).reshape(2, -1)
    audit = PairAudit()
    audit.start([u0, us0])
    trs = evolve_nonlinear([u0, us0], f, scheme(params), t_end=t_switch, callback=audit, far_field=ff_phys)
    t_out = np.sort(np.asarray(t_out, dtype=float))
    if t_out[0] < t_switch - 1e-12:
        raise ValueError("output times must not precede the frame switch")
    U0 = [to_similarity(tr.final()) for tr in trs]
    ff_sim = None
    if not pert.decaying:
        ffv = transported_far_field(pert, h, f)
        ff_sim = lambda y, s: np.array([ffv(np.exp(s) * np.asarray(y), np.exp(s)),
                                        np.zeros_like(np.asarray(y, dtype=float))]).reshape(2, -1)
    s_out = np.log(t_out)
    if s_out[-1] > U0[0].t + 1e-12:
        sim = evolve_similarity(U0, f, scheme(params, "similarity"), s_end=float(s_out[-1]),
                                output_s=[s for s in s_out if s > U0[0].t + 1e-12],
                                far_field=ff_sim, record_diagnostics=diagnostics)
        U = [fl for fl in sim[0].fields]
        Us = [fl for fl in sim[1].fields]
    else:
        sim = None
        U, Us = [], []
    if abs(s_out[0] - U0[0].t) < 1e-12:
        U = [U0[0]] + U
        Us = [U0[1]] + Us
    dy = grid.cell_volume
    l1 = np.array([t * np.abs(a.values - b.values).sum() * dy for t, a, b in zip(t_out, U, Us)])
    run = PairRun(grid, t_out, U, Us, audit, l1)
    if diagnostics:
        tt, tv = [trs[0].series("t")], [trs[0].series("tv")]
        if sim is not None:
            tt.append(np.exp(sim[0].series("t")))
            tv.append(sim[0].series("tv"))
        run.tv_t, run.tv_u = np.concatenate(tt), np.concatenate(tv)
    return run


def similarity_difference_norm(a: Field, b: Field, t: float, q: float) -> float:
    """``||u - u^SS||_{L^q}`` at time ``t`` from similarity-frame fields (``n = 1``)."""
    w = Field(a.grid, a.values - b.values)
    return float(t ** (1.0 / q) * lq_norm(w, q)) if np.isfinite(q) else lq_norm(w, q)


# -- derivatives of 1-d similarity fields -----------------------------------------

def _phi_derivative(bg: FarFieldProfile | None, y, order: int):
    if bg is None or bg.is_constant:
        return np.zeros_like(y)
    c = 2 * bg.a / np.pi
    if order == 1:
        return -c / (1 + y * y)
    if order == 2:
        return c * 2 * y / (1 + y * y) ** 2
    raise ValueError("order must be 1 or 2")


def _fd(v: np.ndarray, dx: float, order: int) -> np.ndarray:
    if order == 1:
        return np.gradient(v, dx)
    d2 = np.zeros_like(v)
    d2[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / (dx * dx)
    d2[0], d2[-1] = d2[1], d2[-2]
    return d2


def derivative_samples(U: Field, order: int) -> np.ndarray:
    """Samples of ``d^k U/dy^k``: analytic for the background, finite differences for ``V``."""
    y = U.grid.axis()
    return _phi_derivative(U.background, y, order) + _fd(np.asarray(U.values), U.grid.dx, order)


def derivative_sup(U: Field, order: int) -> float:
    """``sup |d^k U/dy^k|`` with local refinement around the sampled maximum.

    Between samples the perturbation derivative is interpolated linearly and the
    background derivative is evaluated exactly, so the analytic peak of the
    reference (at ``y = 0`` for ``k = 1``) is found even though it is not a sample.
    """
    g = U.grid
    y = g.axis()
    dv = _fd(np.asarray(U.values), g.dx, order)
    samples = _phi_derivative(U.background, y, order) + dv
    i = int(np.argmax(np.abs(samples)))
    best = float(abs(samples[i]))
    lo, hi = y[max(i - 1, 0)], y[min(i + 1, g.N - 1)]

    def neg(z):
        return -abs(float(_phi_derivative(U.background, np.array([z]), order)[0] + np.interp(z, y, dv)))

    res = optimize.minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return max(best, -float(res.fun))
