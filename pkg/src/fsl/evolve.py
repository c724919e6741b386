"""Time integration in physical and similarity variables.

All integrators use Strang splitting: an exact spectral half-step of the
fractional heat semigroup, a full explicit SSP-RK2 finite-volume step for the
transport part, and another semigroup half-step.  Only the perturbation ``v``
of ``u = phi + v`` is evolved; the background is handled analytically.

Similarity variables ``(y, s) = (x/t, log t)`` turn the equation into

    U_s = y . grad U - div f(U) - Lambda U  (+ eps e^{-s} Delta U),

whose steady states are the self-similar solutions ``u(x, t) = U(x/t)``.
The background there is frozen at ``tau = 1`` because ``phi_1`` is itself a
steady state of the linear part.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .field import Field, Grid
from .flux import as_components, godunov_flux, llf_flux

log = logging.getLogger(__name__)

FRAMES = ("physical", "similarity")
FLUX_KINDS = ("auto", "godunov", "llf")


class SolverError(RuntimeError):
    """Integration failure at a given step."""

    def __init__(self, msg: str, step: int | None = None):
        super().__init__(msg if step is None else f"step {step}: {msg}")
        self.step = step


class CFLViolation(ValueError):
    pass


class MaxPrincipleViolation(SolverError):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    """Numerical scheme options.

    ``flux="auto"`` picks Godunov for convex components and local
    Lax-Friedrichs otherwise.
    """

    flux: str = "auto"
    cfl: float = 0.4
    epsilon: float = 0.0
    frame: str = "physical"
    s: float = 1.0
    max_principle_tol: float = 1e-6

    def __post_init__(self):
        kind = {"local-lax-friedrichs": "llf", "lax-friedrichs": "llf"}.get(self.flux, self.flux)
        object.__setattr__(self, "flux", kind)
        if kind not in FLUX_KINDS:
            raise ValueError(f"unknown convective flux {self.flux!r}")
        if not 0 < self.cfl <= 1:
            raise ValueError("CFL out of (0,1]")
        if self.epsilon < 0:
            raise ValueError("vanishing viscosity must be >= 0")
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}")
        if not 0 < self.s <= 2:
            raise ValueError("order s must lie in (0, 2]")


# -- trajectories -----------------------------------------------------------

DIAG_COLUMNS = ("t", "sup_norm", "tv", "mass", "max_grad", "dt")


@dataclass
class Trajectory:
    """Snapshots at requested times plus per-step diagnostics.

    In the similarity frame the time label is ``s = log t``.
    """

    frame: str = "physical"
    snapshots: list = dc_field(default_factory=list)
    diagnostics: dict = dc_field(default_factory=lambda: {c: [] for c in DIAG_COLUMNS})
    extra: dict = dc_field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.snapshots])

    @property
    def fields(self) -> list:
        return [f for _, f in self.snapshots]

    def at(self, t: float, rtol: float = 1e-9) -> Field:
        for tj, fj in self.snapshots:
            if abs(tj - t) <= rtol * max(1.0, abs(t)):
                return fj
        raise KeyError(f"no snapshot at t={t}")

    def final(self) -> Field:
        return self.snapshots[-1][1]

    def series(self, name: str) -> np.ndarray:
        return np.asarray(self.diagnostics[name], dtype=float)

    @property
    def n_steps(self) -> int:
        return len(self.diagnostics["dt"])

    def _record(self, **vals):
        for c in DIAG_COLUMNS:
            self.diagnostics[c].append(vals[c])

    def _freeze(self):
        self.diagnostics = {c: np.asarray(v, dtype=float) for c, v in self.diagnostics.items()}

    def to_csv(self, path) -> None:
        cols = [np.asarray(self.diagnostics[c], dtype=float) for c in DIAG_COLUMNS]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(DIAG_COLUMNS)
            for row in zip(*cols):
                w.writerow([repr(float(v)) for v in row])


# -- shared machinery ---------------------------------------------------------

def _pick_numflux(comp, kind: str):
    if kind == "godunov":
        if not comp.convex:
            raise ValueError(f"Godunov flux needs a convex flux, {comp.name} is not")
        return godunov_flux
    if kind == "llf":
        return llf_flux
    return godunov_flux if comp.convex else llf_flux


def _ghost_coords(grid: Grid, axis: int, side: int):
    """Coordinates of the ghost layer beyond the box along ``axis`` (side -1 or +1)."""
    xg = side * (grid.X + 0.5 * grid.dx)
    ax = grid.axis()
    if grid.n == 1:
        return (np.array([xg]),)
    if axis == 0:
        return (np.array([xg]), ax)
    return (ax, np.array([xg]))


def _laplacian_reference(bg, coords, tau):
    """``Delta phi_tau`` using harmonicity of the Poisson extension in ``(x, tau)``."""
    if bg is None or bg.is_constant:
        return 0.0
    if bg.n == 1:
        (x,) = coords
        return (2 * bg.a / np.pi) * 2 * x * tau / (tau * tau + x * x) ** 2
    h = 1e-3 * tau
    return -(bg.reference(*coords, tau=tau + h) - 2 * bg.reference(*coords, tau=tau)
             + bg.reference(*coords, tau=tau - h)) / (h * h)


def _sl(ax: int, start, stop) -> tuple:
    return (slice(None),) * ax + (slice(start, stop),)


def _pad(arr, ax: int, lo, hi):
    """Copy of ``arr`` with one ghost layer on each side of ``ax`` (values broadcast)."""
    shape = list(arr.shape)
    shape[ax] += 2
    out = np.empty(shape)
    out[_sl(ax, 1, -1)] = arr
    out[_sl(ax, 0, 1)] = lo
    out[_sl(ax, -1, None)] = hi
    return out


class _Engine:
    """Spectral and finite-volume kernels shared by the integrators.

    State arrays carry a leading batch axis.
    """

    def __init__(self, grid: Grid, f, cfg: SchemeConfig, background=None):
        self.grid = grid
        self.cfg = cfg
        self.bg = background
        n = grid.n
        self.comps = as_components(f, n)
        self.numflux = [_pick_numflux(c, cfg.flux) for c in self.comps]
        self.active = [not c.is_zero for c in self.comps]
        self.zero_flux = not any(self.active)
        k = grid.wavenumber_modulus()
        self.k_s = k**cfg.s
        self.k2 = k * k
        self.axes = tuple(range(-n, 0))
        self._sg_cache: dict = {}
        if background is not None and not background.is_constant and cfg.s != 1.0:
            raise ValueError("a non-constant background requires order s = 1")

    # spectral part
    def semigroup(self, v, h, eps=0.0):
        key = (h, eps)
        sym = self._sg_cache.get(key)
        if sym is None:
            if len(self._sg_cache) > 8:
                self._sg_cache.clear()
            sym = np.exp(-h * (self.k_s + eps * self.k2)) if eps else np.exp(-h * self.k_s)
            self._sg_cache[key] = sym
        spec = np.fft.rfftn(v, axes=self.axes)
        return np.fft.irfftn(spec * sym, s=self.grid.shape, axes=self.axes)

    # transport part
    def flux_divergence(self, u, ghosts):
        """``div F`` for total values ``u`` given ghost layers ``ghosts[axis] = (lo, hi)``."""
        dx = self.grid.dx
        out = None
        for a, comp in enumerate(self.comps):
            if not self.active[a]:
                continue
            ax = u.ndim - self.grid.n + a
            uext = _pad(u, ax, *ghosts[a])
            F = self.numflux[a](comp, uext[_sl(ax, None, -1)], uext[_sl(ax, 1, None)])
            d = np.diff(F, axis=ax) / dx
            out = d if out is None else out + d
        return np.zeros_like(u) if out is None else out

    def speed(self, u, extra=()) -> float:
        """Sum over axes of ``sup |f_a'|`` on the given values."""
        sp = 0.0
        for a, comp in enumerate(self.comps):
            if not self.active[a]:
                continue
            m = float(np.max(np.abs(comp.df(u))))
            for e in extra:
                m = max(m, float(np.max(np.abs(comp.df(np.asarray(e, dtype=float))))))
            sp += m
        return sp

    def diagnostics(self, total, v, bg, t, dt):
        """Per-member diagnostics rows for a batch of total values."""
        g = self.grid
        rows = []
        for b in range(total.shape[0]):
            ub = total[b]
            sup = float(np.max(np.abs(ub)))
            if bg is not None:
                sup = max(sup, bg.sup())
            if g.n == 1:
                tv = float(np.abs(np.diff(ub)).sum())
                if bg is not None:
                    tv += abs(ub[0] - (bg.mu + bg.a)) + abs((bg.mu - bg.a) - ub[-1])
                grad = float(np.max(np.abs(np.diff(ub)))) / g.dx
            else:
                tv = float("nan")
                grad = max(float(np.max(np.abs(np.diff(ub, axis=0)))),
                           float(np.max(np.abs(np.diff(ub, axis=1))))) / g.dx
            rows.append(dict(t=t, sup_norm=sup, tv=tv, mass=float(v[b].sum() * g.cell_volume),
                             max_grad=grad, dt=dt))
        return rows


def _stack(fields) -> tuple[list, np.ndarray]:
    single = isinstance(fields, Field)
    fl = [fields] if single else list(fields)
    if not fl:
        raise ValueError("no fields given")
    g0 = fl[0].grid
    for f in fl[1:]:
        if f.grid != g0:
            raise ValueError("batched fields must share the grid")
    return fl, np.stack([f.values for f in fl])


def _check_finite(v, step):
    if not np.all(np.isfinite(v)):
        raise SolverError("non-finite values encountered", step)


# -- physical frame -----------------------------------------------------------

class PhysicalIntegrator:
    """Strang-split integrator for ``u_t + div f(u) + Lambda^s u = eps Delta u``.

    Holds a batch of perturbations sharing grid, background, scale ``tau`` and time.
    """

    def __init__(self, fields, f, cfg: SchemeConfig | None = None, far_field: Callable | None = None):
        cfg = SchemeConfig() if cfg is None else cfg
        fl, self.v = _stack(fields)
        self.far_field = far_field
        base = fl[0]
        for fi in fl[1:]:
            if fi.background is not base.background and (
                    fi.background is None or base.background is None
                    or fi.background.descriptor() != base.background.descriptor()):
                raise ValueError("batched fields must share the background")
            if fi.tau != base.tau or fi.t != base.t:
                raise ValueError("batched fields must share tau and t")
        self.grid = base.grid
        self.bg = base.background
        self.tau = base.tau
        self.t = base.t
        self.cfg = cfg
        self.eng = _Engine(self.grid, f, cfg, self.bg)
        self.step_index = 0
        if cfg.epsilon and self.bg is not None and not self.bg.is_constant and self.bg.n == 2:
            log.info("viscous source of the 2-d background uses a finite difference in tau")

    # background helpers
    def _phi(self, tau):
        if self.bg is None:
            return 0.0
        return self.bg.reference(*self.grid.coords(), tau=tau)

    def _ghosts(self, u, v, tau, t):
        # ghost data: far-field reference plus the perturbation at infinity (zero unless
        # a far_field hook supplies it); inflow boundaries thus see data from R^n, not the wrap
        g = self.grid
        out = []
        for a in range(g.n):
            lo_c, hi_c = _ghost_coords(g, a, -1), _ghost_coords(g, a, +1)
            if self.bg is not None:
                lo = self.bg.reference(*lo_c, tau=tau)
                hi = self.bg.reference(*hi_c, tau=tau)
            else:
                lo = hi = 0.0
            if self.far_field is not None:
                lo = lo + np.asarray(self.far_field(*lo_c, t), dtype=float)
                hi = hi + np.asarray(self.far_field(*hi_c, t), dtype=float)
            out.append((lo, hi))
        return out

    def total(self, v=None, tau=None) -> np.ndarray:
        v = self.v if v is None else v
        return self._phi(self.tau if tau is None else tau) + v

    def far_values(self):
        if self.bg is None:
            return ()
        lo, hi = self.bg.bounds()
        return (np.array([lo, hi]),)

    def max_dt(self) -> float:
        sp = self.eng.speed(self.total(), self.far_values())
        return self.cfg.cfl * self.grid.dx / max(1.0, sp)

    def _transport_rhs(self, v, phi, ghost_phi, lap_phi):
        u = phi + v
        rhs = -self.eng.flux_divergence(u, ghost_phi(u, v))
        if self.cfg.epsilon and lap_phi is not None:
            rhs = rhs + self.cfg.epsilon * lap_phi
        return rhs

    def step(self, dt: float) -> None:
        cfg = self.cfg
        if not dt > 0:
            raise ValueError("time step must be positive")
        limit = self.max_dt()
        if dt > limit * (1 + 1e-10):
            raise CFLViolation(f"dt={dt:.3e} exceeds the CFL limit {limit:.3e}")
        eps = cfg.epsilon
        v = self.eng.semigroup(self.v, 0.5 * dt, eps)
        tau = self.tau + 0.5 * dt
        if not self.eng.zero_flux or (eps and self.bg is not None and not self.bg.is_constant):
            phi = self._phi(tau)
            lap = _laplacian_reference(self.bg, self.grid.coords(), tau) if eps else None
            ghosts = lambda u, vv: self._ghosts(u, vv, tau, self.t + 0.5 * dt)
            if self.eng.zero_flux:
                v = v + dt * eps * lap
            else:
                v1 = v + dt * self._transport_rhs(v, phi, ghosts, lap)
                v = 0.5 * v + 0.5 * (v1 + dt * self._transport_rhs(v1, phi, ghosts, lap))
        v = self.eng.semigroup(v, 0.5 * dt, eps)
        self.step_index += 1
        _check_finite(v, self.step_index)
        self.v = v
        self.tau = tau + 0.5 * dt
        self.t += dt

    def fields(self) -> list:
        return [Field(self.grid, vb, background=self.bg, tau=self.tau, t=self.t) for vb in self.v]


def step_nonlinear(u: Field, f, cfg: SchemeConfig | None, dt: float) -> Field:
    """One Strang step of length ``dt`` in the physical frame."""
    integ = PhysicalIntegrator(u, f, cfg)
    integ.step(dt)
    return integ.fields()[0]


def _targets(t0, t_end, output_times):
    outs = sorted(set(float(x) for x in (output_times if output_times is not None else [t_end])))
    if any(o < t0 - 1e-14 or o > t_end + 1e-14 for o in outs):
        raise ValueError("output times must lie in [t0, t_end]")
    return outs


def evolve_nonlinear(u0, f, cfg: SchemeConfig | None = None, t_end: float = 1.0,
                     output_times: Sequence[float] | None = None, check_max_principle: bool = True,
                     callback: Callable | None = None, far_field: Callable | None = None):
    """Integrate from ``u0.t`` to ``t_end`` in the physical frame.

    ``u0`` may be a single field or a list sharing grid and background; the
    latter returns one trajectory per member with a common time step.  The
    maximum principle ``sup|u(t)| <= sup|u0| + tol`` is asserted each step.
    ``callback(integrator)`` runs after every step.  ``far_field(x, t)`` gives
    the perturbation beyond the box (default zero) for data that do not decay.
    """
    cfg = SchemeConfig() if cfg is None else cfg
    single = isinstance(u0, Field)
    integ = PhysicalIntegrator(u0, f, cfg, far_field)
    t0 = integ.t
    if not t_end > t0:
        raise ValueError("t_end must exceed the initial time")
    outs = _targets(t0, t_end, output_times)
    trajs = [Trajectory("physical") for _ in range(integ.v.shape[0])]
    tot = integ.total()
    sup0 = [max(float(np.max(np.abs(tb))), integ.bg.sup() if integ.bg else 0.0) for tb in tot]
    hi0 = [max(float(tb.max()), integ.bg.bounds()[1] if integ.bg else -np.inf) for tb in tot]
    lo0 = [min(float(tb.min()), integ.bg.bounds()[0] if integ.bg else np.inf) for tb in tot]
    for tr, fl in zip(trajs, integ.fields()):
        if outs and abs(outs[0] - t0) < 1e-14:
            tr.snapshots.append((t0, fl))
        tr.extra.update(max_series=[], min_series=[])
    oi = 0 if not (outs and abs(outs[0] - t0) < 1e-14) else 1
    tol = cfg.max_principle_tol
    while integ.t < t_end - 1e-13 * max(1.0, t_end):
        dt = integ.max_dt()
        nxt = outs[oi] if oi < len(outs) else t_end
        dt = min(dt, nxt - integ.t)
        integ.step(dt)
        if callback is not None:
            callback(integ)
        tot = integ.total()
        rows = integ.eng.diagnostics(tot, integ.v, integ.bg, integ.t, dt)
        for b, (tr, row) in enumerate(zip(trajs, rows)):
            tr._record(**row)
            mx = max(float(tot[b].max()), integ.bg.bounds()[1] if integ.bg else -np.inf)
            mn = min(float(tot[b].min()), integ.bg.bounds()[0] if integ.bg else np.inf)
            tr.extra["max_series"].append(mx)
            tr.extra["min_series"].append(mn)
            if check_max_principle and (row["sup_norm"] > sup0[b] + tol or mx > hi0[b] + tol
                                        or mn < lo0[b] - tol):
                raise MaxPrincipleViolation(
                    f"maximum principle violated: sup {row['sup_norm']:.12g} > {sup0[b]:.12g}",
                    integ.step_index)
        if abs(integ.t - nxt) <= 1e-12 * max(1.0, abs(nxt)):
            integ.t = nxt
            for tr, fl in zip(trajs, integ.fields()):
                tr.snapshots.append((nxt, fl))
            oi += 1
    for tr in trajs:
        tr._freeze()
    return trajs[0] if single else trajs


# -- similarity frame ---------------------------------------------------------

class SimilarityIntegrator:
    """Strang-split integrator of the similarity-variable equation.

    The state is ``U = phi_1 + V`` on the box ``|y| <= Y``.  Ghost values of
    ``V`` beyond the box are pinned: zero by default, or ``far_field(y, s)``.
    Characteristics of the dilation term run inward from the box edge, so the
    pinned values act as inflow data carrying the far-field condition.

    Consecutive semigroup half-steps are merged: the stored state ``stag`` is
    the one after the last transport substep and ``pending`` semigroup time is
    applied lazily when ``v`` is read.
    """

    def __init__(self, fields, f, cfg: SchemeConfig | None = None, far_field: Callable | None = None):
        cfg = SchemeConfig(frame="similarity") if cfg is None else cfg
        if cfg.s != 1.0:
            raise ValueError("the similarity frame is only scale invariant for s = 1")
        fl = [fields] if isinstance(fields, Field) else list(fields)
        fl = [_to_unit_scale(fi) for fi in fl]
        _, v = _stack(fl)
        base = fl[0]
        self.grid = g = base.grid
        self.bg = base.background
        self.s = base.t
        self.cfg = cfg
        self.eng = _Engine(self.grid, f, cfg, self.bg)
        self.far_field = far_field
        self.step_index = 0
        self.stag = v
        self.pending = 0.0
        self.pending_eps = 0.0
        self._flushed = (0, v)
        self.phi = 0.0 if self.bg is None else self.bg.reference(*g.coords(), tau=1.0)
        self.lap_phi = _laplacian_reference(self.bg, g.coords(), 1.0) if cfg.epsilon else None
        self._ghost_phi = []
        for a in range(g.n):
            if self.bg is None:
                self._ghost_phi.append((0.0, 0.0))
            else:
                self._ghost_phi.append((self.bg.reference(*_ghost_coords(g, a, -1), tau=1.0),
                                        self.bg.reference(*_ghost_coords(g, a, +1), tau=1.0)))
        # conservative upwinding of y.grad V = div(y V) - n V uses the outer face coordinate
        self._ydx = [(c + 0.5 * g.dx * np.sign(c)) / g.dx for c in g.coords()]
        self._ypos = [c > 0 for c in g.coords()]
        m = max(float(np.max(np.abs(self.total()))), self.bg.sup() if self.bg else 0.0)
        self.L = sum(c.lipschitz_on(m) for c in self.eng.comps)
        if not g.X > self.L + 1:
            raise ValueError(f"similarity box too small: Y={g.X} must exceed max speed + 1 = {self.L + 1}")
        self._ds_max = self._ds_limit()

    def _ds_limit(self) -> float:
        g = self.grid
        return self.cfg.cfl * g.dx / (g.n * g.X + max(1.0, self.L))

    @property
    def v(self) -> np.ndarray:
        """Perturbation at the current ``s`` (pending semigroup applied)."""
        if self._flushed[0] != self.step_index:
            v = self.stag if self.pending == 0 else self.eng.semigroup(self.stag, self.pending, self.pending_eps)
            self._flushed = (self.step_index, v)
        return self._flushed[1]

    def total(self, v=None) -> np.ndarray:
        return self.phi + (self.v if v is None else v)

    def _ghost_v(self, s):
        g = self.grid
        out = []
        for a in range(g.n):
            if self.far_field is None:
                out.append((0.0, 0.0))
                continue
            lo = np.asarray(self.far_field(*_ghost_coords(g, a, -1), s), dtype=float)
            hi = np.asarray(self.far_field(*_ghost_coords(g, a, +1), s), dtype=float)
            out.append((lo, hi))
        return out

    def _rhs(self, v, s):
        g = self.grid
        gv = self._ghost_v(s)
        out = None
        for a in range(g.n):
            ax = v.ndim - g.n + a
            d = np.diff(_pad(v, ax, *gv[a]), axis=ax)
            term = self._ydx[a] * np.where(self._ypos[a], d[_sl(ax, 1, None)], d[_sl(ax, None, -1)])
            out = term if out is None else out + term
        if not self.eng.zero_flux:
            u = self.phi + v
            ghosts = [(plo + vlo, phi_hi + vhi) for (plo, phi_hi), (vlo, vhi) in zip(self._ghost_phi, gv)]
            out -= self.eng.flux_divergence(u, ghosts)
        if self.lap_phi is not None:
            out += self.cfg.epsilon * np.exp(-s) * self.lap_phi
        return out

    def max_ds(self) -> float:
        u = self.phi + self.stag
        sp = self.eng.speed(u, (np.array(self.bg.bounds()),) if self.bg else ())
        if sp > self.L + 1e-9:
            self.L = sp
            self._ds_max = self._ds_limit()
        return self._ds_max

    def step(self, ds: float) -> None:
        if ds > self.max_ds() * (1 + 1e-10):
            raise CFLViolation(f"ds={ds:.3e} exceeds the CFL limit {self.max_ds():.3e}")
        eps_rate = self.cfg.epsilon * np.exp(-(self.s + 0.5 * ds))
        h = self.pending + 0.5 * ds
        v = self.eng.semigroup(self.stag, h, self.pending_eps + 0.5 * ds * eps_rate) if h > 0 else self.stag
        sm = self.s + 0.5 * ds
        v1 = v + ds * self._rhs(v, sm)
        v = 0.5 * v + 0.5 * (v1 + ds * self._rhs(v1, sm))
        self.step_index += 1
        _check_finite(v, self.step_index)
        self.stag = v
        self.pending = 0.5 * ds
        self.pending_eps = 0.5 * ds * eps_rate
        self.s += ds

    def fields(self) -> list:
        return [Field(self.grid, vb, background=self.bg, tau=1.0, t=self.s) for vb in self.v]


def _to_unit_scale(U: Field) -> Field:
    """Re-express a similarity-frame field on the ``tau = 1`` background."""
    bg = U.background
    if bg is None or U.tau == 1.0:
        return U
    if bg.is_constant:
        return Field(U.grid, U.values, background=bg, tau=1.0, t=U.t)
    coords = U.grid.coords()
    vals = U.values + bg.reference(*coords, tau=U.tau) - bg.reference(*coords, tau=1.0)
    return Field(U.grid, vals, background=bg, tau=1.0, t=U.t)


def evolve_similarity(U0, f, cfg: SchemeConfig | None = None, s_end: float = 1.0,
                      output_s: Sequence[float] | None = None, far_field: Callable | None = None,
                      check_max_principle: bool = True, record_diagnostics: bool = True):
    """Integrate the similarity-variable equation from ``U0.t`` (= s0) to ``s_end``.

    Returns a trajectory (or one per batch member) whose time labels are ``s``.
    The sup-norm of ``U`` is asserted non-increasing within the configured tolerance.
    """
    cfg = SchemeConfig(frame="similarity") if cfg is None else cfg
    single = isinstance(U0, Field)
    integ = SimilarityIntegrator(U0, f, cfg, far_field)
    s0 = integ.s
    if not s_end > s0:
        raise ValueError("s_end must exceed the initial s")
    outs = _targets(s0, s_end, output_s)
    nb = integ.v.shape[0]
    trajs = [Trajectory("similarity") for _ in range(nb)]
    start = bool(outs and abs(outs[0] - s0) < 1e-14)
    for tr, fl in zip(trajs, integ.fields()):
        if start:
            tr.snapshots.append((s0, fl))
        tr.extra["residual"] = []
    oi = 1 if start else 0
    tot = integ.total()
    far = integ.bg.sup() if integ.bg else 0.0
    sup0 = [max(float(np.max(np.abs(tb))), far) for tb in tot]
    tol = cfg.max_principle_tol
    while integ.s < s_end - 1e-13 * max(1.0, abs(s_end)):
        nxt = outs[oi] if oi < len(outs) else s_end
        ds = min(integ.max_ds(), nxt - integ.s)
        vprev = integ.stag
        integ.step(ds)
        res = np.max(np.abs(integ.stag - vprev).reshape(nb, -1), axis=1) / ds
        for b in range(nb):
            trajs[b].extra["residual"].append(float(res[b]))
        if record_diagnostics or check_max_principle:
            # per-step diagnostics use the state after the transport substep
            tot = integ.phi + integ.stag
            rows = integ.eng.diagnostics(tot, integ.stag, integ.bg, integ.s, ds)
            for b, (tr, row) in enumerate(zip(trajs, rows)):
                if record_diagnostics:
                    tr._record(**row)
                if check_max_principle and far_field is None and row["sup_norm"] > sup0[b] + tol:
                    raise MaxPrincipleViolation(
                        f"sup-norm grew to {row['sup_norm']:.12g} from {sup0[b]:.12g}", integ.step_index)
        if abs(integ.s - nxt) <= 1e-12 * max(1.0, abs(nxt)):
            integ.s = nxt
            for tr, fl in zip(trajs, integ.fields()):
                tr.snapshots.append((nxt, fl))
            oi += 1
    for tr in trajs:
        tr._freeze()
    return trajs[0] if single else trajs


def to_similarity(u: Field, target: Grid | None = None) -> Field:
    """Physical snapshot ``u(., t)`` as ``U(y) = u(t y, t)`` labelled ``s = log t``."""
    from .field import rescale

    if not u.t > 0:
        raise ValueError("similarity variables need t > 0")
    U = rescale(u, u.t, target)
    U = Field(U.grid, U.values, background=U.background, tau=U.tau, t=float(np.log(u.t)))
    return _to_unit_scale(U)


def from_similarity(U: Field, t: float, target: Grid | None = None) -> Field:
    """``u(x, t) = U(x/t)`` sampled on ``target`` (default: the y-grid)."""
    from .field import rescale

    if not t > 0:
        raise ValueError("need t > 0")
    u = rescale(U, 1.0 / t, target)
    return Field(u.grid, u.values, background=u.background, tau=u.tau, t=t)


# -- linear continuity equation -----------------------------------------------

class CoefficientPath:
    """Time-dependent drift ``g(x, t)`` from samples, interpolated linearly in ``t``.

    ``values`` has shape ``(len(times), n) + grid.shape``.
    """

    def __init__(self, times, values):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.times.ndim != 1 or self.times.size != self.values.shape[0]:
            raise ValueError("times and values disagree")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("coefficient times must be strictly increasing")

    @classmethod
    def constant(cls, value, t0: float = 0.0, t1: float = np.inf):
        v = np.asarray(value, dtype=float)
        return cls([t0, t1 if np.isfinite(t1) else 1e300], np.stack([v, v]))

    def covers(self, t0: float, t1: float) -> bool:
        return self.times[0] <= t0 + 1e-12 and self.times[-1] >= t1 - 1e-12

    def at(self, t: float) -> np.ndarray:
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise ValueError(f"coefficient path does not cover t={t}")
        j = int(np.clip(np.searchsorted(self.times, t) - 1, 0, self.times.size - 2))
        t0, t1 = self.times[j], self.times[j + 1]
        w = 0.0 if not np.isfinite(t1 - t0) or t1 - t0 > 1e299 else (t - t0) / (t1 - t0)
        w = float(np.clip(w, 0.0, 1.0))
        return (1 - w) * self.values[j] + w * self.values[j + 1]

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def _upwind_divergence(v, g, grid: Grid):
    """Conservative first-order upwind ``div(g v)`` on the periodic grid."""
    out = np.zeros_like(v)
    for a in range(grid.n):
        ax = v.ndim - grid.n + a
        ga = g[a]
        gface = 0.5 * (ga + np.roll(ga, -1, axis=a))
        vr = np.roll(v, -1, axis=ax)
        F = np.maximum(gface, 0) * v + np.minimum(gface, 0) * vr
        out += (F - np.roll(F, 1, axis=ax)) / grid.dx
    return out


def evolve_linear_continuity(v0, g, cfg: SchemeConfig | None = None, t_end: float = 1.0,
                             output_times: Sequence[float] | None = None, t0: float | None = None):
    """Integrate ``v_t + div(g v) + Lambda^s v = 0`` in conservative form.

    ``g`` is a ``CoefficientPath``, a constant array of shape ``(n,) + grid.shape``
    or a vector of ``n`` constants.  Accepts a batch of fields like
    ``evolve_nonlinear``.  The upwind flux keeps the scheme positivity
    preserving and conserves mass to rounding.
    """
    cfg = SchemeConfig() if cfg is None else cfg
    single = isinstance(v0, Field)
    fl, v = _stack(v0)
    grid = fl[0].grid
    if any(f.background is not None for f in fl):
        raise ValueError("the continuity equation acts on decaying fields without background")
    t = fl[0].t if t0 is None else float(t0)
    if not isinstance(g, CoefficientPath):
        arr = np.asarray(g, dtype=float)
        if arr.shape == (grid.n,):
            arr = arr.reshape((grid.n,) + (1,) * grid.n) * np.ones(grid.shape)
        if arr.shape != (grid.n,) + grid.shape:
            raise ValueError(f"drift must have shape {(grid.n,) + grid.shape}")
        g = CoefficientPath.constant(arr, t, t_end)
    if not g.covers(t, t_end):
        raise ValueError("coefficient path does not cover the integration interval")
    gsup = g.sup()
    k_s = grid.wavenumber_modulus() ** cfg.s
    axes = tuple(range(-grid.n, 0))
    dt_max = cfg.cfl * grid.dx / max(1.0, grid.n * gsup)
    outs = _targets(t, t_end, output_times)
    trajs = [Trajectory("physical") for _ in fl]
    start = bool(outs and abs(outs[0] - t) < 1e-14)
    for tr, f in zip(trajs, fl):
        if start:
            tr.snapshots.append((t, Field(grid, f.values, t=t)))
    oi = 1 if start else 0
    zero = gsup == 0.0
    cache = {}

    def semi(x, h):
        sym = cache.get(h)
        if sym is None:
            sym = cache.setdefault(h, np.exp(-h * k_s))
        return np.fft.irfftn(np.fft.rfftn(x, axes=axes) * sym, s=grid.shape, axes=axes)

    step = 0
    while t < t_end - 1e-13 * max(1.0, t_end):
        nxt = outs[oi] if oi < len(outs) else t_end
        dt = min(dt_max, nxt - t)
        w = semi(v, 0.5 * dt)
        if not zero:
            gm = g.at(t + 0.5 * dt)
            w1 = w - dt * _upwind_divergence(w, gm, grid)
            w = 0.5 * w + 0.5 * (w1 - dt * _upwind_divergence(w1, gm, grid))
        v = semi(w, 0.5 * dt)
        step += 1
        _check_finite(v, step)
        t += dt
        for b, tr in enumerate(trajs):
            vb = v[b]
            tv = float(np.abs(np.diff(vb)).sum()) if grid.n == 1 else float("nan")
            grad = float(np.max(np.abs(np.diff(vb, axis=0)))) / grid.dx
            tr._record(t=t, sup_norm=float(np.max(np.abs(vb))), tv=tv,
                       mass=float(vb.sum() * grid.cell_volume), max_grad=grad, dt=dt)
        if abs(t - nxt) <= 1e-12 * max(1.0, abs(nxt)):
            t = nxt
            for b, tr in enumerate(trajs):
                tr.snapshots.append((nxt, Field(grid, v[b], t=nxt)))
            oi += 1
    for tr in trajs:
        tr._freeze()
    return trajs[0] if single else trajs
