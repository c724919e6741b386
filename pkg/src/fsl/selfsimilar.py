"""Self-similar solutions as steady states in similarity variables, and their tails.

A profile ``U`` with ``u(x, t) = U(x/t)`` is found by integrating the
similarity-frame equation until both the step residual ``|dU/ds|`` and the
change over one unit of ``s`` drop below a tolerance.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .evolve import SchemeConfig, SimilarityIntegrator, from_similarity, step_nonlinear
from .farfield import FarFieldProfile
from .field import Field, Grid, write_snapshot
from .flux import as_components

log = logging.getLogger(__name__)

DEFAULT_Y = 256.0
DEFAULT_N = 4096


class ProfileNotConverged(RuntimeError):
    def __init__(self, msg, history):
        super().__init__(msg)
        self.history = history


@dataclass(eq=False)
class SelfSimilarProfile:
    """Converged similarity profile ``U = phi_1 + V`` on the y-grid."""

    field: Field
    far_field: FarFieldProfile | None
    flux_name: str
    residual: float
    tol: float
    s_final: float
    residual_history: np.ndarray = dc_field(default_factory=lambda: np.zeros((0, 2)))
    sign_changes: list = dc_field(default_factory=list)
    convergence_error: float = 0.0
    monotone: bool | None = None

    @property
    def grid(self) -> Grid:
        return self.field.grid

    @property
    def Y(self) -> float:
        return self.grid.X

    def values(self) -> np.ndarray:
        return self.field.total()

    def evaluate(self, *points) -> np.ndarray:
        return self.field.evaluate(*points)

    def sup(self) -> float:
        return self.field.sup_norm()

    def is_constant(self) -> bool:
        bg = self.far_field
        return (bg is None or bg.is_constant) and float(np.ptp(self.values())) == 0.0

    def solution_at(self, t: float, grid: Grid | None = None) -> Field:
        """``u^SS(x, t) = U(x/t)`` sampled on ``grid``."""
        return solution_at(self, t, grid)

    def report(self) -> dict:
        return {
            "flux": self.flux_name,
            "residual": self.residual,
            "tol": self.tol,
            "s_final": self.s_final,
            "convergence_error": self.convergence_error,
            "monotone": self.monotone,
            "sign_changes_first_last": [self.sign_changes[0], self.sign_changes[-1]] if self.sign_changes else None,
        }


def count_sign_changes(values: np.ndarray, floor: float = 1e-12) -> int:
    """Sign changes of the 1-d difference sequence, ignoring entries below ``floor``."""
    d = np.diff(values)
    d = d[np.abs(d) > floor * max(1.0, float(np.max(np.abs(values))))]
    return int(np.count_nonzero(np.diff(np.sign(d))))


def is_monotone(values: np.ndarray, decreasing: bool) -> bool:
    d = np.diff(values)
    return bool(np.all(d < 0) if decreasing else np.all(d > 0))


def compute_profile(h: FarFieldProfile, f, cfg: SchemeConfig | None = None, grid: Grid | None = None,
                    tol: float = 1e-8, s_max: float = 40.0, initial=None, far_field=None,
                    check_interval: float = 0.25) -> SelfSimilarProfile:
    """Steady state of the similarity-frame equation with far-field data ``h``.

    Parameters
    ----------
    h : FarFieldProfile
        Far-field data; its scale is ignored (the similarity background is ``phi_1``).
    f : flux spec
    grid : Grid, optional
        y-grid; defaults to ``Y = 256``, ``N = 4096`` (n = 1) or ``Y = 32``, ``N = 256`` (n = 2).
    tol : float
        Relative steady tolerance on ``|dU/ds|`` and ``|U(s) - U(s - 1)|``.
    initial : Field or array, optional
        Starting perturbation ``V``; default zero, i.e. ``U = phi_1``.

    Raises
    ------
    ProfileNotConverged
        When ``s_max`` is reached; carries the residual history.
    """
    cfg = SchemeConfig(frame="similarity") if cfg is None else cfg
    if grid is None:
        grid = Grid(1, DEFAULT_Y, DEFAULT_N) if h.n == 1 else Grid(2, 32.0, 256)
    bg = h.with_tau(1.0)
    if initial is None:
        U0 = Field(grid, np.zeros(grid.shape), background=bg, tau=1.0, t=0.0)
    elif isinstance(initial, Field):
        U0 = Field(grid, initial.values, background=bg, tau=initial.tau if initial.background else 1.0, t=0.0)
    else:
        U0 = Field(grid, initial, background=bg, tau=1.0, t=0.0)
    integ = SimilarityIntegrator(U0, f, cfg, far_field)
    comps = as_components(f, grid.n)
    name = "+".join(c.name for c in comps if not c.is_zero) or "zero"
    scale = max(1.0, float(np.max(np.abs(integ.total()))))
    hist_s, hist_r = [], []
    checkpoints = [(integ.s, integ.v[0].copy())]
    signs = [count_sign_changes(integ.total()[0])] if grid.n == 1 else []
    next_check = integ.s + check_interval
    res = np.inf
    change = np.inf
    while integ.s < s_max:
        ds = integ.max_ds()
        prev = integ.stag
        integ.step(ds)
        res = float(np.max(np.abs(integ.stag - prev))) / ds
        if integ.s >= next_check:
            next_check += check_interval
            v = integ.v[0].copy()
            checkpoints.append((integ.s, v))
            hist_s.append(integ.s)
            hist_r.append(res)
            if grid.n == 1:
                signs.append(count_sign_changes(integ.phi + v))
            old = [c for c in checkpoints if c[0] <= integ.s - 1.0 + 1e-9]
            if old:
                change = float(np.max(np.abs(v - old[-1][1])))
                checkpoints = [c for c in checkpoints if c[0] >= old[-1][0]]
            if res < tol * scale and change < tol * scale:
                break
    history = np.column_stack([hist_s, hist_r]) if hist_s else np.zeros((0, 2))
    if not (res < tol * scale and change < tol * scale):
        raise ProfileNotConverged(
            f"profile not converged by s={integ.s:.2f}: residual {res:.3e}, change {change:.3e}", history)
    fld = integ.fields()[0]
    mono = None
    if grid.n == 1 and not bg.is_constant:
        mono = is_monotone(fld.total(), decreasing=bg.a > 0)
    prof = SelfSimilarProfile(fld, bg, name, res, tol, integ.s, history, signs, change, mono)
    log.info("profile converged at s=%.2f, residual %.2e", integ.s, res)
    return prof


def solution_at(profile: SelfSimilarProfile, t: float, grid: Grid | None = None) -> Field:
    """Self-similar solution at time ``t`` on ``grid`` (default: the profile grid)."""
    return from_similarity(profile.field, t, grid)


# -- tails ------------------------------------------------------------------

@dataclass(frozen=True)
class TailFit:
    slope: float
    amplitude: float
    residual: float
    slope_left: float | None
    slope_right: float | None
    two_sided_ratio: float
    window: tuple
    truncation_estimate: float


def truncation_estimate(profile: SelfSimilarProfile) -> float:
    """Size below which tail values are not trusted.

    Combines the effect of pinning ``V`` at the box edge (size of ``V`` on the
    outer annulus) with the steady-state convergence error.
    """
    return max(1e-12, profile.field.boundary_sup(0.1), profile.convergence_error, profile.residual)


def _tail_data(profile: SelfSimilarProfile, r1: float, r2: float):
    g = profile.grid
    U = profile.values()
    hval = profile.far_field.h(*g.coords()) if profile.far_field is not None else 0.0
    diff = np.abs(U - hval)
    if g.n == 1:
        y = g.axis()
        r = np.abs(y)
        sign = np.sign(y)
    else:
        x, yy = g.mesh()
        r = np.hypot(x, yy)
        sign = np.ones_like(r)
    mask = (r >= r1) & (r <= r2)
    return r[mask], diff[mask], sign[mask]


def fit_tail(profile: SelfSimilarProfile, window: tuple | None = None) -> TailFit:
    """Least-squares fit of ``log|U - h|`` against ``log|y|`` on ``window``.

    Returns slope, amplitude, rms fit residual, per-side slopes (n = 1) and the
    two-sidedness ratio ``max(|U - h| <y>) / min(|U - h| <y>)``.
    """
    if profile.is_constant() or (profile.far_field is not None and profile.far_field.is_constant):
        raise ValueError("tail undefined for an identically constant profile")
    Y = profile.Y
    r1, r2 = (10.0, Y / 2) if window is None else (float(window[0]), float(window[1]))
    if not 0 < r1 < r2:
        raise ValueError("window must satisfy 0 < r1 < r2")
    if r2 > 0.8 * Y + 1e-12:
        raise ValueError(f"window end {r2} exceeds 0.8 Y = {0.8 * Y}")
    r, d, sign = _tail_data(profile, r1, r2)
    trunc = truncation_estimate(profile)
    if r.size < 4 or np.min(d) < 10 * trunc:
        raise ValueError(f"tail values ({np.min(d) if d.size else 0:.3e}) below 10x truncation estimate {trunc:.3e}")

    def fit(rr, dd):
        A = np.column_stack([np.log(rr), np.ones_like(rr)])
        coef, *_ = np.linalg.lstsq(A, np.log(dd), rcond=None)
        rms = float(np.sqrt(np.mean((A @ coef - np.log(dd)) ** 2)))
        return float(coef[0]), float(np.exp(coef[1])), rms

    slope, amp, rms = fit(r, d)
    left = right = None
    if profile.grid.n == 1:
        left = fit(r[sign < 0], d[sign < 0])[0]
        right = fit(r[sign > 0], d[sign > 0])[0]
    weighted = d * np.sqrt(1 + r * r)
    ratio = float(weighted.max() / weighted.min())
    return TailFit(slope, amp, rms, left, right, ratio, (r1, r2), trunc)


# -- checks and export ---------------------------------------------------------

def steady_state_check(profile: SelfSimilarProfile, f, dt: float, cfg: SchemeConfig | None = None) -> float:
    """Sup distance between one physical step from ``U(x)`` at ``t = 1`` and ``U(x/(1+dt))``.

    Measured over ``|x| <= Y/2`` to stay clear of the box edge.
    """
    cfg = SchemeConfig() if cfg is None else cfg
    u1 = Field(profile.grid, profile.field.values, background=profile.field.background, tau=1.0, t=1.0)
    stepped = step_nonlinear(u1, f, cfg, dt)
    exact = solution_at(profile, 1.0 + dt)
    inner = np.max(np.abs(np.stack(profile.grid.mesh())), axis=0) <= profile.Y / 2
    return float(np.max(np.abs(stepped.total() - exact.total())[inner]))


def export(profile: SelfSimilarProfile, path, tail_window=None) -> tuple[Path, Path]:
    """Write the profile snapshot and a text sidecar with residual, tail fit and monotonicity."""
    path = Path(path)
    write_snapshot(path, profile.field, extra={"kind": "profile", "flux": profile.flux_name})
    side = path.with_suffix(path.suffix + ".txt")
    lines = [f"{k} = {json.dumps(v)}" for k, v in profile.report().items()]
    try:
        tf = fit_tail(profile, tail_window)
        lines += [f"tail_slope = {tf.slope!r}", f"tail_amplitude = {tf.amplitude!r}",
                  f"tail_fit_residual = {tf.residual!r}", f"tail_two_sided_ratio = {tf.two_sided_ratio!r}",
                  f"tail_window = {list(tf.window)}"]
    except ValueError as exc:
        lines.append(f"tail_fit = {json.dumps('refused: ' + str(exc))}")
    side.write_text("\n".join(lines) + "\n")
    return path, side
