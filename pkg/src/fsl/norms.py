"""Norm functionals: Lebesgue, Wiener amalgam, total variation, moving-weight L1, Hoelder.

Quadrature is the midpoint rule on the cell-centred grid: sample ``i``
stands for the constant value on its cell.  Under that convention the
amalgam norm with ``p = q`` reproduces the ``L^p`` norm exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .field import Field, Grid


def _samples(field: Field) -> np.ndarray:
    vals = field.total()
    if not np.all(np.isfinite(vals)):
        raise ValueError("non-finite samples")
    return vals


def _check_exponent(q: float, name: str = "q") -> float:
    q = float(q)
    if not q >= 1:
        raise ValueError(f"exponent {name} must be in [1, inf], got {q}")
    return q


def lq_norm(field: Field, q: float) -> float:
    """``L^q`` norm over the box (midpoint rule); ``q = inf`` is the sample max."""
    q = _check_exponent(q)
    vals = np.abs(_samples(field))
    if np.isinf(q):
        return float(vals.max())
    return float((vals**q).sum() * field.grid.cell_volume) ** (1.0 / q)


# -- amalgam ----------------------------------------------------------------

@dataclass(frozen=True)
class AmalgamIndex:
    """Exponents of the amalgam norm ``l^p_k L^q_x`` over unit cubes ``k + (-1/2, 1/2)^n``."""

    p: float
    q: float

    def __post_init__(self):
        _check_exponent(self.p, "p")
        _check_exponent(self.q, "q")


@dataclass(frozen=True)
class CubeLayout:
    """Integer-centred unit cubes along one axis and the grid cells they touch.

    ``starts[k]:stops[k]`` is the contiguous cell range meeting cube ``k``;
    ``clipped[k]`` marks cubes sticking out of the box.
    """

    centers: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    starts: np.ndarray
    stops: np.ndarray
    clipped: np.ndarray


@lru_cache(maxsize=32)
def cube_layout(grid: Grid) -> CubeLayout:
    X, dx = grid.X, grid.dx
    kmin = int(np.ceil(-X - 0.5 + 1e-12))
    kmax = int(np.floor(X + 0.5 - 1e-12))
    centers = np.arange(kmin, kmax + 1)
    lo = np.maximum(centers - 0.5, -X)
    hi = np.minimum(centers + 0.5, X)
    keep = hi - lo > 1e-12 * dx
    centers, lo, hi = centers[keep], lo[keep], hi[keep]
    starts = np.clip(np.floor((lo + X) / dx + 1e-9).astype(int), 0, grid.N - 1)
    stops = np.clip(np.ceil((hi + X) / dx - 1e-9).astype(int), starts + 1, grid.N)
    clipped = (centers - 0.5 < -X - 1e-12) | (centers + 0.5 > X + 1e-12)
    return CubeLayout(centers, lo, hi, starts, stops, clipped)


def _cube_integrals(vals: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """Exact integrals of the piecewise-constant function over each cube along ``axis``."""
    lay = cube_layout(grid)
    dx, X = grid.dx, grid.X
    v = np.moveaxis(vals, axis, 0)
    cs = np.concatenate([np.zeros((1,) + v.shape[1:]), np.cumsum(v, axis=0) * dx])

    def antider(z):
        pos = (z + X) / dx
        j = np.clip(np.floor(pos + 1e-12).astype(int), 0, grid.N - 1)
        frac = (pos - j)[:, None] if v.ndim > 1 else pos - j
        frac = np.clip(frac, 0.0, 1.0)
        return cs[j] + frac * v[j] * dx

    out = antider(lay.hi) - antider(lay.lo)
    return np.moveaxis(out, 0, axis)


def cube_norms(field: Field, q: float) -> tuple[np.ndarray, CubeLayout]:
    """Array of ``||f||_{L^q(cube k)}`` over the cube lattice."""
    q = _check_exponent(q)
    vals = np.abs(_samples(field))
    lay = cube_layout(field.grid)
    n = field.grid.n
    if np.isinf(q):
        if n == 1:
            out = np.array([vals[a:b].max() for a, b in zip(lay.starts, lay.stops)])
        else:
            rows = np.stack([vals[a:b].max(axis=0) for a, b in zip(lay.starts, lay.stops)])
            out = np.stack([rows[:, a:b].max(axis=1) for a, b in zip(lay.starts, lay.stops)], axis=1)
        return out, lay
    integ = vals**q
    for ax in range(n):
        integ = _cube_integrals(integ, field.grid, ax)
    return np.maximum(integ, 0.0) ** (1.0 / q), lay


def amalgam_norm(field: Field, index: AmalgamIndex, return_info: bool = False):
    """``|| ||f||_{L^q(cube k)} ||_{l^p_k}``.

    With ``return_info`` a dict with the number of clipped cubes is returned too.
    """
    local, lay = cube_norms(field, index.q)
    if np.isinf(index.p):
        val = float(local.max())
    else:
        val = float((local**index.p).sum() ** (1.0 / index.p))
    if return_info:
        nclip = int(lay.clipped.sum()) if field.grid.n == 1 else int(
            (lay.clipped[:, None] | lay.clipped[None, :]).sum())
        return val, {"clipped_cubes": nclip, "cubes": local.size}
    return val


# -- total variation ------------------------------------------------------

def tv_norm(field: Field) -> float:
    """Total variation of a 1-d field on the real line.

    Sums the sample jumps; with a background the jumps from the end samples
    to the far-field limits ``mu +- a`` are added, so a monotone step from
    ``+a`` to ``-a`` gives exactly ``2a``.
    """
    if field.grid.n != 1:
        raise ValueError("total variation is only provided in one dimension")
    vals = _samples(field)
    tv = float(np.abs(np.diff(vals)).sum())
    bg = field.background
    if bg is not None:
        tv += abs(vals[0] - (bg.mu + bg.a)) + abs((bg.mu - bg.a) - vals[-1])
    return tv


# -- moving weight --------------------------------------------------------

def smooth_bump(r) -> np.ndarray:
    """Radial bump: 1 on ``r <= 1``, 0 on ``r >= 2``, quintic (C^2) in between."""
    z = np.clip(np.asarray(r, dtype=float) - 1.0, 0.0, 1.0)
    return 1.0 - z**3 * (10.0 - 15.0 * z + 6.0 * z * z)


@dataclass(frozen=True)
class MovingWeight:
    """``psi(x - x0, t)`` with ``psi(x, t) = psi(x - x L t/|x|)`` for ``|x| >= L t``, 1 inside.

    ``radius`` scales the base bump so that it equals 1 on ``B(radius)`` and
    vanishes outside ``B(2 radius)``.
    """

    L: float = 0.0
    t: float = 0.0
    x0: tuple = (0.0,)
    radius: float = 1.0

    def __post_init__(self):
        if self.L < 0 or self.t < 0 or self.radius <= 0:
            raise ValueError("need L >= 0, t >= 0, radius > 0")
        object.__setattr__(self, "x0", tuple(float(c) for c in np.atleast_1d(self.x0)))

    def at_time(self, t: float) -> "MovingWeight":
        return MovingWeight(self.L, t, self.x0, self.radius)

    def __call__(self, *coords) -> np.ndarray:
        if len(coords) != len(self.x0):
            raise ValueError("coordinate count does not match the centre")
        r = np.sqrt(sum((np.asarray(c, dtype=float) - c0) ** 2 for c, c0 in zip(coords, self.x0)))
        return smooth_bump(np.maximum(r - self.L * self.t, 0.0) / self.radius)

    def sample(self, grid: Grid) -> np.ndarray:
        return np.broadcast_to(self(*grid.coords()), grid.shape)


def weighted_l1(field: Field, weight: MovingWeight) -> float:
    """``int psi |u| dx`` by the midpoint rule."""
    return float((weight.sample(field.grid) * np.abs(_samples(field))).sum() * field.grid.cell_volume)


# -- Hoelder ----------------------------------------------------------------

def holder_seminorm(field: Field, alpha: float, max_separation: float | None = None) -> float:
    """Largest ``|u(x) - u(y)| / |x - y|^alpha`` over sample pairs at distance ``<= max_separation``.

    Pairs are taken along the axes and, in two dimensions, the diagonals.
    The default separation is ``64 dx``.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    g = field.grid
    max_separation = 64 * g.dx if max_separation is None else max_separation
    if max_separation < g.dx * (1 - 1e-12):
        raise ValueError("max_separation must be at least one grid spacing")
    vals = _samples(field)
    kmax = min(int(np.floor(max_separation / g.dx + 1e-9)), g.N - 1)
    best = 0.0
    for k in range(1, kmax + 1):
        denom = (k * g.dx) ** alpha
        if g.n == 1:
            best = max(best, np.abs(vals[k:] - vals[:-k]).max() / denom)
            continue
        best = max(best, np.abs(vals[k:, :] - vals[:-k, :]).max() / denom,
                   np.abs(vals[:, k:] - vals[:, :-k]).max() / denom)
        if k * np.sqrt(2) * g.dx <= max_separation * (1 + 1e-12):
            dd = (np.sqrt(2) * k * g.dx) ** alpha
            best = max(best, np.abs(vals[k:, k:] - vals[:-k, :-k]).max() / dd,
                       np.abs(vals[k:, :-k] - vals[:-k, k:]).max() / dd)
    return float(best)


def ball_integral(field: Field, center, radius: float, absolute: bool = True) -> float:
    """``int_{B(center, radius)} |u|`` with exact cell overlaps in 1-d.

    In 2-d cells are counted by their centres.
    """
    vals = _samples(field)
    vals = np.abs(vals) if absolute else vals
    g = field.grid
    if g.n == 1:
        c = float(np.atleast_1d(center)[0])
        edges = -g.X + np.arange(g.N + 1) * g.dx
        ov = np.clip(np.minimum(edges[1:], c + radius) - np.maximum(edges[:-1], c - radius), 0, None)
        return float((ov * vals).sum())
    cx, cy = center
    x, y = g.coords()
    mask = (x - cx) ** 2 + (y - cy) ** 2 <= radius * radius
    return float((vals * mask).sum() * g.cell_volume)
