"""Periodic grids, sampled fields and the far-field split ``u = phi + v``."""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .farfield import FarFieldProfile

log = logging.getLogger(__name__)

SNAPSHOT_MAGIC = b"FSL1"


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred lattice on the periodic box ``[-X, X)^n``.

    Samples sit at cell centres ``-X + (i + 1/2) dx`` so the lattice is
    symmetric under ``x -> -x`` and never contains the origin.
    """

    n: int
    X: float
    N: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.n}")
        if self.N < 16 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 16, got {self.N}")
        if not self.X > 0:
            raise ValueError("half-width X must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.X / self.N

    @property
    def length(self) -> float:
        return 2.0 * self.X

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def size(self) -> int:
        return self.N**self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**self.n

    def axis(self) -> np.ndarray:
        return -self.X + (np.arange(self.N) + 0.5) * self.dx

    def coords(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays broadcastable to ``shape``."""
        ax = self.axis()
        if self.n == 1:
            return (ax,)
        return (ax[:, None], ax[None, :])

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.broadcast_to(c, self.shape) for c in self.coords())

    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c**2 for c in self.mesh()))

    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Angular wavenumbers broadcastable to the ``rfftn`` output shape."""
        k_full = 2 * np.pi * np.fft.fftfreq(self.N, d=self.dx)
        k_half = 2 * np.pi * np.fft.rfftfreq(self.N, d=self.dx)
        if self.n == 1:
            return (k_half,)
        return (k_full[:, None], k_half[None, :])

    def wavenumber_modulus(self) -> np.ndarray:
        return np.sqrt(sum(k**2 for k in self.wavenumbers()))

    def annulus_mask(self, fraction: float = 0.1) -> np.ndarray:
        """Points in the outer ``fraction`` of the box (sup-norm distance)."""
        dist = np.max(np.abs(np.stack(self.mesh())), axis=0)
        return dist >= (1.0 - fraction) * self.X


@dataclass(frozen=True, eq=False)
class Field:
    """Samples on a grid, optionally on top of a far-field reference.

    When ``background`` is set, ``values`` hold the perturbation ``v`` and the
    represented function is ``phi_tau + v`` with ``phi_tau`` the analytic
    reference of the background at scale ``tau``.  ``t`` is a time label.
    """

    grid: Grid
    values: np.ndarray
    background: FarFieldProfile | None = None
    tau: float = 1.0
    t: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            if vals.size == self.grid.size:
                vals = vals.reshape(self.grid.shape)
            else:
                raise ValueError(
                    f"values of size {vals.size} do not fit grid of shape {self.grid.shape}"
                )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.background is not None and self.background.n != self.grid.n:
            raise ValueError("background dimension does not match grid")

    # -- construction helpers --------------------------------------------
    @classmethod
    def from_function(cls, grid: Grid, fn, **kw) -> "Field":
        return cls(grid, np.broadcast_to(fn(*grid.coords()), grid.shape), **kw)

    def with_values(self, values, **kw) -> "Field":
        return replace(self, values=values, **kw)

    def without_background(self) -> "Field":
        """Total samples as a plain field."""
        return Field(self.grid, self.total(), t=self.t)

    # -- evaluation -------------------------------------------------------
    def reference(self, coords=None) -> np.ndarray | float:
        if self.background is None:
            return 0.0
        coords = self.grid.coords() if coords is None else coords
        return self.background.reference(*coords, tau=self.tau)

    def total(self) -> np.ndarray:
        """Samples of the represented function on the grid."""
        if self.background is None:
            return np.array(self.values)
        return self.reference() + self.values

    def evaluate(self, *points) -> np.ndarray:
        """Band-limited evaluation at arbitrary points (n=1) or a tensor grid (n=2).

        For n = 2 pass the two 1-d axes; the result has shape ``(len(x), len(y))``.
        """
        if self.grid.n == 1:
            x = np.asarray(points[0], dtype=float)
            pert = trig_interpolate(self.values, self.grid, x)
            if self.background is not None:
                pert = pert + self.background.reference(x, tau=self.tau)
            return pert
        xs, ys = (np.asarray(p, dtype=float) for p in points)
        bx = trig_interpolation_matrix(self.grid, xs)
        by = trig_interpolation_matrix(self.grid, ys)
        pert = bx @ self.values @ by.T
        if self.background is not None:
            pert = pert + self.background.reference(xs[:, None], ys[None, :], tau=self.tau)
        return pert

    # -- diagnostics ------------------------------------------------------
    def sup_norm(self) -> float:
        """Sup of the represented function on R^n (box samples plus far-field limits)."""
        s = float(np.max(np.abs(self.total())))
        if self.background is not None:
            s = max(s, self.background.sup())
        return s

    def boundary_sup(self, fraction: float = 0.1) -> float:
        """Sup of the stored perturbation on the outer annulus of the box."""
        return float(np.max(np.abs(self.values[self.grid.annulus_mask(fraction)])))


# -- band-limited interpolation ------------------------------------------

def _dirichlet_kernel(theta: np.ndarray, N: int) -> np.ndarray:
    # trigonometric interpolation kernel for even N with symmetric Nyquist mode
    half = 0.5 * theta
    s = np.sin(half)
    small = np.abs(s) < 1e-13
    safe = np.where(small, 1.0, s)
    val = np.sin(N * half) * np.cos(half) / (N * safe)
    return np.where(small, 1.0, val)


def trig_interpolation_matrix(grid: Grid, points: np.ndarray) -> np.ndarray:
    """Matrix ``B`` with ``B @ samples`` = trigonometric interpolant at ``points``."""
    theta = 2 * np.pi * (points[:, None] - grid.axis()[None, :]) / grid.length
    return _dirichlet_kernel(theta, grid.N)


def trig_interpolate(values: np.ndarray, grid: Grid, points: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Evaluate the periodic trigonometric interpolant of 1-d samples."""
    pts = np.atleast_1d(points).ravel()
    out = np.empty(pts.size)
    for start in range(0, pts.size, chunk):
        sl = slice(start, start + chunk)
        out[sl] = trig_interpolation_matrix(grid, pts[sl]) @ values
    return out.reshape(np.shape(points))


def spectral_tail(values: np.ndarray, grid: Grid, fraction: float = 0.25) -> float:
    """Sum of Fourier amplitudes above ``(1 - fraction)`` of Nyquist.

    Bounds the error of band-limited interpolation up to aliasing; used as the
    interpolation tolerance of a field.
    """
    coeffs = np.abs(np.fft.rfftn(values)) / grid.size
    kmod = grid.wavenumber_modulus()
    kmax = np.pi / grid.dx
    return float(2.0 * coeffs[kmod >= (1.0 - fraction) * kmax].sum())


def interpolation_tolerance(field: Field, floor: float = 1e-8) -> float:
    return max(floor, spectral_tail(field.values, field.grid))


# -- operations -----------------------------------------------------------

def make_shock_data(grid: Grid, profile: FarFieldProfile, perturbation=None, tau: float | None = None,
                    t: float = 0.0) -> Field:
    """Non-decaying data ``phi_tau + v0``.

    ``perturbation`` may be an array of samples or a callable of the grid
    coordinates.  The sup of ``v0`` over the outer 10% annulus is logged as a
    decay diagnostic; large values are flagged, never rejected.
    """
    if profile.n != grid.n:
        raise ValueError("profile and grid dimensions differ")
    if perturbation is None:
        v0 = np.zeros(grid.shape)
    elif callable(perturbation):
        v0 = np.broadcast_to(perturbation(*grid.coords()), grid.shape)
    else:
        v0 = np.asarray(perturbation, dtype=float)
        if v0.size != grid.size:
            raise ValueError(f"perturbation has {v0.size} samples, grid has {grid.size}")
    tau = profile.tau if tau is None else tau
    fld = Field(grid, v0, background=profile, tau=tau, t=t)
    edge = fld.boundary_sup()
    if edge > 1e-3:
        log.warning("perturbation does not decay toward the box boundary: sup on annulus = %.3g", edge)
    return fld


class CoverageError(ValueError):
    def __init__(self, coverage: float):
        super().__init__(f"source box covers only {coverage:.3f} of the rescaled target box")
        self.coverage = coverage


def rescale(field: Field, lam: float, target: Grid | None = None) -> Field:
    """Slice of the rescaled solution ``u(lam x, lam t)``.

    Given ``u(., t)`` returns ``u(lam ., t)`` labelled with time ``t/lam`` on
    ``target`` (default: the source grid), using band-limited interpolation of
    the perturbation and the exact scaling ``phi_tau(lam x) = phi_{tau/lam}(x)``
    of the reference.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    src = field.grid
    target = src if target is None else target
    if target.n != src.n:
        raise ValueError("target grid dimension differs")
    ax = lam * target.axis()
    inside = np.abs(ax) <= src.X
    coverage = float(np.mean(inside)) ** src.n
    if coverage < 1.0:
        raise CoverageError(coverage)
    if src.n == 1:
        vals = trig_interpolate(field.values, src, ax)
    else:
        b = trig_interpolation_matrix(src, ax)
        vals = b @ field.values @ b.T
    return Field(target, vals, background=field.background, tau=field.tau / lam, t=field.t / lam)


# -- snapshot files -------------------------------------------------------

_HEADER = struct.Struct("<4sBIddI")


def write_snapshot(path, field: Field, extra: dict | None = None) -> None:
    """Binary snapshot: fixed header, JSON background descriptor, raw LE float64."""
    desc = {
        "background": None if field.background is None else field.background.descriptor(),
        "tau": field.tau,
    }
    if extra:
        desc["extra"] = extra
    blob = json.dumps(desc).encode()
    g = field.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, g.n, g.N, g.X, field.t, len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_snapshot_header(path) -> dict:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise ValueError(f"{path}: truncated snapshot header")
        magic, n, N, X, t, blen = _HEADER.unpack(head)
        if magic != SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        desc = json.loads(fh.read(blen))
    return {"n": n, "N": N, "X": X, "t": t, **desc, "data_offset": _HEADER.size + blen}


def read_snapshot(path) -> Field:
    info = read_snapshot_header(path)
    grid = Grid(info["n"], info["X"], info["N"])
    data = Path(path).read_bytes()[info["data_offset"]:]
    vals = np.frombuffer(data, dtype="<f8")
    if vals.size != grid.size:
        raise ValueError(f"{path}: expected {grid.size} samples, found {vals.size}")
    bg = FarFieldProfile.from_descriptor(info["background"])
    return Field(grid, vals.reshape(grid.shape), background=bg, tau=info["tau"], t=info["t"])
