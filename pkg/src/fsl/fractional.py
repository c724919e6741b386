"""Fractional Laplacian, Poisson kernel and the fractional heat semigroup.

Spectral operators act on the stored perturbation of a field as periodic
Fourier multipliers.  A far-field background is handled analytically: its
``Lambda`` is known in closed form and the Poisson flow only shifts its scale
``tau -> tau + t``.  ``poisson_convolve_quadrature`` is an independent,
non-spectral oracle built on adaptive quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicSpline

from .field import Field, Grid


def _check_order(s: float) -> float:
    s = float(s)
    if not 0.0 < s <= 2.0:
        raise ValueError(f"order s must lie in (0, 2], got {s}")
    return s


def _check_background(field: Field, s: float) -> None:
    bg = field.background
    if bg is not None and s != 1.0 and not bg.is_constant:
        raise ValueError("no closed form for Lambda^s of the background when s != 1")


@dataclass(frozen=True, eq=False)
class SpectralOperator:
    """Real Fourier multiplier on a periodic grid (``rfftn`` layout).

    Examples
    --------
    >>> g = Grid(1, np.pi, 64)
    >>> op = SpectralOperator.fractional_laplacian(g, 1.0)
    >>> x = g.axis()
    >>> np.allclose(op.apply(np.cos(2 * x)), 2 * np.cos(2 * x))
    True
    """

    grid: Grid
    symbol: np.ndarray
    s: float = 1.0

    def __post_init__(self):
        sym = np.asarray(self.symbol, dtype=float)
        if np.any(sym < 0) or not np.all(np.isfinite(sym)):
            raise ValueError("symbol must be finite and nonnegative")
        sym.flags.writeable = False
        object.__setattr__(self, "symbol", sym)

    @classmethod
    def fractional_laplacian(cls, grid: Grid, s: float = 1.0) -> "SpectralOperator":
        s = _check_order(s)
        return cls(grid, grid.wavenumber_modulus() ** s, s)

    @classmethod
    def semigroup(cls, grid: Grid, t: float, s: float = 1.0, epsilon: float = 0.0) -> "SpectralOperator":
        """``exp(-t (|xi|^s + epsilon |xi|^2))``."""
        s = _check_order(s)
        if t < 0:
            raise ValueError("semigroup time must be >= 0")
        k = grid.wavenumber_modulus()
        return cls(grid, np.exp(-t * (k**s + epsilon * k * k)), s)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Apply to an array whose trailing axes match the grid (batch allowed)."""
        axes = tuple(range(-self.grid.n, 0))
        spec = np.fft.rfftn(values, axes=axes)
        return np.fft.irfftn(spec * self.symbol, s=self.grid.shape, axes=axes)


def apply_lambda(field: Field, s: float = 1.0) -> Field:
    """``Lambda^s`` of a field, returned as a plain (decaying) field.

    The perturbation goes through the multiplier ``|xi|^s``; a background adds
    its exact ``Lambda phi_tau``, which is only available for ``s = 1``.
    """
    s = _check_order(s)
    _check_background(field, s)
    out = SpectralOperator.fractional_laplacian(field.grid, s).apply(field.values)
    bg = field.background
    if bg is not None and not bg.is_constant:
        out = out + bg.lambda_reference(*field.grid.coords(), tau=field.tau)
    return Field(field.grid, out, t=field.t)


def heat_semigroup(field: Field, t: float, s: float = 1.0, epsilon: float = 0.0) -> Field:
    """Fractional heat flow ``exp(-t Lambda^s)`` applied to a field.

    The background is advanced exactly by shifting its scale to ``tau + t``.
    ``epsilon > 0`` adds the factor ``exp(t epsilon Delta)`` on the perturbation
    only (the background has no closed form then and is rejected unless constant).
    """
    s = _check_order(s)
    if t < 0:
        raise ValueError("semigroup time must be >= 0")
    _check_background(field, s)
    bg = field.background
    if epsilon and bg is not None and not bg.is_constant:
        raise ValueError("viscous semigroup of a non-constant background has no closed form")
    if t == 0:
        return field
    vals = SpectralOperator.semigroup(field.grid, t, s, epsilon).apply(field.values)
    tau = field.tau + t if bg is not None else field.tau
    return Field(field.grid, vals, background=bg, tau=tau, t=field.t + t)


# -- Poisson kernel -------------------------------------------------------

def _sphere_area(n: int) -> float:
    return 2 * np.pi ** (n / 2) / special.gamma(n / 2)


@lru_cache(maxsize=None)
def poisson_constant(n: int) -> float:
    """Normalisation ``c_n`` of the Poisson kernel, cross-checked by quadrature.

    The closed form ``Gamma((n+1)/2) / pi^((n+1)/2)`` is accepted only if it
    matches ``1 / (|S^{n-1}| int_0^inf r^{n-1} (1+r^2)^{-(n+1)/2} dr)``.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    closed = special.gamma((n + 1) / 2) / np.pi ** ((n + 1) / 2)
    radial, _ = integrate.quad(lambda r: r ** (n - 1) * (1 + r * r) ** (-(n + 1) / 2), 0, np.inf,
                               epsabs=1e-13, epsrel=1e-13)
    numeric = 1.0 / (_sphere_area(n) * radial)
    if abs(numeric - closed) > 1e-9 * closed:
        raise ArithmeticError(f"Poisson constant mismatch for n={n}: {closed} vs {numeric}")
    return float(closed)


def poisson_evaluate(x, t: float, n: int | None = None) -> np.ndarray:
    """``P(x, t) = c_n t / (|x|^2 + t^2)^((n+1)/2)``.

    ``x`` is a scalar/array of 1-d points, or an array whose last axis holds
    the ``n`` coordinates when ``n`` is given and greater than one.
    """
    if not t > 0:
        raise ValueError("Poisson kernel needs t > 0")
    x = np.asarray(x, dtype=float)
    if n is None or n == 1:
        n, r2 = 1, x * x
    else:
        if x.shape[-1] != n:
            raise ValueError(f"last axis must hold {n} coordinates")
        r2 = np.sum(x * x, axis=-1)
    return poisson_constant(n) * t / (r2 + t * t) ** ((n + 1) / 2)


def periodic_poisson_1d(x, t: float, period: float) -> np.ndarray:
    """Periodisation ``sum_m P(x + m L, t)`` of the 1-d kernel (closed form)."""
    if not t > 0:
        raise ValueError("Poisson kernel needs t > 0")
    a = 2 * np.pi / period
    x = np.asarray(x, dtype=float)
    return (1.0 / period) * np.sinh(a * t) / (np.cosh(a * t) - np.cos(a * x))


def poisson_convolve_quadrature(w0, t: float, points, support=None, period: float | None = None,
                                epsabs: float = 1e-10) -> np.ndarray:
    """``(P(., t) * w0)(x)`` by adaptive real-space quadrature (1-d oracle).

    Parameters
    ----------
    w0 : callable, Field or array
        Data. A callable is integrated as is; a plain field (or samples on
        ``support``'s grid) is interpolated with a cubic spline.
    t : float
        Time, ``> 0``.
    points : array_like
        Evaluation points.
    support : tuple, optional
        Interval ``(lo, hi)`` outside which ``w0`` vanishes.  Defaults to the
        box of the field, and is required for callables.
    period : float, optional
        If given, convolve with the periodised kernel instead of the kernel on R.
    """
    if not t > 0:
        raise ValueError("quadrature oracle needs t > 0")
    if isinstance(w0, Field):
        if w0.grid.n != 1:
            raise ValueError("quadrature oracle is 1-d; use poisson_convolve_angular for n = 2")
        x = w0.grid.axis()
        spline = CubicSpline(x, w0.total())
        lo, hi = (-w0.grid.X, w0.grid.X) if support is None else support
        fn = spline
    elif callable(w0):
        if support is None:
            raise ValueError("support interval required for callable data")
        lo, hi = support
        fn = w0
    else:
        raise TypeError("w0 must be a callable or a Field")
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    out = np.empty(pts.size)
    for i, xi in enumerate(pts.ravel()):
        if period is None:
            kern = lambda z, xi=xi: float(poisson_evaluate(xi - z, t))
        else:
            kern = lambda z, xi=xi: float(periodic_poisson_1d(xi - z, t, period))
        brk = [p for p in (xi,) if lo < p < hi]
        val, _ = integrate.quad(lambda z: kern(z) * float(fn(z)), lo, hi, points=brk or None,
                                epsabs=epsabs, epsrel=1e-12, limit=400)
        out[i] = val
    return out.reshape(np.shape(points)) if np.ndim(points) else out[0]


def poisson_convolve_angular(h, x: float, y: float, t: float = 1.0, epsabs: float = 1e-10) -> float:
    """Poisson flow of 0-homogeneous data ``h(theta)`` in the plane at one point.

    Nested adaptive quadrature in polar coordinates about the origin; the
    radial integral runs to infinity.
    """
    c2 = poisson_constant(2)

    def radial(psi):
        hv = float(h(psi))
        if hv == 0.0:
            return 0.0
        cx, cy = np.cos(psi), np.sin(psi)
        f = lambda r: r * c2 * t / ((x - r * cx) ** 2 + (y - r * cy) ** 2 + t * t) ** 1.5
        rmid = max(0.0, x * cx + y * cy)
        a, _ = integrate.quad(f, 0.0, rmid, epsabs=epsabs, limit=200) if rmid > 0 else (0.0, 0.0)
        b, _ = integrate.quad(f, rmid, np.inf, epsabs=epsabs, limit=200)
        return hv * (a + b)

    theta0 = np.arctan2(y, x)
    val, _ = integrate.quad(radial, theta0 - np.pi, theta0 + np.pi, points=[theta0],
                            epsabs=epsabs, limit=200)
    return float(val)
