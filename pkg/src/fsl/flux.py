"""Flux functions, numerical interface fluxes and the divided-difference coefficient g."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

SMOOTHNESS = ("smooth", "c1alpha", "lipschitz")


@dataclass(frozen=True, eq=False)
class FluxFunction:
    """Scalar flux component ``f: R -> R``.

    ``argmin`` is the minimiser of a convex flux (``-inf``/``+inf`` for
    monotone ones) and enables the Godunov interface flux.  ``lipschitz``
    optionally gives ``sup_{|u|<=m} |f'(u)|`` in closed form.
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    smoothness: str = "smooth"
    convex: bool = False
    argmin: float | None = None
    lipschitz: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.smoothness not in SMOOTHNESS:
            raise ValueError(f"smoothness tag must be one of {SMOOTHNESS}")
        if self.convex and self.argmin is None:
            raise ValueError("a convex flux needs its minimiser for the Godunov flux")

    def __call__(self, u):
        return self.f(u)

    def lipschitz_on(self, m: float) -> float:
        """``L = sup_{|u| <= m} |f'(u)|``."""
        m = abs(float(m))
        if self.lipschitz is not None:
            return float(self.lipschitz(m))
        u = np.linspace(-m, m, 8193)
        return float(np.max(np.abs(self.df(u))))

    @property
    def is_zero(self) -> bool:
        return self.name == "zero"


def _const(value):
    return lambda u: np.full(np.shape(u), value, dtype=float)


def zero() -> FluxFunction:
    return FluxFunction("zero", _const(0.0), _const(0.0), convex=True, argmin=0.0,
                        lipschitz=lambda m: 0.0)


def linear(c: float) -> FluxFunction:
    c = float(c)
    amin = 0.0 if c == 0 else (-np.inf if c > 0 else np.inf)
    return FluxFunction(f"linear({c:g})", lambda u: c * np.asarray(u, dtype=float),
                        _const(c), convex=True, argmin=amin, lipschitz=lambda m: abs(c))


def burgers() -> FluxFunction:
    return FluxFunction("burgers", lambda u: 0.5 * np.square(u), lambda u: np.asarray(u, dtype=float),
                        convex=True, argmin=0.0, lipschitz=lambda m: m)


def cubic() -> FluxFunction:
    return FluxFunction("cubic", lambda u: np.power(u, 3), lambda u: 3 * np.square(u),
                        lipschitz=lambda m: 3 * m * m)


def absolute() -> FluxFunction:
    """``f(u) = |u|``: Lipschitz with a kink at 0."""
    return FluxFunction("abs", np.abs, np.sign, smoothness="lipschitz", convex=True, argmin=0.0,
                        lipschitz=lambda m: 1.0 if m > 0 else 0.0)


def signed_square(shift: float = 0.0) -> FluxFunction:
    """``f(u) = |u - c|(u - c)/2``: C^1 with a kink of f' at ``c``."""
    c = float(shift)
    return FluxFunction(f"signed_square({c:g})", lambda u: 0.5 * np.abs(u - c) * (u - c),
                        lambda u: np.abs(u - c), smoothness="lipschitz",
                        lipschitz=lambda m: m + abs(c))


def polynomial(coeffs: Sequence[float]) -> FluxFunction:
    """``f(u) = sum_k coeffs[k] u^k``."""
    c = np.asarray(coeffs, dtype=float)
    # coefficients below rounding of the largest one carry no information and break the root finder
    p = np.polynomial.Polynomial(c).trim(np.finfo(float).eps * float(np.max(np.abs(c), initial=0.0)))
    dp = p.deriv()
    ddp = dp.deriv()

    def lip(m):
        cands = [-m, m]
        if ddp.degree() >= 1:
            cands += [r.real for r in ddp.roots() if abs(r.imag) < 1e-12 and abs(r.real) <= m]
        return float(max(abs(dp(c)) for c in cands))

    convex = p.degree() <= 2 and (p.degree() < 2 or p.coef[2] > 0)
    amin = None
    if convex:
        if p.degree() == 2:
            amin = -p.coef[1] / (2 * p.coef[2])
        elif p.degree() == 1:
            amin = -np.inf if p.coef[1] > 0 else np.inf
        else:
            amin = 0.0
    return FluxFunction(f"poly{tuple(float(c) for c in coeffs)}", p, dp, convex=convex,
                        argmin=amin, lipschitz=lip)


PRESETS: dict[str, Callable[[], FluxFunction]] = {
    "zero": zero,
    "burgers": burgers,
    "cubic": cubic,
    "abs": absolute,
    "signed_square": signed_square,
}


def get_flux(spec) -> FluxFunction:
    """Preset name, coefficient list or an existing flux."""
    if isinstance(spec, FluxFunction):
        return spec
    if isinstance(spec, str):
        try:
            return PRESETS[spec]()
        except KeyError:
            raise ValueError(f"unknown flux preset {spec!r}; known: {sorted(PRESETS)}") from None
    return polynomial(spec)


def as_components(f, n: int) -> tuple[FluxFunction, ...]:
    """Normalise a flux spec to one scalar component per axis."""
    if isinstance(f, (list, tuple)) and f and isinstance(f[0], FluxFunction):
        comps = tuple(f)
    else:
        comps = (get_flux(f),) + (zero(),) * (n - 1)
    if len(comps) != n:
        raise ValueError(f"need {n} flux components, got {len(comps)}")
    return comps


def lipschitz_on(f, m: float, n: int = 1) -> float:
    """Lipschitz constant of the vector flux (sum over components) on ``[-m, m]``."""
    return float(sum(c.lipschitz_on(m) for c in as_components(f, n)))


# -- numerical interface fluxes -------------------------------------------

def godunov_flux(flux: FluxFunction, ul: np.ndarray, ur: np.ndarray) -> np.ndarray:
    """Exact Riemann (Godunov) flux for a convex scalar flux."""
    if not flux.convex:
        raise ValueError(f"Godunov flux needs a convex flux, {flux.name} is not")
    fmin = flux.f(np.clip(flux.argmin, ul, ur))
    fmax = np.maximum(flux.f(ul), flux.f(ur))
    return np.where(ul <= ur, fmin, fmax)


def llf_flux(flux: FluxFunction, ul: np.ndarray, ur: np.ndarray) -> np.ndarray:
    """Local Lax-Friedrichs (Rusanov) flux."""
    alpha = np.maximum(np.abs(flux.df(ul)), np.abs(flux.df(ur)))
    return 0.5 * (flux.f(ul) + flux.f(ur)) - 0.5 * alpha * (ur - ul)


def numerical_flux(kind: str) -> Callable:
    if kind == "godunov":
        return godunov_flux
    if kind in ("llf", "local-lax-friedrichs", "lax-friedrichs"):
        return llf_flux
    raise ValueError(f"unknown numerical flux {kind!r}")


# -- divided differences ---------------------------------------------------

def divided_difference(flux: FluxFunction, u: np.ndarray, us: np.ndarray) -> np.ndarray:
    """``(f(u) - f(us))/(u - us)`` with the removable singularity filled by ``f'(u)``."""
    u = np.asarray(u, dtype=float)
    us = np.asarray(us, dtype=float)
    diff = u - us
    close = np.abs(diff) < 1e-12 * (1.0 + np.abs(u) + np.abs(us))
    safe = np.where(close, 1.0, diff)
    return np.where(close, flux.df(u), (flux.f(u) - flux.f(us)) / safe)


def g_coefficient(u, us, f):
    """Coefficient of the viscous continuity equation satisfied by ``u - us``.

    ``u`` and ``us`` are Fields on the same grid; returns an array of shape
    ``(n,) + grid.shape`` (one component per axis).
    """
    if u.grid != us.grid:
        raise ValueError("fields live on different grids")
    n = u.grid.n
    ut, ust = u.total(), us.total()
    return np.stack([divided_difference(c, ut, ust) for c in as_components(f, n)])
