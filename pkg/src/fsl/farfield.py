"""Far-field data h on the sphere and the smooth reference profiles built from it.

Non-decaying data ``u0 = h(x/|x|) + v0`` are stored as ``phi_tau + v`` where
``phi_tau`` is the fractional heat flow of ``h(x/|x|)`` at time ``tau``.  For
``s = 1`` this flow is known in closed form in both supported dimensions:

* n = 1:  ``phi_tau(x) = mu - (2a/pi) arctan(x/tau)``
* n = 2:  ``phi_tau(r, theta) = sum_k hhat_k q(r/tau)^|k| exp(i k theta)`` with
  ``q(r) = (sqrt(1 + r^2) - 1)/r``.

The second formula follows from integrating the Poisson kernel radially in
closed form; ``fsl.fractional.poisson_convolve_quadrature`` provides the
independent check.  Because ``phi_tau(x) = phi_1(x/tau)``, the reference is a
self-similar solution of the linear problem and ``Lambda phi_tau`` equals
``(1/tau) y . grad phi_1(y)`` at ``y = x/tau``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _q(r):
    # (sqrt(1+r^2) - 1)/r, written without cancellation
    return r / (np.sqrt(1.0 + r * r) + 1.0)


@dataclass(frozen=True, eq=False)
class FarFieldProfile:
    """Angular far-field data and its analytic reference flow.

    For ``n == 1`` the data are the two limits ``mu + a`` (x -> -inf) and
    ``mu - a`` (x -> +inf).  For ``n == 2`` they are samples of ``h`` on the
    uniform angular grid ``theta_j = 2 pi j / M``.
    """

    n: int
    a: float = 0.0
    mu: float = 0.0
    h_table: np.ndarray | None = None
    tau: float = 1.0
    _hhat: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.n}")
        if self.tau < 0:
            raise ValueError("reference scale tau must be >= 0")
        if self.n == 2:
            if self.h_table is None:
                raise ValueError("n=2 far field needs an h table")
            table = np.asarray(self.h_table, dtype=float)
            if table.ndim != 1 or table.size < 4:
                raise ValueError("h table must be 1-d with at least 4 samples")
            object.__setattr__(self, "h_table", table)
            object.__setattr__(self, "_hhat", np.fft.rfft(table) / table.size)

    # -- constructors -----------------------------------------------------
    @classmethod
    def shock(cls, a: float = 1.0, mu: float = 0.0, tau: float = 1.0) -> "FarFieldProfile":
        """1-d data with limits ``mu +- a`` as ``x -> -+inf``."""
        return cls(n=1, a=float(a), mu=float(mu), tau=float(tau))

    @classmethod
    def angular(cls, h, n_angles: int = 64, tau: float = 1.0) -> "FarFieldProfile":
        """2-d data from a callable ``h(theta)`` or an explicit table."""
        if callable(h):
            theta = 2 * np.pi * np.arange(n_angles) / n_angles
            table = np.asarray(h(theta), dtype=float) * np.ones(n_angles)
        else:
            table = np.asarray(h, dtype=float)
        return cls(n=2, h_table=table, tau=float(tau))

    @classmethod
    def constant(cls, c: float, n: int = 1, tau: float = 1.0) -> "FarFieldProfile":
        if n == 1:
            return cls.shock(a=0.0, mu=c, tau=tau)
        return cls.angular(np.full(8, float(c)), tau=tau)

    def with_tau(self, tau: float) -> "FarFieldProfile":
        if self.n == 1:
            return FarFieldProfile(n=1, a=self.a, mu=self.mu, tau=tau)
        return FarFieldProfile(n=2, h_table=self.h_table, tau=tau)

    # -- descriptors ------------------------------------------------------
    @property
    def is_constant(self) -> bool:
        if self.n == 1:
            return self.a == 0.0
        return bool(np.ptp(self.h_table) == 0.0)

    def bounds(self) -> tuple[float, float]:
        """Range of h on the sphere."""
        if self.n == 1:
            lo, hi = sorted((self.mu - self.a, self.mu + self.a))
            return lo, hi
        return float(self.h_table.min()), float(self.h_table.max())

    def sup(self) -> float:
        lo, hi = self.bounds()
        return max(abs(lo), abs(hi))

    def descriptor(self) -> dict:
        if self.n == 1:
            return {"kind": "shock", "n": 1, "a": self.a, "mu": self.mu, "tau": self.tau}
        return {"kind": "angular", "n": 2, "h_table": self.h_table.tolist(), "tau": self.tau}

    @classmethod
    def from_descriptor(cls, d: dict | None) -> "FarFieldProfile | None":
        if d is None:
            return None
        if d["kind"] == "shock":
            return cls.shock(d["a"], d["mu"], d["tau"])
        if d["kind"] == "angular":
            return cls(n=2, h_table=np.asarray(d["h_table"]), tau=d["tau"])
        raise ValueError(f"unknown far-field kind {d['kind']!r}")

    # -- evaluation -------------------------------------------------------
    def _angular_series(self, r, theta, weight_fn):
        hhat = self._hhat
        m = self.h_table.size
        out = np.real(hhat[0]) * weight_fn(0, r)
        for k in range(1, hhat.size):
            w = 1.0 if (m % 2 == 0 and k == m // 2) else 2.0
            out = out + w * np.real(hhat[k] * np.exp(1j * k * theta)) * weight_fn(k, r)
        return out

    def h(self, *coords):
        """Far-field value ``h(x/|x|)``."""
        if self.n == 1:
            (x,) = coords
            return self.mu - self.a * np.sign(x)
        x, y = coords
        theta = np.arctan2(y, x)
        return self._angular_series(np.ones_like(theta), theta, lambda k, r: 1.0)

    def reference(self, *coords, tau: float | None = None):
        """Reference profile ``phi_tau`` at the given coordinates."""
        tau = self.tau if tau is None else tau
        if self.n == 1:
            (x,) = coords
            x = np.asarray(x, dtype=float)
            if tau == 0.0:
                return self.mu - self.a * np.sign(x)
            return self.mu - (2 * self.a / np.pi) * np.arctan(x / tau)
        x, y = (np.asarray(c, dtype=float) for c in coords)
        r = np.hypot(x, y)
        theta = np.arctan2(y, x)
        if tau == 0.0:
            q = np.where(r > 0, 1.0, 0.0)
        else:
            q = _q(r / tau)
        return self._angular_series(q, theta, lambda k, qq: qq**k)

    def lambda_reference(self, *coords, tau: float | None = None):
        """Exact ``Lambda phi_tau`` (order s = 1)."""
        tau = self.tau if tau is None else tau
        if tau <= 0:
            raise ValueError("Lambda of the reference needs tau > 0")
        if self.n == 1:
            (x,) = coords
            x = np.asarray(x, dtype=float)
            return -(2 * self.a / np.pi) * x / (tau * tau + x * x)
        x, y = (np.asarray(c, dtype=float) for c in coords)
        rr = np.hypot(x, y) / tau
        theta = np.arctan2(y, x)
        q = _q(rr)
        root = np.sqrt(1.0 + rr * rr)
        return self._angular_series(q, theta, lambda k, qq: k * qq**k / root) / tau

    def tail_amplitude(self) -> float:
        """Coefficient C of the linear tail ``|phi_1 - h| ~ C/|y|`` (n = 1)."""
        return 2 * abs(self.a) / np.pi
