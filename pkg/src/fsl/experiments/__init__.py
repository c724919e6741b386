"""Registry of numerical verifiers.

Each entry maps an id to a callable taking a parameter dict, its default
parameters and a short description of the estimate it probes.

>>> from fsl.experiments import run_experiment
>>> rep = run_experiment("linear_exactness", {"N": 256, "X": 16.5})
>>> rep.status
'PASS'
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .asymptotics import (BV_DEFAULTS, DECAY_DEFAULTS, LIPSCHITZ_DEFAULTS, N2_DEFAULTS,
                          PROFILE_DEFAULTS, REGULARITY_DEFAULTS, verify_bv_convergence,
                          verify_decay_rates, verify_lipschitz_mode, verify_n2_smoke,
                          verify_profile, verify_regularity_decay)
from .common import resolve_params
from .inequalities import (ALIBAUD_DEFAULTS, BV_FORMULA_DEFAULTS, FUNDAMENTAL_DEFAULTS,
                           LOCALIZATION_DEFAULTS, MAX_PRINCIPLE_DEFAULTS, SMOOTHING_DEFAULTS,
                           verify_alibaud, verify_bv_formula, verify_fundamental_bounds,
                           verify_localization_smoothing, verify_max_principle,
                           verify_smoothing_lemma)
from .numerics import (LINEAR_DEFAULTS, REFINEMENT_DEFAULTS, verify_linear_exactness,
                       verify_refinement)
from .report import ExperimentReport, write_summary_csv


@dataclass(frozen=True)
class Experiment:
    id: str
    func: Callable[[dict], ExperimentReport]
    defaults: dict
    summary: str
    estimate: str
    outputs: str
    family: str
    aliases: tuple = field(default_factory=tuple)

    def params(self, overrides: dict | None = None) -> dict:
        return resolve_params(self.defaults, overrides)


def _e(id, func, defaults, family, summary, estimate, outputs):
    return Experiment(id, func, defaults, summary, estimate, outputs, family,
                      aliases=(func.__name__,))


REGISTRY: dict[str, Experiment] = {e.id: e for e in (
    _e("decay_rates", verify_decay_rates, DECAY_DEFAULTS, "asymptotics",
       "diffusive decay of u - u^SS in L^q",
       "||u - u^SS||_q <= C t^(n/q - n/p) ||v0||_p, with o(1) in place of C for p > 1",
       "series of the difference norm, fitted slope, o(1) ratio"),
    _e("bv_convergence", verify_bv_convergence, BV_DEFAULTS, "asymptotics",
       "total variation convergence to u^SS for BV data",
       "TV(u - u^SS)(t) -> 0 and TV(u(t)) <= TV(u0)",
       "TV series, tail mass outside B(Rt)"),
    _e("lipschitz_mode", verify_lipschitz_mode, LIPSCHITZ_DEFAULTS, "asymptotics",
       "locally uniform convergence for Lipschitz fluxes",
       "sup over B(Rt) of |u - u^SS| -> 0",
       "local sup series for each radius"),
    _e("regularity_decay", verify_regularity_decay, REGULARITY_DEFAULTS, "asymptotics",
       "derivative decay of shock-like solutions",
       "t |grad u|, t^2 |grad^2 u| and t^(2+alpha) [grad^2 u]_alpha stay bounded",
       "weighted derivative series and growth slopes"),
    _e("profile", verify_profile, PROFILE_DEFAULTS, "asymptotics",
       "self-similar profile and its spatial tails",
       "U is a steady state in similarity variables; U - h(+-inf) ~ |y|^-1",
       "profile, residual history, tail fit"),
    _e("n2_smoke", verify_n2_smoke, N2_DEFAULTS, "asymptotics",
       "planar self-similar profiles",
       "with zero flux U(y) equals the Poisson evolution of h(x/|x|) at t = 1",
       "pointwise profile errors"),
    _e("alibaud", verify_alibaud, ALIBAUD_DEFAULTS, "inequalities",
       "controlled speed of propagation (Alibaud's inequality)",
       "int_B(x0,R) |u - v|(t) <= int_B(x0,R+Lt) P(t) * |u0 - v0|",
       "bound ratios per instance, best constant"),
    _e("bv_formula", verify_bv_formula, BV_FORMULA_DEFAULTS, "inequalities",
       "weighted L1 bound on the derivative",
       "int psi |u_x|(t) <= int psi(t) P(t) * |u0_x|",
       "bound ratios per instance, best constant"),
    _e("smoothing_lemma", verify_smoothing_lemma, SMOOTHING_DEFAULTS, "inequalities",
       "amalgam smoothing of the Poisson semigroup",
       "||P(t) * w||_{l^p L^q2} <= C t^(n/q2 - n/q1) ||w||_{l^p L^q1}, t <= 1",
       "worst ratios per time, fitted exponents"),
    _e("localization_smoothing", verify_localization_smoothing, LOCALIZATION_DEFAULTS, "inequalities",
       "propagation of localization and smoothing for differences",
       "||v(t)||_{l^p L^1} <= C ||v0||_{l^p L^1} and ||v(t)||_q <= C ||v(1/2)||_{l^p L^1}",
       "constants on two grids"),
    _e("fundamental_bounds", verify_fundamental_bounds, FUNDAMENTAL_DEFAULTS, "inequalities",
       "fundamental solution of the linearised equation",
       "C0^-1 P <= Gamma <= C0 P, unit mass, representation formula",
       "fitted C0, mass and positivity per column"),
    _e("max_principle", verify_max_principle, MAX_PRINCIPLE_DEFAULTS, "inequalities",
       "maximum principle and L1 contraction of the scheme",
       "sup |u(t)| and ||u - v||_1 are non-increasing",
       "largest increases per run"),
    _e("linear_exactness", verify_linear_exactness, LINEAR_DEFAULTS, "numerics",
       "exact linear evolution of step and bump data",
       "with f = 0 the solution is the Poisson evolution of the data",
       "relative errors, runtime"),
    _e("refinement", verify_refinement, REFINEMENT_DEFAULTS, "numerics",
       "first-order grid convergence of the linear drift-diffusion scheme",
       "L1 error halves when N doubles",
       "errors on two grids and their ratio"),
)}

_ALIASES = {a: e.id for e in REGISTRY.values() for a in e.aliases}


def get_experiment(name: str) -> Experiment:
    """Look up an experiment by id or by verifier function name."""
    key = _ALIASES.get(name, name)
    if key not in REGISTRY:
        raise KeyError(f"unknown experiment '{name}'; known: {', '.join(sorted(REGISTRY))}")
    return REGISTRY[key]


def list_experiments() -> list[Experiment]:
    return list(REGISTRY.values())


def describe(name: str) -> str:
    e = get_experiment(name)
    lines = [f"{e.id} ({e.func.__name__}): {e.summary}",
             f"  estimate: {e.estimate}",
             f"  outputs:  {e.outputs}",
             "  inputs:"]
    lines += [f"    {k} = {v!r}" for k, v in e.defaults.items()]
    return "\n".join(lines)


def run_experiment(name: str, overrides: dict | None = None) -> ExperimentReport:
    e = get_experiment(name)
    return e.func(e.params(overrides))


__all__ = ["Experiment", "ExperimentReport", "REGISTRY", "describe", "get_experiment",
           "list_experiments", "run_experiment", "write_summary_csv"]
