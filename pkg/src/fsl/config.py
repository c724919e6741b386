"""Run configuration: ``key = value`` text with optional ``[section]`` headers.

Keys before the first header belong to no section and may be any known
key.  Values are Python literals (numbers, tuples, strings, ``None``,
``true``/``false``); ``inf`` is accepted, and bare words are strings.

Example::

    experiment = decay_rates
    flux = burgers
    a = 1

    [grid]
    N = 2048
"""

from __future__ import annotations

import ast
import configparser
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .evolve import SchemeConfig
from .field import Grid
from .flux import get_flux

_TOP = "__top__"

SECTIONS = {
    "run": ("experiment", "seed", "output_dir"),
    "flux": ("flux",),
    "farfield": ("a", "mu", "tau", "h_table"),
    "grid": ("n", "N", "X", "Y"),
    "scheme": ("flux_kind", "cfl", "epsilon", "frame"),
    "time": ("t_end", "t_max", "s_max", "points_per_decade"),
}
STRUCTURED = {k: sec for sec, keys in SECTIONS.items() for k in keys}
KEY_ALIASES = {"CFL": "cfl", "Cfl": "cfl", "eps": "epsilon"}
GLOBAL_DEFAULTS = {"N": 4096, "X": 128.5, "cfl": 0.4, "seed": 0, "output_dir": "runs"}
PATH_KEYS = ("h_table",)


class ConfigError(ValueError):
    """Configuration problem; ``key`` and ``line`` locate it when known."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        super().__init__(message)
        self.key = key
        self.line = line


def parse_value(text: str):
    s = text.strip()
    low = s.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null", ""):
        return None
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    if low == "-inf":
        return -math.inf
    try:
        val = ast.literal_eval(s)
    except (ValueError, SyntaxError):
        return s
    if isinstance(val, tuple):
        return tuple(math.inf if v == "inf" else v for v in val)
    return val


def format_value(v) -> str:
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, str):
        return v
    if isinstance(v, (list, tuple)):
        return "(" + ", ".join(format_value(x) if not isinstance(x, str) else repr(x) for x in v) + \
            ("," if len(v) == 1 else "") + ")"
    return repr(v)


def _read_sections(text: str, source: str) -> tuple[dict, dict]:
    parser = configparser.ConfigParser(interpolation=None, strict=True, delimiters=("=",),
                                       comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
                                       default_section="__defaults_unused__")
    parser.optionxform = str
    try:
        parser.read_string(f"[{_TOP}]\n" + text, source=source)
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] - 1
        line = text.splitlines()[lineno - 1].strip()
        raise ConfigError(f"{source}:{lineno}: cannot parse {line!r}", line=lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        what = getattr(exc, "option", None) or exc.section
        raise ConfigError(f"{source}:{exc.lineno - 1}: duplicate {what!r}", key=what,
                          line=exc.lineno - 1) from None
    lines = {}
    for i, raw in enumerate(text.splitlines(), 1):
        if "=" in raw and not raw.lstrip().startswith(("#", ";", "[")):
            lines.setdefault(raw.split("=", 1)[0].strip(), i)
    return {sec: dict(parser[sec]) for sec in parser.sections()}, lines


def _like(default, value):
    """Promote integers to float where the default is a float, so digests do not depend on spelling."""
    if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


@dataclass
class RunConfig:
    """Validated run description.

    ``params`` holds experiment-specific keys; the structured groups hold
    everything the loader recognises.  ``explicit`` lists the keys set in
    the file.
    """

    experiment: str
    flux: object = None
    far_field: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    scheme: dict = field(default_factory=dict)
    time: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "runs"
    params: dict = field(default_factory=dict)
    explicit: frozenset = frozenset()
    source: str | None = None

    def _flat(self) -> dict:
        out = {"flux": self.flux, **self.far_field, **self.grid, **self.scheme, **self.time,
               "seed": self.seed}
        return {k: v for k, v in out.items() if v is not None or k in self.explicit}

    def experiment_params(self) -> dict:
        """Parameter dict for the verifier: its defaults overlaid with this config."""
        from .experiments import get_experiment

        exp = get_experiment(self.experiment)
        out = dict(exp.defaults)
        for k, v in self._flat().items():
            if k in out:
                out[k] = _like(out[k], v)
            elif k in self.explicit and k != "n":
                raise ConfigError(f"key {k!r} is not used by experiment {exp.id!r}", key=k)
        out.update({k: _like(out[k], v) for k, v in self.params.items()})
        return out

    def resolved(self) -> dict:
        """Sectioned view of every value the run uses."""
        p = self.experiment_params()
        used = set(p)
        res = {"run": {"experiment": self.experiment, "output_dir": self.output_dir}}
        for sec, keys in SECTIONS.items():
            if sec == "run":
                if "seed" in used:
                    res["run"]["seed"] = p["seed"]
                continue
            vals = {k: p[k] for k in keys if k in used}
            if vals:
                res[sec] = vals
        extra = {k: v for k, v in p.items() if k not in STRUCTURED}
        if extra:
            res["params"] = extra
        return res

    def digest(self) -> str:
        res = self.resolved()
        res["run"] = {k: v for k, v in res["run"].items() if k != "output_dir"}
        blob = json.dumps(res, sort_keys=True, default=format_value)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_text(self) -> str:
        lines = []
        for sec, vals in self.resolved().items():
            lines.append(f"[{sec}]")
            lines += [f"{k} = {format_value(v)}" for k, v in vals.items()]
            lines.append("")
        return "\n".join(lines)


def _validate(cfg: RunConfig, base: Path) -> None:
    from .experiments import get_experiment

    try:
        exp = get_experiment(str(cfg.experiment))
    except KeyError as exc:
        raise ConfigError(exc.args[0], key="experiment") from None
    cfg.experiment = exp.id
    unknown = sorted(set(cfg.params) - set(exp.defaults))
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} for experiment {exp.id!r}", key=unknown[0])
    try:
        SchemeConfig(flux=cfg.scheme.get("flux_kind") or "auto", cfl=float(cfg.scheme.get("cfl", 0.4)),
                     epsilon=float(cfg.scheme.get("epsilon") or 0.0),
                     frame=cfg.scheme.get("frame") or "physical")
    except ValueError as exc:
        key = "cfl" if "CFL" in str(exc) else "flux_kind" if "flux" in str(exc) else \
            "epsilon" if "viscosity" in str(exc) else "frame"
        raise ConfigError(str(exc), key=key) from None
    if cfg.flux is not None:
        try:
            get_flux(cfg.flux)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"flux: {exc}", key="flux") from None
    dim = 2 if exp.id == "n2_smoke" else 1
    n = cfg.grid.get("n", dim)
    if n != dim:
        raise ConfigError(f"n = {n} does not match experiment {exp.id!r} (n = {dim})", key="n")
    for k in ("X", "Y"):
        if k not in exp.defaults and k not in cfg.explicit:
            continue
        try:
            Grid(dim, float(cfg.grid[k]), int(cfg.grid.get("N", GLOBAL_DEFAULTS["N"])))
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc), key="N" if "N must" in str(exc) else k) from None
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool) or cfg.seed < 0:
        raise ConfigError("seed must be a non-negative integer", key="seed")
    for k in PATH_KEYS:
        v = cfg.far_field.get(k)
        if v is not None:
            path = Path(v) if Path(v).is_absolute() else base / v
            if not path.exists():
                raise ConfigError(f"{k}: file not found: {path}", key=k)
            cfg.far_field[k] = str(path)
    cfg.experiment_params()


def parse_config(text: str, source: str = "<string>", base: Path | str = ".") -> RunConfig:
    """Parse and validate configuration text; relative paths resolve against ``base``."""
    sections, lines = _read_sections(text, source)
    values, explicit, params = {}, set(), {}
    for sec, entries in sections.items():
        if sec != _TOP and sec not in SECTIONS and sec != "params":
            raise ConfigError(f"{source}: unknown section [{sec}]", key=sec)
        for raw_key, raw in entries.items():
            key = KEY_ALIASES.get(raw_key, raw_key)
            where = f"{source}:{lines.get(raw_key, '?')}"
            if key in explicit:
                raise ConfigError(f"{where}: key {key!r} set twice", key=key, line=lines.get(raw_key))
            if sec == "params" or (sec == _TOP and key not in STRUCTURED):
                params[key] = parse_value(raw)
            elif sec != _TOP and STRUCTURED.get(key) != sec:
                raise ConfigError(f"{where}: unknown key {key!r} in [{sec}]", key=key, line=lines.get(raw_key))
            else:
                values[key] = parse_value(raw)
            explicit.add(key)
    if "experiment" not in values:
        raise ConfigError(f"{source}: missing key 'experiment'", key="experiment")
    from .experiments import get_experiment

    try:
        exp_defaults = get_experiment(str(values["experiment"])).defaults
    except KeyError as exc:
        raise ConfigError(exc.args[0], key="experiment") from None
    unknown = [k for k in params if k not in exp_defaults]
    if unknown:
        k = unknown[0]
        raise ConfigError(f"{source}:{lines.get(k, '?')}: unknown key {k!r}", key=k, line=lines.get(k))

    def pick(keys):
        out = {}
        for k in keys:
            if k in values:
                out[k] = values[k]
            elif k in exp_defaults:
                out[k] = exp_defaults[k]
            elif k in GLOBAL_DEFAULTS:
                out[k] = GLOBAL_DEFAULTS[k]
        return out

    cfg = RunConfig(
        experiment=values["experiment"],
        flux=values.get("flux", exp_defaults.get("flux")),
        far_field=pick(SECTIONS["farfield"]),
        grid=pick(SECTIONS["grid"]),
        scheme=pick(SECTIONS["scheme"]),
        time=pick(SECTIONS["time"]),
        seed=values.get("seed", exp_defaults.get("seed", GLOBAL_DEFAULTS["seed"])),
        output_dir=str(values.get("output_dir", GLOBAL_DEFAULTS["output_dir"])),
        params=params,
        explicit=frozenset(explicit),
        source=source,
    )
    _validate(cfg, Path(base))
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path), base=path.parent)
