"""Experiment reports: verdicts, serialisation and plot-data export."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA = "report-v1"

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
EXIT_CODES = {PASS: 0, FAIL: 1, INCONCLUSIVE: 2}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def digest(inputs: dict) -> str:
    """Stable SHA-256 of a JSON-serialisable input description."""
    blob = json.dumps(_jsonable(inputs), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class Check:
    """One asserted tolerance.  ``instance`` identifies the offending case on failure."""

    name: str
    passed: bool
    value: float | None = None
    tolerance: float | None = None
    instance: dict | None = None
    note: str = ""


@dataclass
class ExperimentReport:
    """Outcome of one verifier run.

    ``artifacts`` maps names to fields or trajectories the caller may persist;
    they are not part of the serialised report.
    """

    experiment: str
    inputs: dict
    series: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    ratios: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    inconclusive_reason: str | None = None
    runtime: float = 0.0
    artifacts: dict = field(default_factory=dict, repr=False)

    @property
    def inputs_digest(self) -> str:
        return digest(self.inputs)

    def check(self, name: str, passed: bool, value=None, tolerance=None, instance=None, note: str = "") -> bool:
        passed = bool(passed)
        self.checks.append(Check(name, passed, None if value is None else float(value),
                                 None if tolerance is None else float(tolerance),
                                 None if passed else (instance or {"value": value}), note))
        return passed

    def mark_inconclusive(self, reason: str) -> None:
        if self.inconclusive_reason is None:
            self.inconclusive_reason = reason
        else:
            self.inconclusive_reason += "; " + reason

    def add_series(self, name: str, x, y, columns=("t", "value")) -> None:
        self.series[name] = {"columns": list(columns), "x": np.asarray(x, dtype=float).tolist(),
                             "y": np.asarray(y, dtype=float).tolist()}

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    @property
    def status(self) -> str:
        if self.failures:
            return FAIL
        if self.inconclusive_reason is not None:
            return INCONCLUSIVE
        return PASS

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    def get_check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return _jsonable({
            "schema": SCHEMA,
            "experiment": self.experiment,
            "inputs": self.inputs,
            "inputs_digest": self.inputs_digest,
            "status": self.status,
            "inconclusive_reason": self.inconclusive_reason,
            "series": self.series,
            "fits": self.fits,
            "ratios": self.ratios,
            "checks": [c.__dict__ for c in self.checks],
            "notes": self.notes,
            "runtime": self.runtime,
        })

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        rep = cls(d["experiment"], d["inputs"], d["series"], d["fits"], d["ratios"],
                  [Check(**c) for c in d["checks"]], d["notes"], d["inconclusive_reason"], d["runtime"])
        return rep

    def summary_row(self) -> dict:
        return {"experiment": self.experiment, "status": self.status, "checks": len(self.checks),
                "failed": len(self.failures), "runtime": round(self.runtime, 3),
                "digest": self.inputs_digest[:16]}

    def write_plot_data(self, directory) -> list:
        """One two-column text file per series; returns the written paths."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, s in self.series.items():
            p = directory / f"{name}.dat"
            data = np.column_stack([s["x"], s["y"]]) if s["x"] else np.zeros((0, 2))
            np.savetxt(p, data, header=" ".join(s["columns"]), fmt="%.17g")
            paths.append(p)
        return paths

    def format_lines(self) -> list:
        out = [f"{self.experiment}: {self.status.upper()} ({self.runtime:.1f} s)"]
        for c in self.checks:
            tag = "ok  " if c.passed else "FAIL"
            val = "" if c.value is None else f" value={c.value:.6g}"
            tol = "" if c.tolerance is None else f" tol={c.tolerance:.3g}"
            out.append(f"  [{tag}] {c.name}{val}{tol}{(' ' + c.note) if c.note else ''}")
        if self.inconclusive_reason:
            out.append(f"  inconclusive: {self.inconclusive_reason}")
        return out


def write_summary_csv(reports, path) -> None:
    rows = [r.summary_row() for r in reports]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["experiment"])
        w.writeheader()
        w.writerows(rows)
