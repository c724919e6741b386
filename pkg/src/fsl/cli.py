"""Command-line front end.

``fsl run <config>...`` executes experiments, ``fsl list`` and
``fsl describe <id>`` document them, ``fsl snapshot-info <file>`` prints a
snapshot header.  ``run`` exits with 0 when every check passes, 1 on a
failure or error and 2 when a run is inconclusive; usage and configuration
errors exit with 3.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .field import Field, read_snapshot_header, write_snapshot

log = logging.getLogger("fsl")

EXIT_USAGE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def max_workers(requested: int | None = None) -> int:
    """Worker cap from ``FSL_THREADS`` (default 1)."""
    env = os.environ.get("FSL_THREADS")
    cap = 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer FSL_THREADS=%r", env)
    return cap if requested is None else max(1, min(cap, requested))


def combine_exit_codes(codes) -> int:
    codes = list(codes)
    if any(c == 1 for c in codes):
        return 1
    if any(c == 2 for c in codes):
        return 2
    return 0


def run_directory(cfg: RunConfig, root: Path | str | None = None) -> Path:
    root = Path(cfg.output_dir if root is None else root)
    return root / f"{cfg.experiment}-{cfg.digest()}"


def _write_checks(report, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["check", "passed", "value", "tolerance", "note"])
        for c in report.checks:
            w.writerow([c.name, int(c.passed), "" if c.value is None else repr(c.value),
                        "" if c.tolerance is None else repr(c.tolerance), c.note])


def _write_artifacts(report, run_dir: Path) -> list:
    written = []
    for name, obj in report.artifacts.items():
        if isinstance(obj, Field):
            path = run_dir / "snapshots" / f"{name}.snap"
            path.parent.mkdir(exist_ok=True)
            write_snapshot(path, obj, extra={"experiment": report.experiment, "name": name})
        elif hasattr(obj, "to_csv"):
            path = run_dir / f"{name}_diagnostics.csv"
            obj.to_csv(path)
        else:
            continue
        written.append(path)
    return written


def execute(cfg: RunConfig, root: Path | str | None = None) -> tuple[int, Path]:
    """Run one configuration into its content-addressed directory.

    An existing complete run directory is left untouched and its stored
    verdict returned.
    """
    from .experiments import get_experiment
    from .experiments.report import EXIT_CODES, ExperimentReport, write_summary_csv

    run_dir = run_directory(cfg, root)
    report_path = run_dir / "report.json"
    if report_path.exists():
        old = ExperimentReport.from_dict(json.loads(report_path.read_text()))
        log.info("%s: already computed in %s (%s)", cfg.experiment, run_dir, old.status)
        return EXIT_CODES[old.status], run_dir
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "resolved-config.ini").write_text(cfg.to_text())
    exp = get_experiment(cfg.experiment)
    try:
        report = exp.func(cfg.experiment_params())
    except Exception as exc:
        msg = f"experiment {cfg.experiment!r} raised {type(exc).__name__}: {exc}"
        (run_dir / "error.txt").write_text(msg + "\n")
        log.error(msg)
        return 1, run_dir
    report.write_plot_data(run_dir / "plot-data")
    _write_checks(report, run_dir / "checks.csv")
    _write_artifacts(report, run_dir)
    write_summary_csv([report], run_dir / f"summary-{exp.family}.csv")
    report.to_json(report_path)
    for line in report.format_lines():
        log.info(line)
    return report.exit_code, run_dir


def _execute_path(path: str, root: str | None) -> tuple[int, str]:
    code, d = execute(load_config(path), root)
    return code, str(d)


def cmd_run(args) -> int:
    try:
        cfgs = [load_config(p) for p in args.config]
    except ConfigError as exc:
        print(f"fsl: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    workers = max_workers(len(cfgs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_execute_path, args.config, [args.output_dir] * len(cfgs)))
    else:
        results = [execute(c, args.output_dir) for c in cfgs]
    from .experiments.report import FAIL, INCONCLUSIVE, PASS

    names = {0: PASS, 1: FAIL, 2: INCONCLUSIVE}
    for cfg, (code, d) in zip(cfgs, results):
        print(f"{names[code]:<12} {cfg.experiment:<24} {d}")
    return combine_exit_codes(code for code, _ in results)


def cmd_list(args) -> int:
    from .experiments import list_experiments

    for e in list_experiments():
        print(f"{e.id:<24} {e.family:<12} {e.summary}")
    return 0


def cmd_describe(args) -> int:
    from .experiments import describe

    try:
        print(describe(args.id))
    except KeyError as exc:
        print(f"fsl: {exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    return 0


def cmd_snapshot_info(args) -> int:
    try:
        info = read_snapshot_header(args.file)
    except (OSError, ValueError) as exc:
        print(f"fsl: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps(info, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fsl", description="Shock-like solutions of fractal conservation laws.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run experiments from config files")
    r.add_argument("config", nargs="+")
    r.add_argument("-o", "--output-dir", default=None, help="override the configured output directory")
    r.set_defaults(func=cmd_run)
    sub.add_parser("list", help="list experiments").set_defaults(func=cmd_list)
    d = sub.add_parser("describe", help="describe one experiment")
    d.add_argument("id")
    d.set_defaults(func=cmd_describe)
    s = sub.add_parser("snapshot-info", help="print a snapshot header")
    s.add_argument("file")
    s.set_defaults(func=cmd_snapshot_info)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
