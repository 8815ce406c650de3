"""Command-line entry point: ``dirsim <command> [options]``.

Exit codes: 0 success, 2 validation error, 3 tolerance exceeded, 4 parse error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from typing import Optional

from . import jobs
from .config import RunConfig, SweepSpec, parse_config
from .errors import DirsimError, ParseError, ToleranceExceeded, ValidationError
from .model import classify_regime
from .moments import evolve

log = logging.getLogger("dirsim")

EXIT_OK, EXIT_VALIDATION, EXIT_TOLERANCE, EXIT_PARSE = 0, 2, 3, 4


def _load(path: Optional[str]):
    if path is None:
        return RunConfig()
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc}") from exc
    return parse_config(text)


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    changes = {}
    for flag, key in (("dt", "dt"), ("t_end", "t_end"), ("method", "method"), ("cutoff", "cutoff"),
                      ("out", "out"), ("format", "format")):
        value = getattr(args, flag, None)
        if value is not None:
            changes[key] = value
    return dataclasses.replace(cfg, **changes) if changes else cfg


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _sidecar(out: Optional[str], report: dict) -> None:
    if out:
        with open(out + ".report.json", "w") as fh:
            json.dump(report, fh, indent=1, sort_keys=True)
            fh.write("\n")


def _run_config(args) -> RunConfig:
    cfg = _load(args.config)
    if isinstance(cfg, SweepSpec):
        cfg = cfg.run
    return _apply_flags(cfg, args)


def cmd_validate(args) -> int:
    cfg = _load(args.config)
    kind = "sweep" if isinstance(cfg, SweepSpec) else "run"
    params = cfg.base if isinstance(cfg, SweepSpec) else cfg.params
    print(f"ok ({kind}; regime {classify_regime(params)})")
    return EXIT_OK


def cmd_steady(args) -> int:
    cfg = _run_config(args)
    p = cfg.params
    row = jobs.evaluate_point(float("nan"), None, p)
    table = jobs.Table(jobs.SWEEP_HEADER, [[None] + row.cells()[1:]])
    _emit(table.render(cfg.format), cfg.out)
    report = {"params": jobs.params_record(p), "stable": row.stable, "max_rel_discrepancy": row.discrepancy()}
    if row.error:
        report["error"] = row.error
    _sidecar(cfg.out, report)
    return EXIT_OK


def cmd_dynamics(args) -> int:
    cfg = _run_config(args)
    traj = evolve(cfg.params, cfg.init, cfg.t_end, cfg.dt, cfg.method)
    closed = jobs.closed_dynamics(cfg.params, cfg.init, traj.times)
    _emit(jobs.dynamics_table(traj, closed).render(cfg.format), cfg.out)
    report = jobs.dynamics_report("dynamics", cfg.params, traj, closed, cfg.method, cfg.init)
    _sidecar(cfg.out, report)
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = _load(args.config)
    if not isinstance(spec, SweepSpec):
        raise ParseError("sweep needs axis1 in the config")
    run = _apply_flags(spec.run, args)
    rows = jobs.run_sweep(spec, jobs=args.jobs)
    _emit(jobs.sweep_table(rows).render(run.format), run.out)
    axes = [a for a in (spec.axis1, spec.axis2) if a is not None]
    _sidecar(run.out, jobs.sweep_report(rows, spec.base, axes))
    return EXIT_OK


def cmd_figure(args) -> int:
    names = jobs.FIGURES if args.name == "all" else (args.name,)
    out = args.out or "figures"
    fmt = args.format or "csv"
    ok = True
    for name in names:
        datasets = jobs.figure_job(
            name,
            method=args.method or "rk4",
            t_end=args.t_end or jobs.T_END,
            dt=args.dt or jobs.DT,
            jobs=args.jobs,
        )
        for stem, (table, report) in datasets.items():
            path = jobs.write_dataset(out, stem, table, report, fmt)
            ok &= bool(report.get("pass", True))
            log.info("wrote %s", path)
            print(path)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_crosscheck(args) -> int:
    cutoff = args.cutoff or 6
    checks = jobs.cross_check(
        args.scope,
        cutoffs=(cutoff, cutoff + 2),
        t_end=args.t_end or jobs.T_END,
        dt=args.dt or jobs.DT,
        mutate=args.mutate,
    )
    for c in checks:
        print(c.line())
    jobs.require(checks)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value or JSON config file")
    common.add_argument("--out", help="output file (directory for 'figure')")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--dt", type=float)
    common.add_argument("--t-end", dest="t_end", type=float)
    common.add_argument("--method", choices=("rk4", "exact"))
    common.add_argument("--cutoff", type=int, help="Fock cutoff N for oracle runs")
    common.add_argument("--jobs", type=int, default=1, help="worker pool size for grids")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="dirsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("steady", parents=[common], help="steady populations").set_defaults(fn=cmd_steady)
    sub.add_parser("dynamics", parents=[common], help="population dynamics").set_defaults(fn=cmd_dynamics)
    sub.add_parser("sweep", parents=[common], help="steady-state grid sweep").set_defaults(fn=cmd_sweep)
    sub.add_parser("validate", parents=[common], help="check a config").set_defaults(fn=cmd_validate)
    fig = sub.add_parser("figure", parents=[common], help="figure datasets")
    fig.add_argument("name", choices=jobs.FIGURES + ("all",))
    fig.set_defaults(fn=cmd_figure)
    chk = sub.add_parser("crosscheck", parents=[common], help="closed form / engine / oracle agreement")
    chk.add_argument("scope", choices=("steady", "dynamics", "oracle", "all"))
    chk.add_argument("--mutate", action="store_true", help=argparse.SUPPRESS)
    chk.set_defaults(fn=cmd_crosscheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.fn(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ToleranceExceeded as exc:
        print(f"tolerance exceeded: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except DirsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
