"""Sweeps, figure datasets and cross-validation reports behind the command line.

CSV output is byte-stable: fixed column order, fixed row order and every real
written with 17 significant digits. Each dataset gets a JSON sidecar that
records the full parameter set and the closed-form versus engine discrepancy.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import closed_forms as cf
from . import fock
from .config import Axis, SweepSpec
from .errors import DirsimError, ToleranceExceeded
from .model import SystemParams, classify_regime, is_strictly_stable
from .moments import InitialCondition, Trajectory, evolve, steady_populations

DYNAMICS_HEADER = ["t", "n11", "n22", "delta", "n11_closed", "n22_closed"]
SWEEP_HEADER = ["axis1", "axis2", "n11", "n22", "delta", "regime", "stable"]
HEATMAP_HEADER = ["theta_minus_phi", "Gamma", "delta"]

OMEGA_FIG = 0.1
T_END, DT = 20.0, 1e-3
SINGLE = InitialCondition.single_excitation_first()

TOLERANCES = {
    "steady_rel": 1e-12,
    "dynamics_exact": 1e-12,
    "dynamics_rk4": 1e-8,
    "oracle": 1e-6,
    "convergence": 1e-8,
    "trace": 1e-8,
    "purity": 1e-6,
}


def fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    return f"{float(x):.16e}"


def params_record(p: SystemParams) -> dict:
    return {
        "gamma": p.gamma,
        "Gamma": p.big_gamma,
        "g": p.g,
        "theta": p.theta,
        "phi": p.phi,
        "Omega": p.omega,
        "omega_delta": p.omega_delta,
    }


def _pmap(fn: Callable, items: Sequence, jobs: int) -> list:
    """Order-preserving map over a worker pool of size ``jobs``."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class Table:
    header: list
    rows: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        for row in self.rows:
            writer.writerow([fmt(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        records = [
            {h: (None if (isinstance(v, float) and math.isnan(v)) else v) for h, v in zip(self.header, row)}
            for row in self.rows
        ]
        return json.dumps(records, indent=1)

    def render(self, format: str = "csv") -> str:
        return self.to_csv() if format == "csv" else self.to_json()


def _rel(a: float, b: float, scale: float) -> float:
    if scale == 0:
        return abs(a - b)
    return abs(a - b) / scale


# --- sweeps -----------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    axis1: float
    axis2: Optional[float]
    params: SystemParams
    n11: Optional[float]
    n22: Optional[float]
    delta: Optional[float]
    regime: str
    stable: bool
    closed: Optional[cf.SteadyResult]
    error: Optional[str] = None

    def cells(self) -> list:
        return [self.axis1, self.axis2, self.n11, self.n22, self.delta, self.regime, self.stable]

    def discrepancy(self) -> Optional[float]:
        """Largest |engine - closed| relative to the total population; Delta absolute."""
        if self.closed is None or self.n11 is None:
            return None
        scale = self.n11 + self.n22
        worst = max(_rel(self.n11, self.closed.n1, scale), _rel(self.n22, self.closed.n2, scale))
        if self.delta is not None and self.closed.delta is not None:
            worst = max(worst, abs(self.delta - self.closed.delta))
        return worst


def evaluate_point(axis1: float, axis2: Optional[float], p: SystemParams) -> SweepRow:
    try:
        regime = str(classify_regime(p))
        stable = is_strictly_stable(p)
    except DirsimError as exc:
        return SweepRow(axis1, axis2, p, None, None, None, "", False, None, str(exc))
    except ValueError as exc:
        return SweepRow(axis1, axis2, p, None, None, None, "", False, None, str(exc))
    if not stable:
        return SweepRow(axis1, axis2, p, None, None, None, regime, False, None, "marginally stable")
    engine = steady_populations(p)
    closed = cf.ss_general(p) if p.omega_delta == 0 else None
    return SweepRow(axis1, axis2, p, engine.n1, engine.n2, engine.delta, regime, True, closed)


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[SweepRow]:
    """Steady populations on the sweep grid; unstable points are kept and flagged."""
    from .model import validate

    def work(pt):
        v1, v2, p = pt
        try:
            validate(p)
        except DirsimError as exc:
            return SweepRow(v1, v2, p, None, None, None, "", False, None, str(exc))
        return evaluate_point(v1, v2, p)

    return _pmap(work, spec.points(), jobs)


def sweep_table(rows: Sequence[SweepRow]) -> Table:
    return Table(SWEEP_HEADER, [r.cells() for r in rows])


def sweep_report(rows: Sequence[SweepRow], base: SystemParams, axes: Sequence[Axis]) -> dict:
    disc = [d for d in (r.discrepancy() for r in rows) if d is not None]
    return {
        "params": params_record(base),
        "axes": [{"name": a.name, "min": a.min, "max": a.max, "count": a.count} for a in axes],
        "points": len(rows),
        "unstable_points": sum(1 for r in rows if not r.stable),
        "max_rel_discrepancy": max(disc) if disc else None,
    }


# --- figure datasets --------------------------------------------------------

FIGURES = (
    "fig2_steady_coherent",
    "fig2_dyn_coherent",
    "fig2_steady_dissipative",
    "fig2_dyn_dissipative",
    "fig2_steady_unidirectional",
    "fig2_dyn_unidirectional",
    "fig3_heatmap",
    "fig4_dynamics",
)

FIG4_PHASES = {"phase0": 0.0, "phase_pi2": math.pi / 2, "phase_3pi2": 3 * math.pi / 2}


def fig2_dynamics_params() -> dict:
    return {
        "coherent": SystemParams(g=2.0, omega=OMEGA_FIG),
        "dissipative": SystemParams(big_gamma=0.8, omega=OMEGA_FIG),
        "unidirectional": SystemParams(big_gamma=0.8, g=0.4, theta=math.pi / 2, omega=OMEGA_FIG),
    }


def fig4_params() -> dict:
    return {
        key: SystemParams(big_gamma=1.0, g=0.5, theta=phase, omega=OMEGA_FIG)
        for key, phase in FIG4_PHASES.items()
    }


def figure_parameter_sets() -> dict:
    """All parameter sets with a dynamics panel, keyed by dataset name."""
    out = {f"fig2_dyn_{k}": p for k, p in fig2_dynamics_params().items()}
    out.update({f"fig4_dynamics_{k}": p for k, p in fig4_params().items()})
    return out


def regime_dynamics(name: str, p: SystemParams, t) -> tuple:
    if name == "fig2_dyn_coherent":
        return cf.coherent_dynamics(p.gamma, p.g, p.omega, t)
    if name == "fig2_dyn_dissipative":
        return cf.dissipative_dynamics(p.gamma, p.big_gamma, p.omega, t)
    if name == "fig2_dyn_unidirectional":
        return cf.unidirectional_dynamics(p.gamma, p.big_gamma, p.omega, t)
    return cf.dyn_closed_form(p, SINGLE, t)


def closed_dynamics(p: SystemParams, init: InitialCondition, t) -> tuple:
    try:
        return cf.dyn_closed_form(p, init, t)
    except DirsimError:
        nan = np.full(np.shape(t), np.nan)
        return nan, nan


def dynamics_table(traj: Trajectory, closed: tuple) -> Table:
    c11, c22 = closed
    rows = [
        [t, a, b, d, x, y]
        for t, a, b, d, x, y in zip(traj.times, traj.n11, traj.n22, traj.imbalance, c11, c22)
    ]
    return Table(DYNAMICS_HEADER, rows)


def dynamics_report(
    name: str,
    p: SystemParams,
    traj: Trajectory,
    closed: tuple,
    method: str,
    init: InitialCondition = SINGLE,
) -> dict:
    c11, c22 = closed
    diff = max(np.nanmax(np.abs(traj.n11 - c11)), np.nanmax(np.abs(traj.n22 - c22)))
    return {
        "dataset": name,
        "params": params_record(p),
        "init": init.kind,
        "method": method,
        "t_end": float(traj.times[-1]),
        "samples": len(traj),
        "max_abs_discrepancy": float(diff),
    }


def _steady_figure(name: str, points: list, jobs: int) -> tuple[Table, dict]:
    """Scaled closed-form curves in the sweep schema; engine discrepancy in the report."""

    def work(pt):
        x, p = pt
        scale = (p.gamma / p.omega) ** 2
        regime = str(classify_regime(p))
        stable = is_strictly_stable(p)
        if not stable:
            return [x, None, None, None, None, regime, False], None
        if name == "fig2_steady_coherent":
            closed = cf.ss_coherent(p.gamma, p.g, p.omega)
        elif name == "fig2_steady_dissipative":
            closed = cf.ss_dissipative(p.gamma, p.big_gamma, p.omega)
        else:
            closed = cf.ss_unidirectional(p.gamma, p.big_gamma, p.omega)
        engine = steady_populations(p)
        c, e = closed.scaled(scale), engine.scaled(scale)
        tot = c.n1 + c.n2
        disc = max(_rel(c.n1, e.n1, tot), _rel(c.n2, e.n2, tot), abs(c.delta - e.delta))
        return [x, None, c.n1, c.n2, c.delta, regime, True], disc

    results = _pmap(work, points, jobs)
    rows = [r for r, _ in results]
    discs = [d for _, d in results if d is not None]
    report = {
        "dataset": name,
        "params": [params_record(p) for _, p in points],
        "scaling": "populations multiplied by (gamma/Omega)^2",
        "unstable_points": sum(1 for _, d in results if d is None),
        "max_rel_discrepancy": max(discs) if discs else None,
        "tolerance": TOLERANCES["steady_rel"],
    }
    report["pass"] = report["max_rel_discrepancy"] is not None and report["max_rel_discrepancy"] < TOLERANCES["steady_rel"]
    return Table(SWEEP_HEADER, rows), report


def fig2_steady_points(name: str, g_max: float = 3.0, big_gamma_max: float = 0.99) -> list:
    if name == "fig2_steady_coherent":
        return [(float(g), SystemParams(g=float(g), omega=OMEGA_FIG)) for g in np.linspace(0, g_max, 61)]
    if name == "fig2_steady_dissipative":
        return [
            (float(G), SystemParams(big_gamma=float(G), omega=OMEGA_FIG))
            for G in np.linspace(0, big_gamma_max, 100)
        ]
    return [
        (float(G), SystemParams(big_gamma=float(G), g=float(G) / 2, theta=math.pi / 2, omega=OMEGA_FIG))
        for G in np.linspace(0, 1.0, 101)
    ]


def heatmap(n_phase: int = 181, n_gamma: int = 101, g: float = 0.5, jobs: int = 1) -> tuple[Table, dict]:
    phases = np.linspace(0, 2 * math.pi, n_phase)
    gammas = np.linspace(0, 1.0, n_gamma)
    points = [(float(x), float(G)) for x in phases for G in gammas]

    def work(pt):
        x, G = pt
        p = SystemParams(big_gamma=G, g=g, theta=x, omega=OMEGA_FIG)
        if not is_strictly_stable(p):
            return [x, G, None], None
        delta = float(cf.general_imbalance(p.gamma, G, g, x))
        engine = steady_populations(p)
        return [x, G, delta], abs(delta - engine.delta)

    results = _pmap(work, points, jobs)
    rows = [r for r, _ in results]
    discs = [d for _, d in results if d is not None]
    deltas = [r[2] for r in rows if r[2] is not None]
    report = {
        "dataset": "fig3_heatmap",
        "params": params_record(SystemParams(g=g, omega=OMEGA_FIG)),
        "grid": {"theta_minus_phi": [0.0, 2 * math.pi, n_phase], "Gamma": [0.0, 1.0, n_gamma]},
        "unstable_points": sum(1 for _, d in results if d is None),
        "delta_range": [min(deltas), max(deltas)],
        "max_abs_discrepancy": max(discs),
        "tolerance": TOLERANCES["steady_rel"],
    }
    report["pass"] = report["max_abs_discrepancy"] < TOLERANCES["steady_rel"]
    return Table(HEATMAP_HEADER, rows), report


def figure_job(
    name: str,
    method: str = "rk4",
    t_end: float = T_END,
    dt: float = DT,
    jobs: int = 1,
) -> dict[str, tuple[Table, dict]]:
    """Datasets for one figure panel group, keyed by output file stem."""
    if name not in FIGURES:
        raise ValueError(f"unknown figure {name!r}; choose from {FIGURES}")
    if name.startswith("fig2_steady"):
        return {name: _steady_figure(name, fig2_steady_points(name), jobs)}
    if name == "fig3_heatmap":
        return {name: heatmap(jobs=jobs)}
    if name.startswith("fig2_dyn"):
        runs = {name: figure_parameter_sets()[name]}
    else:
        runs = {f"fig4_dynamics_{k}": p for k, p in fig4_params().items()}

    def work(item):
        stem, p = item
        traj = evolve(p, SINGLE, t_end, dt, method)
        closed = regime_dynamics(stem, p, traj.times)
        report = dynamics_report(stem, p, traj, closed, method)
        report["tolerance"] = TOLERANCES["dynamics_rk4" if method == "rk4" else "dynamics_exact"]
        report["pass"] = report["max_abs_discrepancy"] < report["tolerance"]
        return stem, (dynamics_table(traj, closed), report)

    return dict(_pmap(work, list(runs.items()), jobs))


def write_dataset(directory: str, stem: str, table: Table, report: dict, format: str = "csv") -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, f"{stem}.{format}")
    with open(path, "w", newline="") as fh:
        fh.write(table.render(format))
    with open(os.path.join(directory, f"{stem}.report.json"), "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


# --- cross validation -------------------------------------------------------

@dataclass
class Check:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value < self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.3e} (tol {self.tolerance:.0e})"


def steady_grids(n: int = 50) -> dict[str, list[tuple[SystemParams, Callable]]]:
    """Per-regime 50-point grids paired with their closed form."""
    coh = [SystemParams(g=float(g), omega=OMEGA_FIG) for g in np.linspace(0, 3, n)]
    dis = [SystemParams(big_gamma=float(G), omega=OMEGA_FIG) for G in np.linspace(0, 0.98, n)]
    uni = [
        SystemParams(big_gamma=float(G), g=float(G) / 2, theta=math.pi / 2, omega=OMEGA_FIG)
        for G in np.linspace(0, 1.0, n)
    ]
    phases = np.linspace(0, 2 * math.pi, 10, endpoint=False)
    gen = [
        SystemParams(big_gamma=float(G), g=0.5, theta=float(x) + 0.3, phi=0.3, omega=OMEGA_FIG)
        for x in phases
        for G in (0.1, 0.3, 0.5, 0.7, 0.9)
    ]
    return {
        "coherent": [(p, lambda p: cf.ss_coherent(p.gamma, p.g, p.omega)) for p in coh],
        "dissipative": [(p, lambda p: cf.ss_dissipative(p.gamma, p.big_gamma, p.omega)) for p in dis],
        "unidirectional": [(p, lambda p: cf.ss_unidirectional(p.gamma, p.big_gamma, p.omega)) for p in uni],
        "general": [(p, cf.ss_general) for p in gen],
    }


def steady_discrepancy(p: SystemParams, closed: cf.SteadyResult) -> float:
    engine = steady_populations(p)
    scale = engine.n1 + engine.n2
    worst = max(_rel(engine.n1, closed.n1, scale), _rel(engine.n2, closed.n2, scale))
    if engine.delta is not None and closed.delta is not None:
        worst = max(worst, abs(engine.delta - closed.delta))
    return worst


def _mutated(fn: Callable, factor: float = 1.0 + 1e-6) -> Callable:
    def wrapped(*args, **kwargs):
        out = fn(*args, **kwargs)
        if isinstance(out, cf.SteadyResult):
            return cf.SteadyResult(out.n1 * factor, out.n2, out.delta)
        n11, n22 = out
        return n11 * factor, n22
    return wrapped


def cross_check(
    scope: str,
    cutoffs: Sequence[int] = (6, 8),
    t_end: float = T_END,
    dt: float = DT,
    mutate: bool = False,
) -> list[Check]:
    """Run one validation scope (steady, dynamics, oracle or all)."""
    scopes = ("steady", "dynamics", "oracle") if scope == "all" else (scope,)
    checks: list[Check] = []
    for sc in scopes:
        if sc == "steady":
            for regime, grid in steady_grids().items():
                worst = 0.0
                for p, closed_fn in grid:
                    fn = _mutated(closed_fn) if mutate else closed_fn
                    worst = max(worst, steady_discrepancy(p, fn(p)))
                checks.append(Check(f"steady/{regime}", worst, TOLERANCES["steady_rel"]))
        elif sc == "dynamics":
            for name, p in figure_parameter_sets().items():
                exact = evolve(p, SINGLE, t_end, dt, "exact")
                rk4 = evolve(p, SINGLE, t_end, dt, "rk4")
                fn = _mutated(regime_dynamics) if mutate else regime_dynamics
                c11, c22 = fn(name, p, exact.times)
                checks.append(Check(
                    f"dynamics/{name}/closed-vs-exact",
                    max(np.abs(exact.n11 - c11).max(), np.abs(exact.n22 - c22).max()),
                    TOLERANCES["dynamics_exact"],
                ))
                checks.append(Check(
                    f"dynamics/{name}/closed-vs-rk4",
                    max(np.abs(rk4.n11 - c11).max(), np.abs(rk4.n22 - c22).max()),
                    TOLERANCES["dynamics_rk4"],
                ))
        elif sc == "oracle":
            checks.extend(oracle_checks(cutoffs, t_end, dt))
        else:
            raise ValueError(f"unknown scope {sc!r}")
    return checks


def oracle_checks(cutoffs: Sequence[int], t_end: float, dt: float) -> list[Check]:
    checks = []
    for name, p in figure_parameter_sets().items():
        engine = evolve(p, SINGLE, t_end, dt, "exact")
        runs = {}
        for N in cutoffs:
            run = fock.evolve_rho(p, SINGLE, N, t_end, dt)
            runs[N] = run
            diff = max(
                np.abs(run.n11 - engine.n11).max(),
                np.abs(run.n22 - engine.n22).max(),
                np.abs(run.b1 - engine.b[:, 0]).max(),
                np.abs(run.b2 - engine.b[:, 1]).max(),
            )
            checks.append(Check(f"oracle/{name}/N={N}", diff, TOLERANCES["oracle"]))
            checks.append(Check(f"oracle/{name}/N={N}/trace", np.abs(run.trace - 1).max(), TOLERANCES["trace"]))
        if len(cutoffs) > 1:
            lo, hi = runs[cutoffs[0]], runs[cutoffs[1]]
            conv = max(np.abs(lo.n11 - hi.n11).max(), np.abs(lo.n22 - hi.n22).max())
            checks.append(Check(
                f"oracle/{name}/convergence N={cutoffs[0]}->{cutoffs[1]}", conv, TOLERANCES["convergence"]
            ))
        if is_strictly_stable(p):
            purity = fock.steady_rho(p, cutoffs[-1]).purity
            checks.append(Check(f"oracle/{name}/steady purity", abs(purity - 1), TOLERANCES["purity"]))
    return checks


def require(checks: Sequence[Check]) -> None:
    failed = [c for c in checks if not c.passed]
    if failed:
        raise ToleranceExceeded("; ".join(c.line() for c in failed))
