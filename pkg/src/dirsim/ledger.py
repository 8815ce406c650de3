"""Corrected closed forms against their uncorrected variants, both scored by the moment engine.

Each entry evaluates one expression on a grid that includes gamma != 1, since
several of the slips (a wrong power of gamma) vanish at gamma = 1. Errors are
relative to the largest population on the grid point or trajectory.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import closed_forms as cf
from . import legacy_forms as legacy
from .model import SystemParams, dynamical_matrix, generalized_couplings
from .moments import InitialCondition, evolve, steady_populations

SINGLE = InitialCondition.single_excitation_first()
GAMMAS = (0.5, 1.0, 1.7)
CORRECTED_TOL = 1e-10
PRINTED_MARGIN = 1e-3


@dataclass(frozen=True)
class LedgerEntry:
    name: str
    corrected: float
    printed: float

    @property
    def passed(self) -> bool:
        return self.corrected < CORRECTED_TOL and self.printed > PRINTED_MARGIN

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{verdict} {self.name}: corrected {self.corrected:.3e} (< {CORRECTED_TOL:g}), "
            f"uncorrected {self.printed:.3e} (> {PRINTED_MARGIN:g})"
        )


def _rel(a, b, ref) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))) / max(float(np.max(np.abs(ref))), 1e-300))


def couplings() -> LedgerEntry:
    """G- must be M01 and conj(G+) must be M10."""
    worst = {"corrected": 0.0, "printed": 0.0}
    for gamma, g, frac, theta, phi in itertools.product(GAMMAS, (0.2, 0.7), (0.3, 0.9), (0.0, 1.1, 4.0), (0.0, 2.5)):
        p = SystemParams(gamma=gamma, big_gamma=frac * gamma, g=g, theta=theta, phi=phi)
        m = dynamical_matrix(p)
        scale = g + p.big_gamma / 2
        for key, fn in (("corrected", generalized_couplings), ("printed", legacy.generalized_couplings)):
            gp, gm = fn(p)
            err = max(abs(gm - m[0, 1]), abs(np.conj(gp) - m[1, 0])) / scale
            worst[key] = max(worst[key], err)
    return LedgerEntry("coupling phase factor", worst["corrected"], worst["printed"])


def _dynamics_entry(name: str, grid, build: Callable, fixed: Callable, printed: Callable) -> LedgerEntry:
    worst_fixed = worst_printed = 0.0
    for point in grid:
        p = build(*point)
        traj = evolve(p, SINGLE, t_end=20 / p.gamma, dt=1e-3 / p.gamma, method="exact", max_samples=400)
        ref = np.concatenate([traj.n11, traj.n22])
        got = np.concatenate(fixed(p, traj.times))
        bad = np.concatenate(printed(p, traj.times))
        worst_fixed = max(worst_fixed, _rel(got, ref, ref))
        worst_printed = max(worst_printed, _rel(bad, ref, ref))
    return LedgerEntry(name, worst_fixed, worst_printed)


def coherent_dynamics() -> LedgerEntry:
    return _dynamics_entry(
        "coherent dynamics cross terms",
        itertools.product(GAMMAS, (0.25, 0.5, 2.0)),
        lambda gamma, rg: SystemParams(gamma=gamma, g=rg * gamma, omega=0.1 * gamma),
        lambda p, t: cf.coherent_dynamics(p.gamma, p.g, p.omega, t),
        lambda p, t: legacy.coherent_dynamics(p.gamma, p.g, p.omega, t),
    )


def _one_way(gamma, frac):
    big = frac * gamma
    return SystemParams(gamma=gamma, big_gamma=big, g=big / 2, theta=math.pi / 2, omega=0.1 * gamma)


def unidirectional_dynamics() -> LedgerEntry:
    return _dynamics_entry(
        "one-way dynamics prefactors",
        itertools.product(GAMMAS, (0.3, 0.8, 1.0)),
        _one_way,
        lambda p, t: cf.unidirectional_dynamics(p.gamma, p.big_gamma, p.omega, t),
        lambda p, t: legacy.unidirectional_dynamics(p.gamma, p.big_gamma, p.omega, t),
    )


def unidirectional_n1() -> LedgerEntry:
    fixed = printed = 0.0
    for gamma, frac in itertools.product(np.linspace(0.3, 3.0, 10), (0.2, 0.6, 1.0)):
        p = _one_way(float(gamma), frac)
        ref = steady_populations(p)
        total = ref.n1 + ref.n2
        fixed = max(fixed, abs(cf.ss_unidirectional(p.gamma, p.big_gamma, p.omega).n1 - ref.n1) / total)
        printed = max(printed, abs(legacy.ss_unidirectional_n1(p.gamma, p.omega) - ref.n1) / total)
    return LedgerEntry("one-way driven population", fixed, printed)


def _general_grid():
    for gamma, rg, rG, phase in itertools.product(
        GAMMAS, (0.1, 0.5, 1.5), (0.0, 0.4, 0.9), np.linspace(0, 2 * math.pi, 9)
    ):
        yield SystemParams(gamma=gamma, g=rg * gamma, big_gamma=rG * gamma, theta=float(phase), omega=0.1 * gamma)


def general_n2() -> LedgerEntry:
    fixed = printed = 0.0
    for p in _general_grid():
        ref = steady_populations(p)
        total = ref.n1 + ref.n2
        fixed = max(fixed, abs(cf.ss_general(p).n2 - ref.n2) / total)
        bad = legacy.general_n2(p.gamma, p.big_gamma, p.g, p.relative_phase, p.omega)
        printed = max(printed, abs(bad - ref.n2) / total)
    return LedgerEntry("phase-dependent second population", fixed, printed)


def general_imbalance() -> LedgerEntry:
    fixed = printed = 0.0
    for p in _general_grid():
        ref = steady_populations(p).delta
        fixed = max(fixed, abs(cf.general_imbalance(p.gamma, p.big_gamma, p.g, p.relative_phase) - ref))
        bad = legacy.general_imbalance(p.gamma, p.big_gamma, p.g, p.relative_phase)
        printed = max(printed, abs(bad - ref))
    return LedgerEntry("phase-dependent imbalance", fixed, printed)


ENTRIES = (couplings, coherent_dynamics, unidirectional_n1, unidirectional_dynamics, general_n2, general_imbalance)


def verify_all() -> list[LedgerEntry]:
    return [entry() for entry in ENTRIES]
