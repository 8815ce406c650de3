"""Analytic steady states and population dynamics for the resonant (zero detuning) pair.

Regime-specific expressions assume the first resonator starts with one
excitation and the second is empty (``InitialCondition.single_excitation_first``).
:func:`dyn_closed_form` covers any Gaussian initial condition and any coupling.
"""
from __future__ import annotations

import numpy as np

from .errors import DetuningUnsupported, DivergentSteadyState, MarginallyStable
from .model import SystemParams, generalized_couplings, validate
from .moments import InitialCondition, SteadyResult, require_strict_stability


def _require_resonant(params: SystemParams) -> None:
    if params.omega_delta != 0:
        raise DetuningUnsupported(
            f"closed forms hold only at zero detuning, got omega_delta={params.omega_delta}"
        )


def _result(n1, n2, delta) -> SteadyResult:
    # imbalance is undefined, not zero, when nothing is populated
    return SteadyResult(n1, n2, delta if n1 + n2 > 0 else None)


def ss_coherent(gamma: float, g: float, omega: float) -> SteadyResult:
    denom = gamma ** 2 + 4 * g ** 2
    n1 = (2 * gamma * omega / denom) ** 2
    n2 = (4 * g * omega / denom) ** 2
    return _result(n1, n2, 1 - 8 * g ** 2 / denom)


def ss_dissipative(gamma: float, big_gamma: float, omega: float) -> SteadyResult:
    if big_gamma >= gamma:
        raise DivergentSteadyState(f"populations diverge for Gamma={big_gamma} >= gamma={gamma}")
    denom = gamma ** 2 - big_gamma ** 2
    n1 = (2 * gamma * omega / denom) ** 2
    n2 = (2 * big_gamma * omega / denom) ** 2
    return _result(n1, n2, 1 - 2 * big_gamma ** 2 / (big_gamma ** 2 + gamma ** 2))


def ss_unidirectional(gamma: float, big_gamma: float, omega: float) -> SteadyResult:
    """Rightward one-way coupling (g = Gamma/2, theta - phi = pi/2).

    The first resonator is blind to the second, so n1 is the single-resonator value.
    """
    n1 = (2 * omega / gamma) ** 2
    n2 = (4 * big_gamma * omega / gamma ** 2) ** 2
    return _result(n1, n2, 1 - 8 * big_gamma ** 2 / (gamma ** 2 + 4 * big_gamma ** 2))


def phase_terms(gamma, big_gamma, g, rel_phase):
    """Return (S, D) for the phase-dependent steady state.

    S = 4g^2 + Gamma^2 + 4 g Gamma sin(rel_phase) sets the transmitted weight;
    D = 16g^4 + 8g^2 gamma^2 + (gamma^2 - Gamma^2)^2 + 8 g^2 Gamma^2 cos(2 rel_phase).
    Vectorised over all arguments.
    """
    s = 4 * g ** 2 + big_gamma ** 2 + 4 * g * big_gamma * np.sin(rel_phase)
    d = (
        16 * g ** 4
        + 8 * g ** 2 * gamma ** 2
        + (gamma ** 2 - big_gamma ** 2) ** 2
        + 8 * g ** 2 * big_gamma ** 2 * np.cos(2 * rel_phase)
    )
    return s, d


def general_imbalance(gamma, big_gamma, g, rel_phase):
    """Steady imbalance (gamma^2 - S)/(gamma^2 + S); vectorised, no stability check."""
    s, _ = phase_terms(gamma, big_gamma, g, rel_phase)
    return 2 * gamma ** 2 / (gamma ** 2 + s) - 1


def ss_general(params: SystemParams) -> SteadyResult:
    """Steady state for arbitrary coupling magnitudes and phases at zero detuning."""
    validate(params)
    _require_resonant(params)
    require_strict_stability(params)
    gamma, omega = params.gamma, params.omega
    s, d = phase_terms(gamma, params.big_gamma, params.g, params.theta - params.phi)
    n1 = 4 * gamma ** 2 * omega ** 2 / d
    n2 = 4 * omega ** 2 * s / d
    delta = general_imbalance(gamma, params.big_gamma, params.g, params.theta - params.phi)
    # S can dip to ~-1e-16 at the leftward point
    n2 = max(float(n2), 0.0)
    return SteadyResult(float(n1), n2, float(delta) if n1 + n2 > 0 else None)


# --- dynamics ---------------------------------------------------------------

def coherent_dynamics(gamma: float, g: float, omega: float, t):
    """(n11, n22)(t) for purely coherent coupling, from one excitation in resonator 1."""
    t = np.asarray(t, dtype=float)
    q = gamma ** 2 + 4 * g ** 2
    a1 = (2 * gamma * omega / q) ** 2
    a2 = (4 * g * omega / q) ** 2
    slow = np.exp(-gamma * t / 2) / gamma
    fast = np.exp(-gamma * t) / (2 * q ** 2)
    base = q * (q + 4 * omega ** 2)
    osc = (q ** 2 + 4 * omega ** 2 * (gamma ** 2 - 4 * g ** 2)) * np.cos(2 * g * t)
    skew = 16 * g * gamma * omega ** 2 * np.sin(2 * g * t)
    n11 = (
        a1
        + 2 * a1 * (2 * g * np.sin(g * t) - gamma * np.cos(g * t)) * slow
        + (base + osc - skew) * fast
    )
    # cross term of |<b2>|^2 carries 1/g, not 1/gamma; a2/g stays finite as g -> 0
    n22 = (
        a2
        - 16 * g * omega ** 2 / q ** 2 * (2 * g * np.cos(g * t) + gamma * np.sin(g * t)) * np.exp(-gamma * t / 2)
        + (base - osc + skew) * fast
    )
    return n11, n22


def dissipative_dynamics(gamma: float, big_gamma: float, omega: float, t):
    """(n11, n22)(t) for purely dissipative coupling (Gamma < gamma)."""
    if big_gamma >= gamma:
        raise DivergentSteadyState(f"Gamma={big_gamma} >= gamma={gamma}")
    t = np.asarray(t, dtype=float)
    gp, gm = gamma + big_gamma, gamma - big_gamma
    q = gamma ** 2 - big_gamma ** 2
    decay = np.exp(-gamma * t) / 2
    tails = omega ** 2 * (np.exp(-gp * t) / gp ** 2 + np.exp(-gm * t) / gm ** 2)
    half_p = np.exp(-gp * t / 2) / gp
    half_m = np.exp(-gm * t / 2) / gm
    ch = np.cosh(big_gamma * t)
    n11 = (
        (2 * gamma * omega / q) ** 2
        + (ch + 1 + 4 * omega ** 2 / q) * decay
        + tails
        - 4 * gamma * omega ** 2 / q * (half_p + half_m)
    )
    n22 = (
        (2 * big_gamma * omega / q) ** 2
        + (ch - 1 - 4 * omega ** 2 / q) * decay
        + tails
        + 4 * big_gamma * omega ** 2 / q * (half_p - half_m)
    )
    return n11, n22


def unidirectional_dynamics(gamma: float, big_gamma: float, omega: float, t):
    """(n11, n22)(t) for rightward one-way coupling; n11 is the lone-resonator result."""
    t = np.asarray(t, dtype=float)
    x = gamma * t
    r1 = (2 * omega / gamma) ** 2
    r2 = (4 * big_gamma * omega / gamma ** 2) ** 2
    n11 = r1 - 2 * r1 * np.exp(-x / 2) + (1 + r1) * np.exp(-x)
    n22 = (
        r2
        - r2 * (2 + x) * np.exp(-x / 2)
        + (big_gamma / gamma) ** 2 * (x ** 2 + (2 + x) ** 2 * r1) * np.exp(-x)
    )
    return n11, n22


def _sinc(x):
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    return np.where(small, 1 - x * x / 6, np.sin(safe) / safe)


def dyn_closed_form(
    params: SystemParams,
    init: InitialCondition = InitialCondition.single_excitation_first(),
    t=0.0,
):
    """Exact (n11, n22)(t) at zero detuning for any coupling and Gaussian start.

    With mu = -i gamma/2 and s^2 = G- conj(G+), the propagator is
    exp(-iMt) = e^{-i mu t} [cos(st) I - i t sinc(st) [[0, G-], [conj(G+), 0]]],
    and n(t) = outer(conj(b), b) + conj(U) n_fluct(0) U^T.
    """
    validate(params)
    _require_resonant(params)
    t = np.asarray(t, dtype=float)
    g_plus, g_minus = generalized_couplings(params)
    left = np.conj(g_plus)
    mu = -0.5j * params.gamma
    root = np.sqrt(complex(g_minus * left))

    envelope = np.exp(-1j * mu * t)
    diag = envelope * np.cos(root * t)
    shift = -1j * t * envelope * _sinc(root * t)
    u11 = u22 = diag
    u12 = shift * g_minus
    u21 = shift * left

    det = mu * mu - g_minus * left
    if abs(det) < 1e-14 * params.gamma ** 2:
        raise MarginallyStable("dynamical matrix is singular; no fixed point for the mean field")
    scale = -params.omega / det
    ss1, ss2 = scale * mu, -scale * left

    s0 = init.state()
    c1, c2 = s0.b[0] - ss1, s0.b[1] - ss2
    b1 = u11 * c1 + u12 * c2 + ss1
    b2 = u21 * c1 + u22 * c2 + ss2
    f = s0.fluctuation

    def quad(ua, ub):
        return (
            np.conj(ua) * f[0, 0] * ua
            + np.conj(ua) * f[0, 1] * ub
            + np.conj(ub) * f[1, 0] * ua
            + np.conj(ub) * f[1, 1] * ub
        ).real

    n11 = np.abs(b1) ** 2 + quad(u11, u12)
    n22 = np.abs(b2) ** 2 + quad(u21, u22)
    return n11, n22


__all__ = [
    "SteadyResult",
    "ss_coherent",
    "ss_dissipative",
    "ss_unidirectional",
    "ss_general",
    "general_imbalance",
    "phase_terms",
    "coherent_dynamics",
    "dissipative_dynamics",
    "unidirectional_dynamics",
    "dyn_closed_form",
]
