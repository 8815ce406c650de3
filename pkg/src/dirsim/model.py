"""Parameters, coupling matrices and regime classification for two coupled resonators.

All rates are in the same frequency units; the intrinsic loss ``gamma`` sets the
scale and defaults to 1. Phases are kept exactly as given and compared modulo 2*pi.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import GammaExceedsLoss, NegativeMagnitude, NonPositiveLoss

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SystemParams:
    gamma: float = 1.0
    big_gamma: float = 0.0
    g: float = 0.0
    theta: float = 0.0
    phi: float = 0.0
    omega: float = 0.0
    omega_delta: float = 0.0

    @property
    def relative_phase(self) -> float:
        """theta - phi reduced to [0, 2*pi)."""
        return (self.theta - self.phi) % TWO_PI

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def validate(params: SystemParams) -> SystemParams:
    """Raise a :class:`ValidationError` subclass unless ``params`` is physical.

    Returns the params unchanged so calls can be chained.
    """
    for name, value in params.as_dict().items():
        if not math.isfinite(value):
            raise NegativeMagnitude(f"{name} must be finite, got {value!r}")
    if params.gamma <= 0:
        raise NonPositiveLoss(f"gamma must be > 0, got {params.gamma}")
    for name in ("big_gamma", "g", "omega"):
        if getattr(params, name) < 0:
            raise NegativeMagnitude(f"{name} must be >= 0, got {getattr(params, name)}")
    if params.big_gamma > params.gamma:
        raise GammaExceedsLoss(
            f"dissipative coupling {params.big_gamma} exceeds loss rate {params.gamma}"
        )
    return params


def damping_matrix(params: SystemParams) -> np.ndarray:
    """Hermitian rate matrix of the Lindblad terms; eigenvalues gamma +/- Gamma."""
    cross = params.big_gamma * np.exp(1j * params.phi)
    return np.array([[params.gamma, cross], [np.conj(cross), params.gamma]], dtype=complex)


def hamiltonian_matrix(params: SystemParams) -> np.ndarray:
    """Single-particle Hamiltonian; the drive enters separately as an affine term."""
    hop = params.g * np.exp(1j * params.theta)
    w = params.omega_delta
    return np.array([[w, hop], [np.conj(hop), w]], dtype=complex)


def dynamical_matrix(params: SystemParams) -> np.ndarray:
    """Non-Hermitian matrix M with i d<b>/dt = M <b> + drive."""
    return hamiltonian_matrix(params) - 0.5j * damping_matrix(params)


class GeneralizedCouplings(NamedTuple):
    g_plus: complex
    g_minus: complex


def generalized_couplings(params: SystemParams) -> GeneralizedCouplings:
    """G+- = g e^{i theta} +- (i/2) Gamma e^{i phi}.

    ``g_minus`` is the rightward entry M[0, 1] and ``conj(g_plus)`` the leftward
    entry M[1, 0] of :func:`dynamical_matrix`.
    """
    coherent = params.g * np.exp(1j * params.theta)
    dissipative = 0.5j * params.big_gamma * np.exp(1j * params.phi)
    return GeneralizedCouplings(complex(coherent + dissipative), complex(coherent - dissipative))


class Regime(enum.Enum):
    UNCOUPLED = "Uncoupled"
    COHERENT = "Coherent"
    DISSIPATIVE = "Dissipative"
    UNIDIRECTIONAL_RIGHT = "UnidirectionalRight"
    UNIDIRECTIONAL_LEFT = "UnidirectionalLeft"
    ASYMMETRIC = "Asymmetric"

    def __str__(self) -> str:
        return self.value


def classify_regime(params: SystemParams, tol: float = 1e-9) -> Regime:
    """Label the coupling regime, using ``tol`` relative to g + Gamma/2.

    For the one-way regimes a vanishing coupling is detected from the magnitude
    and phase conditions directly, so the result depends on the phases only
    modulo 2*pi.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    g, big_gamma = params.g, params.big_gamma
    scale = g + 0.5 * big_gamma
    if scale <= tol * params.gamma:
        return Regime.UNCOUPLED
    if big_gamma <= tol * scale:
        return Regime.COHERENT
    if g <= tol * scale:
        return Regime.DISSIPATIVE
    # |G-|^2 = g^2 + Gamma^2/4 - g Gamma sin(theta - phi); symmetric for G+.
    s = math.sin(params.theta - params.phi)
    magnitude_gap = (g - 0.5 * big_gamma) ** 2
    g_minus = math.sqrt(max(magnitude_gap + g * big_gamma * (1.0 - s), 0.0))
    g_plus = math.sqrt(max(magnitude_gap + g * big_gamma * (1.0 + s), 0.0))
    if g_minus <= tol * scale < g_plus:
        return Regime.UNIDIRECTIONAL_RIGHT
    if g_plus <= tol * scale < g_minus:
        return Regime.UNIDIRECTIONAL_LEFT
    return Regime.ASYMMETRIC


@dataclass(frozen=True)
class Eigenmodes:
    eigenvalues: tuple[complex, complex]
    degenerate: bool

    @property
    def max_imag(self) -> float:
        return max(ev.imag for ev in self.eigenvalues)

    @property
    def stable(self) -> bool:
        return self.max_imag < 0


def eigenmodes(m: np.ndarray, atol: float = 1e-12) -> Eigenmodes:
    """Eigenvalues (mean +/- sqrt(M01 M10)) of a 2x2 matrix M.

    ``degenerate`` flags an exceptional point. The test is on the discriminant,
    relative to the squared matrix scale, because rounding in M01 M10 splits
    a double eigenvalue by roughly sqrt(eps).
    """
    m = np.asarray(m, dtype=complex)
    mean = 0.5 * (m[0, 0] + m[1, 1])
    half_diff = 0.5 * (m[0, 0] - m[1, 1])
    disc = half_diff * half_diff + m[0, 1] * m[1, 0]
    root = np.sqrt(disc)
    scale = max(float(np.abs(m).max()), 1e-300)
    if abs(disc) < atol * scale * scale:
        # the split would be sqrt(rounding noise); report the double eigenvalue
        return Eigenmodes((complex(mean), complex(mean)), True)
    return Eigenmodes((complex(mean + root), complex(mean - root)), False)


def is_strictly_stable(params: SystemParams, rel_margin: float = 1e-12) -> bool:
    """Every eigenvalue decays faster than ``rel_margin * gamma``."""
    modes = eigenmodes(dynamical_matrix(params))
    return modes.max_imag < -rel_margin * params.gamma
