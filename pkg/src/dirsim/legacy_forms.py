"""Uncorrected variants of several closed forms.

Each one carries a known algebra slip (missing factor, wrong power or wrong
denominator). They are kept only so the regression suite can show that the
corrected versions agree with the moment engine while these do not.
"""
import numpy as np

from .closed_forms import phase_terms
from .model import GeneralizedCouplings, SystemParams


def generalized_couplings(params: SystemParams) -> GeneralizedCouplings:
    """G+- = g e^{i theta} +- (1/2) Gamma e^{i phi}, missing the factor i."""
    coherent = params.g * np.exp(1j * params.theta)
    dissipative = 0.5 * params.big_gamma * np.exp(1j * params.phi)
    return GeneralizedCouplings(complex(coherent + dissipative), complex(coherent - dissipative))


def coherent_dynamics(gamma, g, omega, t):
    """Coherent-regime populations with the slow cross terms left unnormalised."""
    t = np.asarray(t, dtype=float)
    q = gamma ** 2 + 4 * g ** 2
    a1 = (2 * gamma * omega / q) ** 2
    a2 = (4 * g * omega / q) ** 2
    slow = np.exp(-gamma * t / 2)
    fast = np.exp(-gamma * t) / (2 * q ** 2)
    base = q * (q + 4 * omega ** 2)
    osc = (q ** 2 + 4 * omega ** 2 * (gamma ** 2 - 4 * g ** 2)) * np.cos(2 * g * t)
    skew = 16 * g * gamma * omega ** 2 * np.sin(2 * g * t)
    n11 = a1 + 2 * a1 * (2 * g * np.sin(g * t) - gamma * np.cos(g * t)) * slow + (base + osc - skew) * fast
    n22 = a2 - a2 * (2 * g * np.cos(g * t) + gamma * np.sin(g * t)) * slow + (base - osc + skew) * fast
    return n11, n22


def ss_unidirectional_n1(gamma, omega):
    """(2 Omega / gamma^2)^2 -- wrong power of gamma."""
    return (2 * omega / gamma ** 2) ** 2


def unidirectional_dynamics(gamma, big_gamma, omega, t):
    """One-way populations with (4 Gamma Omega / gamma)^2 prefactors in n22."""
    t = np.asarray(t, dtype=float)
    x = gamma * t
    r1 = (2 * omega / gamma) ** 2
    r2 = (4 * big_gamma * omega / gamma) ** 2
    n11 = r1 - 2 * r1 * np.exp(-x / 2) + (1 + r1) * np.exp(-x)
    n22 = r2 - r2 * (2 + x) * np.exp(-x / 2) + (big_gamma / gamma) ** 2 * (x ** 2 + (2 + x) ** 2 * r1) * np.exp(-x)
    return n11, n22


def general_n2(gamma, big_gamma, g, rel_phase, omega):
    """4 Omega^2 S^2 / D -- transmitted weight squared."""
    s, d = phase_terms(gamma, big_gamma, g, rel_phase)
    return 4 * omega ** 2 * s ** 2 / d


def general_imbalance(gamma, big_gamma, g, rel_phase):
    """2 gamma^2 / D - 1 -- the population denominator in place of gamma^2 + S."""
    _, d = phase_terms(gamma, big_gamma, g, rel_phase)
    return 2 * gamma ** 2 / d - 1
