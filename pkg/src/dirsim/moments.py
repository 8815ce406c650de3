"""First- and second-moment dynamics of the driven pair, plus steady-state solves.

The state is the mean field ``b = (<b1>, <b2>)`` and the normally ordered
correlation matrix ``n[m, k] = <b_m^dag b_k>``. Both obey closed linear equations
because the master equation is quadratic with linear jump operators.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BothEmpty, MarginallyStable
from .model import SystemParams, dynamical_matrix, eigenmodes, validate

E1 = np.array([1.0, 0.0], dtype=complex)
STABILITY_MARGIN = 1e-12
EP_TOL = 1e-12
MAX_SAMPLES = 2000


@dataclass(frozen=True)
class MomentState:
    b: np.ndarray
    n: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "b", np.asarray(self.b, dtype=complex).reshape(2))
        object.__setattr__(self, "n", np.asarray(self.n, dtype=complex).reshape(2, 2))

    @property
    def fluctuation(self) -> np.ndarray:
        """n - outer(conj(b), b); zero for a coherent state."""
        return self.n - np.outer(self.b.conj(), self.b)


@dataclass(frozen=True)
class InitialCondition:
    kind: str = "vacuum"
    amplitudes: tuple[complex, complex] = (0j, 0j)

    KINDS = ("vacuum", "single_excitation_first", "coherent")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown initial condition {self.kind!r}; expected one of {self.KINDS}")

    @classmethod
    def vacuum(cls) -> "InitialCondition":
        return cls("vacuum")

    @classmethod
    def single_excitation_first(cls) -> "InitialCondition":
        return cls("single_excitation_first")

    @classmethod
    def coherent(cls, alpha1: complex, alpha2: complex) -> "InitialCondition":
        return cls("coherent", (complex(alpha1), complex(alpha2)))

    def state(self) -> MomentState:
        if self.kind == "vacuum":
            return MomentState(np.zeros(2), np.zeros((2, 2)))
        if self.kind == "single_excitation_first":
            return MomentState(np.zeros(2), np.diag([1.0, 0.0]))
        b = np.array(self.amplitudes, dtype=complex)
        return MomentState(b, np.outer(b.conj(), b))


def moment_rhs(params: SystemParams, s: MomentState) -> MomentState:
    """Time derivative of (b, n).

    db/dt = -i M b - i Omega e1
    dn/dt = i (conj(M) n - n M^T) + i Omega (e1 b^T - conj(b) e1^T)
    """
    m = dynamical_matrix(params)
    omega = params.omega
    db = -1j * (m @ s.b) - 1j * omega * E1
    drive = np.outer(E1, s.b) - np.outer(s.b.conj(), E1)
    dn = 1j * (m.conj() @ s.n - s.n @ m.T) + 1j * omega * drive
    return MomentState(db, dn)


@dataclass(frozen=True)
class SteadyResult:
    n1: float
    n2: float
    delta: Optional[float]

    def scaled(self, factor: float) -> "SteadyResult":
        return SteadyResult(self.n1 * factor, self.n2 * factor, self.delta)


def imbalance(n11: float, n22: float) -> float:
    """(n11 - n22) / (n11 + n22)."""
    total = n11 + n22
    if total == 0:
        raise BothEmpty("imbalance undefined for two empty resonators")
    return (n11 - n22) / total


def _imbalance_or_none(n11: float, n22: float) -> Optional[float]:
    try:
        return imbalance(n11, n22)
    except BothEmpty:
        return None


def require_strict_stability(params: SystemParams) -> None:
    modes = eigenmodes(dynamical_matrix(params))
    if modes.max_imag >= -STABILITY_MARGIN * params.gamma:
        raise MarginallyStable(
            f"eigenvalues {modes.eigenvalues} do not all decay; no steady state"
        )


def steady_first_moments(params: SystemParams) -> np.ndarray:
    """Solve M b = -Omega e1."""
    validate(params)
    require_strict_stability(params)
    return np.linalg.solve(dynamical_matrix(params), -params.omega * E1)


def steady_populations(params: SystemParams) -> SteadyResult:
    """Steady populations; the steady state is the coherent state with amplitude b_ss."""
    b = steady_first_moments(params)
    n11, n22 = float(abs(b[0]) ** 2), float(abs(b[1]) ** 2)
    return SteadyResult(n11, n22, _imbalance_or_none(n11, n22))


def steady_second_moments(params: SystemParams) -> np.ndarray:
    """Steady n from a direct linear solve of dn/dt = 0 with b = b_ss substituted.

    Independent of the coherent-state argument used by :func:`steady_populations`.
    """
    b = steady_first_moments(params)
    m = dynamical_matrix(params)
    eye = np.eye(2)
    # vec(A n B) = (A kron B^T) vec(n) for row-major vec
    op = 1j * (np.kron(m.conj(), eye) - np.kron(eye, m))
    drive = 1j * params.omega * (np.outer(E1, b) - np.outer(b.conj(), E1))
    return np.linalg.solve(op, -drive.reshape(4)).reshape(2, 2)


def matrix_function(m: np.ndarray, f, fprime, atol: float = EP_TOL) -> np.ndarray:
    """f(M) for a 2x2 matrix via Sylvester's formula; Jordan form when degenerate.

    At a degenerate eigenvalue lam, f(M) = f(lam) I + f'(lam) (M - lam I), which is
    exact for a 2x2 Jordan block and for a multiple of the identity alike.
    """
    modes = eigenmodes(m)
    l1, l2 = modes.eigenvalues
    eye = np.eye(2, dtype=complex)
    # branch on the computed split, not the discriminant flag, so Sylvester stays in use near an EP
    if abs(l1 - l2) < atol:
        lam = 0.5 * (m[0, 0] + m[1, 1])
        return f(lam) * eye + fprime(lam) * (m - lam * eye)
    return (f(l1) * (m - l2 * eye) - f(l2) * (m - l1 * eye)) / (l1 - l2)


def _sinc(x):
    """sin(x)/x for complex x."""
    if abs(x) < 1e-4:
        return 1 - x * x / 6 + x ** 4 / 120
    return np.sin(x) / x


def propagator(m: np.ndarray, t: float) -> np.ndarray:
    """U(t) = exp(-i M t) = e^{-i mu t} [cos(s t) I - i t sinc(s t) (M - mu I)].

    mu is the mean eigenvalue and s the half-splitting of the eigenvalues; cos
    and sinc are even in s, so the branch of the square root never matters. At an exceptional
    point (s = 0) this is the Jordan-form result e^{-i mu t}(I - i t N).
    """
    m = np.asarray(m, dtype=complex)
    mu = 0.5 * (m[0, 0] + m[1, 1])
    half_diff = 0.5 * (m[0, 0] - m[1, 1])
    s = np.sqrt(half_diff * half_diff + m[0, 1] * m[1, 0])
    eye = np.eye(2, dtype=complex)
    if abs(s) < EP_TOL:
        nil = m - mu * eye
        return np.exp(-1j * mu * t) * (eye - 1j * t * nil)
    return np.exp(-1j * mu * t) * (np.cos(s * t) * eye - 1j * t * _sinc(s * t) * (m - mu * eye))


def _phi1(z: complex, t: float) -> complex:
    """integral_0^t exp(-i z s) ds, stable near z = 0."""
    x = -1j * z * t
    if abs(x) < 1e-5:
        return t * (1 + x / 2 + x * x / 6 + x ** 3 / 24)
    return t * np.expm1(x) / x


def _phi1_prime(z: complex, t: float) -> complex:
    """d/dz of :func:`_phi1`."""
    x = -1j * z * t
    if abs(x) < 1e-4:
        # d/dz = -i t * t (1/2 + x/3 + x^2/8 + x^3/30)
        return -1j * t * t * (0.5 + x / 3 + x * x / 8 + x ** 3 / 30)
    # integral of (-i s) exp(-i z s)
    return -1j * t * t * (np.exp(x) * (x - 1) + 1) / (x * x)


def integrated_propagator(m: np.ndarray, t: float) -> np.ndarray:
    """W(t) = integral_0^t exp(-i M s) ds; finite even when M is singular."""
    return matrix_function(m, lambda lam: _phi1(lam, t), lambda lam: _phi1_prime(lam, t))


@dataclass
class Trajectory:
    times: np.ndarray
    b: np.ndarray
    n: np.ndarray
    params: Optional[SystemParams] = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.times) != len(self.b) or len(self.times) != len(self.n):
            raise ValueError("times, b and n must have equal length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, i: int) -> MomentState:
        return MomentState(self.b[i], self.n[i])

    @property
    def n11(self) -> np.ndarray:
        return self.n[:, 0, 0].real

    @property
    def n22(self) -> np.ndarray:
        return self.n[:, 1, 1].real

    @property
    def populations(self) -> tuple[np.ndarray, np.ndarray]:
        return self.n11, self.n22

    @property
    def imbalance(self) -> np.ndarray:
        """Delta(t); NaN where both populations vanish."""
        total = self.n11 + self.n22
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(total > 0, (self.n11 - self.n22) / total, np.nan)

    @property
    def fluctuation(self) -> np.ndarray:
        return self.n - np.einsum("ti,tj->tij", self.b.conj(), self.b)


def output_stride(n_steps: int, max_samples: int = MAX_SAMPLES) -> int:
    return max(1, n_steps // max_samples)


def _pack(s: MomentState) -> np.ndarray:
    z = np.concatenate([s.b, s.n.reshape(4)])
    return np.concatenate([z.real, z.imag])


def _unpack(y: np.ndarray) -> MomentState:
    z = y[:6] + 1j * y[6:]
    return MomentState(z[:2], z[2:].reshape(2, 2))


def _affine_generator(params: SystemParams) -> tuple[np.ndarray, np.ndarray]:
    """Real 12x12 matrix A and offset c with moment_rhs(y) == A y + c.

    The rhs is only real-linear (the drive couples n to conj(b)), hence the real
    packing. Columns are read off by probing ``moment_rhs`` on unit vectors.
    """
    zero = np.zeros(12)
    c = _pack(moment_rhs(params, _unpack(zero)))
    a = np.empty((12, 12))
    for j in range(12):
        unit = zero.copy()
        unit[j] = 1.0
        a[:, j] = _pack(moment_rhs(params, _unpack(unit))) - c
    return a, c


def rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _n_steps(t_end: float, dt: float) -> int:
    if t_end <= 0 or dt <= 0:
        raise ValueError("t_end and dt must be positive")
    n = int(round(t_end / dt))
    if not math.isclose(n * dt, t_end, rel_tol=1e-9):
        raise ValueError(f"t_end={t_end} is not an integer multiple of dt={dt}")
    return n


def evolve(
    params: SystemParams,
    init: InitialCondition = InitialCondition.single_excitation_first(),
    t_end: float = 20.0,
    dt: float = 1e-3,
    method: str = "rk4",
    max_samples: int = MAX_SAMPLES,
) -> Trajectory:
    """Integrate the moment equations from ``init`` up to ``t_end``.

    ``method`` is ``"rk4"`` (fixed-step classical Runge-Kutta) or ``"exact"``
    (matrix-exponential propagation evaluated at the sample times). Samples are
    taken every ``max(1, steps // max_samples)`` steps, always including t=0.
    """
    validate(params)
    n_steps = _n_steps(t_end, dt)
    stride = output_stride(n_steps, max_samples)
    m = dynamical_matrix(params)
    spread = max(abs(ev) for ev in eigenmodes(m).eigenvalues)
    if dt * spread > 0.1:
        warnings.warn(f"dt*max|lambda| = {dt * spread:.3g} > 0.1; step too large", RuntimeWarning)
    sample_steps = np.arange(0, n_steps + 1, stride)
    times = sample_steps * dt
    s0 = init.state()

    if method == "exact":
        bs, ns = _evolve_exact(params, s0, times)
    elif method == "rk4":
        bs, ns = _evolve_rk4(params, s0, n_steps, dt, stride, len(times))
    else:
        raise ValueError(f"unknown method {method!r}; use 'rk4' or 'exact'")
    return Trajectory(times, bs, ns, params)


def _evolve_rk4(params, s0, n_steps, dt, stride, n_samples):
    a, c = _affine_generator(params)

    def f(y):
        return a @ y + c

    y = _pack(s0)
    out = np.empty((n_samples, 12))
    out[0] = y
    k = 1
    for step in range(1, n_steps + 1):
        y = rk4_step(f, y, dt)
        if step % stride == 0:
            out[k] = y
            k += 1
    z = out[:, :6] + 1j * out[:, 6:]
    return z[:, :2], z[:, 2:].reshape(-1, 2, 2)


def _evolve_exact(params, s0, times):
    m = dynamical_matrix(params)
    fluct0 = s0.fluctuation
    singular = abs(np.linalg.det(m)) < 1e-10 * params.gamma ** 2
    if not singular:
        b_ss = np.linalg.solve(m, -params.omega * E1)
    bs = np.empty((len(times), 2), dtype=complex)
    ns = np.empty((len(times), 2, 2), dtype=complex)
    for i, t in enumerate(times):
        u = propagator(m, t)
        if singular:
            # no fixed point: integrate the drive directly
            b = u @ s0.b - 1j * params.omega * (integrated_propagator(m, t) @ E1)
        else:
            b = u @ (s0.b - b_ss) + b_ss
        bs[i] = b
        ns[i] = np.outer(b.conj(), b) + u.conj() @ fluct0 @ u.T
    return bs, ns
