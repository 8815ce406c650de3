"""Brute-force density-matrix evolution in a truncated two-mode Fock space.

This is the independent check on the moment equations: it never uses them, only
the Hamiltonian and Lindblad terms. Basis index is ``n1 * (N + 1) + n2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import CutoffTooSmall, TraceDrift
from .model import SystemParams, damping_matrix, dynamical_matrix, validate
from .moments import InitialCondition, output_stride, require_strict_stability, _n_steps

TRACE_TOL = 1e-6


@dataclass(frozen=True)
class FockDensityMatrix:
    cutoff: int
    rho: np.ndarray

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** 2

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(op @ self.rho))

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    @property
    def purity(self) -> float:
        return float(np.vdot(self.rho, self.rho).real)

    def populations(self) -> tuple[float, float]:
        b1, b2 = mode_operators(self.cutoff)
        return (self.expect(b1.conj().T @ b1).real, self.expect(b2.conj().T @ b2).real)

    def boundary_weight(self) -> float:
        """Largest occupation of any basis state with n1 = N or n2 = N."""
        d = self.cutoff + 1
        p = self.rho.diagonal().real.reshape(d, d)
        return float(max(p[-1, :].max(), p[:, -1].max()))


def lowering(N: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, N + 1, dtype=float)), 1).astype(complex)


def mode_operators(N: int) -> tuple[np.ndarray, np.ndarray]:
    """b1 = a (x) I and b2 = I (x) a on the (N+1)^2 dimensional space."""
    if N < 1:
        raise ValueError("cutoff must be >= 1")
    a = lowering(N)
    eye = np.eye(N + 1)
    return np.kron(a, eye), np.kron(eye, a)


def hamiltonian(params: SystemParams, N: int) -> np.ndarray:
    b1, b2 = mode_operators(N)
    b1d, b2d = b1.conj().T, b2.conj().T
    hop = params.g * np.exp(1j * params.theta)
    return (
        params.omega_delta * (b1d @ b1 + b2d @ b2)
        + params.omega * (b1d + b1)
        + hop * b1d @ b2
        + np.conj(hop) * b2d @ b1
    )


def basis_projector(N: int, n1: int, n2: int) -> np.ndarray:
    """|n1, n2><n1, n2| with index n1 (N + 1) + n2."""
    ket = np.zeros((N + 1) ** 2, dtype=complex)
    ket[n1 * (N + 1) + n2] = 1.0
    return np.outer(ket, ket.conj())


def initial_rho(init: InitialCondition, N: int) -> np.ndarray:
    if init.kind == "vacuum":
        return basis_projector(N, 0, 0)
    if init.kind == "single_excitation_first":
        return basis_projector(N, 1, 0)
    raise ValueError(f"oracle supports vacuum and single_excitation_first, not {init.kind!r}")


def _dissipator(jump_left, jump_right, rho):
    """2 L rho R^dag - R^dag L rho - rho R^dag L, for jump pair (L, R)."""
    rd = jump_right.conj().T
    return 2 * jump_left @ rho @ rd - rd @ jump_left @ rho - rho @ rd @ jump_left


def lindblad_rhs(params: SystemParams, rho: np.ndarray, N: int | None = None) -> np.ndarray:
    """d rho / dt written term by term as operator products."""
    rho = np.asarray(rho, dtype=complex)
    if N is None:
        N = math.isqrt(rho.shape[0]) - 1
    b1, b2 = mode_operators(N)
    h = hamiltonian(params, N)
    cross = params.big_gamma * np.exp(1j * params.phi)
    return (
        1j * (rho @ h - h @ rho)
        + 0.5 * params.gamma * (_dissipator(b1, b1, rho) + _dissipator(b2, b2, rho))
        + 0.5 * cross * _dissipator(b2, b1, rho)
        + 0.5 * np.conj(cross) * _dissipator(b1, b2, rho)
    )


# --- fast stepping ----------------------------------------------------------
#
# With M the single-particle dynamical matrix and kappa the damping matrix,
#   d rho/dt = -i (K rho - rho K^dag) + sum_mk kappa_mk b_k rho b_m^dag,
#   K = sum_mk M_mk b_m^dag b_k + Omega (b1 + b1^dag).
# K has at most five entries per row and every b_k is a weighted index shift, so
# one evaluation costs O(D^2) instead of the O(D^3) of dense products.


def _sparse_rows(op: np.ndarray, width: int = 5):
    D = op.shape[0]
    idx = np.zeros((D, width), dtype=np.int64)
    val = np.zeros((D, width), dtype=complex)
    nnz = np.zeros(D, dtype=np.int64)
    for a in range(D):
        cols = np.flatnonzero(op[a])
        if len(cols) > width:
            raise ValueError("operator row too dense")
        nnz[a] = len(cols)
        idx[a, : len(cols)] = cols
        val[a, : len(cols)] = op[a, cols]
    return idx, val, nnz


def _shift_tables(N: int):
    """src[k, a] = index of the state |a + e_k> (or -1) and its weight sqrt(a_k + 1)."""
    d = N + 1
    D = d * d
    src = -np.ones((2, D), dtype=np.int64)
    wt = np.zeros((2, D))
    for n1 in range(d):
        for n2 in range(d):
            a = n1 * d + n2
            if n1 < N:
                src[0, a], wt[0, a] = a + d, math.sqrt(n1 + 1)
            if n2 < N:
                src[1, a], wt[1, a] = a + 1, math.sqrt(n2 + 1)
    return src, wt


@numba.njit(cache=True, fastmath=True)
def _rhs_kernel(rho, kidx, kval, knnz, kappa, src, wt, out):
    D = rho.shape[0]
    for a in range(D):
        for c in range(D):
            out[a, c] = 0j
        # -i K rho
        for t in range(knnz[a]):
            j = kidx[a, t]
            v = -1j * kval[a, t]
            for c in range(D):
                out[a, c] += v * rho[j, c]
        # +i rho K^dag
        for c in range(D):
            acc = 0j
            for t in range(knnz[c]):
                acc += np.conj(kval[c, t]) * rho[a, kidx[c, t]]
            out[a, c] += 1j * acc
    # sum_mk kappa[m, k] b_k rho b_m^dag
    for k in range(2):
        for m in range(2):
            coef = kappa[m, k]
            if coef == 0:
                continue
            for a in range(D):
                sa = src[k, a]
                if sa < 0:
                    continue
                wa = coef * wt[k, a]
                for c in range(D):
                    sc = src[m, c]
                    if sc >= 0:
                        out[a, c] += wa * wt[m, c] * rho[sa, sc]


@numba.njit(cache=True, fastmath=True)
def _axpy(out, x, h, k):
    D = x.shape[0]
    for a in range(D):
        for c in range(D):
            out[a, c] = x[a, c] + h * k[a, c]


@numba.njit(cache=True, fastmath=True)
def _rk4_run(rho, kidx, kval, knnz, kappa, src, wt, sq, h, n_steps, stride, obs_out):
    """RK4 with re-symmetrisation; writes observables every ``stride`` steps."""
    D = rho.shape[0]
    k1 = np.empty_like(rho)
    k2 = np.empty_like(rho)
    k3 = np.empty_like(rho)
    k4 = np.empty_like(rho)
    tmp = np.empty_like(rho)
    _observe(rho, sq, obs_out, 0)
    k = 1
    for step in range(1, n_steps + 1):
        _rhs_kernel(rho, kidx, kval, knnz, kappa, src, wt, k1)
        _axpy(tmp, rho, 0.5 * h, k1)
        _rhs_kernel(tmp, kidx, kval, knnz, kappa, src, wt, k2)
        _axpy(tmp, rho, 0.5 * h, k2)
        _rhs_kernel(tmp, kidx, kval, knnz, kappa, src, wt, k3)
        _axpy(tmp, rho, h, k3)
        _rhs_kernel(tmp, kidx, kval, knnz, kappa, src, wt, k4)
        for a in range(D):
            for c in range(D):
                rho[a, c] += (h / 6.0) * (k1[a, c] + 2.0 * k2[a, c] + 2.0 * k3[a, c] + k4[a, c])
        # rho <- (rho + rho^dag) / 2
        for a in range(D):
            rho[a, a] = rho[a, a].real
            for c in range(a + 1, D):
                v = 0.5 * (rho[a, c] + np.conj(rho[c, a]))
                rho[a, c] = v
                rho[c, a] = np.conj(v)
        if step % stride == 0:
            _observe(rho, sq, obs_out, k)
            k += 1
    return rho


@numba.njit(cache=True, fastmath=True)
def _observe(rho, sq, obs, k):
    """obs[k] = (<b1>, <b2>, n11, n22, <b1^dag b2>, trace, purity, max |rho - rho^dag|)."""
    D = rho.shape[0]
    d = sq.shape[0] - 1
    b1 = 0j
    b2 = 0j
    n11 = 0j
    n22 = 0j
    n12 = 0j
    tr = 0j
    pur = 0.0
    herm = 0.0
    for a1 in range(d):
        for a2 in range(d):
            a = a1 * d + a2
            p = rho[a, a]
            tr += p
            n11 += a1 * p
            n22 += a2 * p
            # tr(O rho) = sum <a|O|c> rho[c, a]
            if a1 < d - 1:
                b1 += sq[a1 + 1] * rho[a + d, a]
            if a2 < d - 1:
                b2 += sq[a2 + 1] * rho[a + 1, a]
            if a1 > 0 and a2 < d - 1:
                n12 += sq[a1] * sq[a2 + 1] * rho[a - d + 1, a]
    for a in range(D):
        for c in range(D):
            v = rho[a, c]
            pur += v.real * v.real + v.imag * v.imag
            diff = abs(v - np.conj(rho[c, a]))
            if diff > herm:
                herm = diff
    obs[k, 0] = b1
    obs[k, 1] = b2
    obs[k, 2] = n11
    obs[k, 3] = n22
    obs[k, 4] = n12
    obs[k, 5] = tr
    obs[k, 6] = pur
    obs[k, 7] = herm


class _Stepper:
    """Precomputed sparse data for one (params, N) pair."""

    def __init__(self, params: SystemParams, N: int):
        b1, b2 = mode_operators(N)
        m = dynamical_matrix(params)
        ops = (b1, b2)
        k_op = params.omega * (b1 + b1.conj().T)
        for i in range(2):
            for j in range(2):
                k_op = k_op + m[i, j] * ops[i].conj().T @ ops[j]
        self.kidx, self.kval, self.knnz = _sparse_rows(k_op)
        self.kappa = damping_matrix(params)
        self.src, self.wt = _shift_tables(N)
        self.sq = np.sqrt(np.arange(N + 2, dtype=float))

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        out = np.empty_like(rho)
        _rhs_kernel(rho, self.kidx, self.kval, self.knnz, self.kappa, self.src, self.wt, out)
        return out

    def run(self, rho, h, n_steps, stride, obs):
        return _rk4_run(
            rho, self.kidx, self.kval, self.knnz, self.kappa, self.src, self.wt,
            self.sq, h, n_steps, stride, obs,
        )


def fast_rhs(params: SystemParams, rho: np.ndarray) -> np.ndarray:
    """Sparse evaluation of d rho/dt; must equal :func:`lindblad_rhs`."""
    rho = np.ascontiguousarray(rho, dtype=complex)
    N = math.isqrt(rho.shape[0]) - 1
    return _Stepper(params, N).rhs(rho)


@dataclass
class FockTrajectory:
    times: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    n11: np.ndarray
    n22: np.ndarray
    n12: np.ndarray
    trace: np.ndarray
    purity: np.ndarray
    hermiticity: np.ndarray
    final: FockDensityMatrix


def evolve_rho(
    params: SystemParams,
    init: InitialCondition = InitialCondition.single_excitation_first(),
    N: int = 6,
    t_end: float = 20.0,
    dt: float = 1e-3,
    max_samples: int = 2000,
) -> FockTrajectory:
    """RK4-integrate the master equation; observables sampled like :func:`moments.evolve`."""
    validate(params)
    n_steps = _n_steps(t_end, dt)
    stride = output_stride(n_steps, max_samples)
    n_samples = n_steps // stride + 1
    rho = initial_rho(init, N)
    obs = np.zeros((n_samples, 8), dtype=complex)
    rho = _Stepper(params, N).run(rho, dt, n_steps, stride, obs)
    trace = obs[:, 5].real
    drift = np.abs(trace - 1).max()
    # NaN from an overflowing step must also count as drift
    if not drift <= TRACE_TOL:
        raise TraceDrift(f"trace drifted by {drift:.3g}; reduce dt or raise the cutoff")
    return FockTrajectory(
        times=np.arange(n_samples) * stride * dt,
        b1=obs[:, 0],
        b2=obs[:, 1],
        n11=obs[:, 2].real,
        n22=obs[:, 3].real,
        n12=obs[:, 4],
        trace=trace,
        purity=obs[:, 6].real,
        hermiticity=obs[:, 7].real,
        final=FockDensityMatrix(N, rho),
    )


def liouvillian(params: SystemParams, N: int) -> scipy.sparse.csr_matrix:
    """Sparse superoperator on row-major vec(rho): vec(A X B) = kron(A, B^T) vec(X)."""
    b1, b2 = (scipy.sparse.csr_matrix(b) for b in mode_operators(N))
    h = scipy.sparse.csr_matrix(hamiltonian(params, N))
    eye = scipy.sparse.identity(b1.shape[0], format="csr")
    kron = scipy.sparse.kron
    jumps = (b1, b2)
    kappa = damping_matrix(params)
    sup = -1j * (kron(h, eye) - kron(eye, h.T))
    for m in range(2):
        for k in range(2):
            lk, lm = jumps[k], jumps[m]
            prod = lm.conj().T @ lk
            sup = sup + 0.5 * kappa[m, k] * (
                2 * kron(lk, lm.conj()) - kron(prod, eye) - kron(eye, prod.T)
            )
    return sup.tocsr()


def steady_rho(params: SystemParams, N: int = 6, boundary_tol: float = 1e-8) -> FockDensityMatrix:
    """Null vector of the Liouvillian with unit trace, by one sparse linear solve."""
    validate(params)
    require_strict_stability(params)
    D = (N + 1) ** 2
    sup = liouvillian(params, N).tolil()
    rhs = np.zeros(D * D, dtype=complex)
    # swap one equation for tr(rho) = 1
    sup[0, :] = np.eye(D).reshape(1, -1)
    rhs[0] = 1.0
    rho = scipy.sparse.linalg.spsolve(sup.tocsc(), rhs).reshape(D, D)
    rho = 0.5 * (rho + rho.conj().T)
    out = FockDensityMatrix(N, rho)
    if out.boundary_weight() > boundary_tol:
        raise CutoffTooSmall(
            f"boundary occupation {out.boundary_weight():.3g} exceeds {boundary_tol}; raise N"
        )
    return out


def convergence_check(
    params: SystemParams,
    N: int = 6,
    init: InitialCondition = InitialCondition.single_excitation_first(),
    t_end: float = 20.0,
    dt: float = 1e-3,
) -> float:
    """Sup-norm change in (n11, n22) when the cutoff is raised from N to N + 2."""
    if N < 2:
        raise ValueError("N must be >= 2")
    lo = evolve_rho(params, init, N, t_end, dt)
    hi = evolve_rho(params, init, N + 2, t_end, dt)
    return float(max(np.abs(lo.n11 - hi.n11).max(), np.abs(lo.n22 - hi.n22).max()))
