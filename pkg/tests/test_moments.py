import math
import warnings

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from dirsim import (
    InitialCondition,
    MomentState,
    SystemParams,
    dynamical_matrix,
    eigenmodes,
    evolve,
    imbalance,
    moment_rhs,
    steady_first_moments,
    steady_populations,
)
from dirsim.errors import BothEmpty, MarginallyStable
from dirsim.moments import (
    integrated_propagator,
    output_stride,
    propagator,
    steady_second_moments,
)

from strategies import params

PI = math.pi
SINGLE = InitialCondition.single_excitation_first()
VACUUM = InitialCondition.vacuum()
RIGHT = SystemParams(big_gamma=1, g=0.5, theta=PI / 2, omega=0.1)
LEFT = SystemParams(big_gamma=1, g=0.5, theta=3 * PI / 2, omega=0.1)


def _state(b=(0, 0), n=((0, 0), (0, 0))):
    return MomentState(np.array(b, dtype=complex), np.array(n, dtype=complex))


# ---- initial conditions and state invariants -----------------------------------------


def test_initial_conditions():
    s = VACUUM.state()
    assert not s.b.any() and not s.n.any()
    s = SINGLE.state()
    np.testing.assert_array_equal(s.n, np.diag([1, 0]))
    assert not s.b.any()
    s = InitialCondition.coherent(0.3 + 0.1j, -0.2j).state()
    np.testing.assert_allclose(s.n, np.outer(s.b.conj(), s.b))
    np.testing.assert_allclose(s.fluctuation, 0)


def test_unknown_initial_kind():
    with pytest.raises(ValueError):
        InitialCondition("squeezed")


# ---- moment_rhs ------------------------------------------------------------------------


def test_rhs_vacuum_fixed_point():
    d = moment_rhs(SystemParams(g=0.7, big_gamma=0.3, theta=1.0), VACUUM.state())
    assert not d.b.any() and not d.n.any()


def test_rhs_single_mode_population():
    p = SystemParams(omega=0.3)
    b1 = 0.2 - 0.4j
    s = _state((b1, 0), ((0.5, 0), (0, 0)))
    d = moment_rhs(p, s)
    assert d.n[0, 0] == pytest.approx(-0.5 - 2 * 0.3 * b1.imag)
    assert d.b[0] == pytest.approx(-0.5 * b1 - 0.3j)


def test_rhs_single_excitation_decay():
    d = moment_rhs(SystemParams(), SINGLE.state())
    assert d.n[0, 0] == pytest.approx(-1.0)


@given(params(stable=False))
def test_rhs_preserves_hermiticity(p):
    rng = np.random.default_rng(0)
    b = rng.normal(size=2) + 1j * rng.normal(size=2)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    d = moment_rhs(p, MomentState(b, a.conj().T @ a))
    np.testing.assert_allclose(d.n, d.n.conj().T, atol=1e-12)


def test_rhs_matches_heisenberg_form():
    """Componentwise: dn_mk gains i Omega (delta_1m b_k - delta_1k conj(b_m))."""
    p = SystemParams(gamma=1.3, big_gamma=0.4, g=0.6, theta=0.7, phi=-0.2, omega=0.25, omega_delta=0.1)
    m = dynamical_matrix(p)
    b = np.array([0.1 + 0.2j, -0.3 + 0.05j])
    n = np.array([[0.4, 0.1 - 0.2j], [0.1 + 0.2j, 0.3]])
    d = moment_rhs(p, MomentState(b, n))
    for j in range(2):
        for k in range(2):
            hom = 1j * sum(m[j, i].conjugate() * n[i, k] - n[j, i] * m[k, i] for i in range(2))
            drv = 1j * p.omega * ((j == 0) * b[k] - (k == 0) * b[j].conjugate())
            assert d.n[j, k] == pytest.approx(hom + drv, abs=1e-15)


# ---- steady states ---------------------------------------------------------------------


def test_steady_first_moments_examples():
    b = steady_first_moments(SystemParams(omega=0.1))
    np.testing.assert_allclose(b, [-0.2j, 0], atol=1e-15)
    b = steady_first_moments(SystemParams(g=2, omega=0.1))
    assert abs(b[0]) ** 2 == pytest.approx((0.2 / 17) ** 2, rel=1e-12)
    assert abs(b[1]) ** 2 == pytest.approx((0.8 / 17) ** 2, rel=1e-12)
    with pytest.raises(MarginallyStable):
        steady_first_moments(SystemParams(big_gamma=1))


@pytest.mark.parametrize(
    "p, n1, n2, delta",
    [
        (SystemParams(big_gamma=0.8, omega=0.1), 0.04 / 0.1296, 0.0256 / 0.1296, 0.36 / 1.64),
        (RIGHT, 0.04, 0.16, -0.6),
        (LEFT, 0.04, 0.0, 1.0),
    ],
)
def test_steady_populations_examples(p, n1, n2, delta):
    r = steady_populations(p)
    assert r.n1 == pytest.approx(n1, rel=1e-12, abs=1e-15)
    assert r.n2 == pytest.approx(n2, rel=1e-12, abs=1e-15)
    assert r.delta == pytest.approx(delta, rel=1e-12)


def test_balanced_point():
    assert steady_populations(SystemParams(g=0.5, omega=0.1)).delta == pytest.approx(0, abs=1e-15)


def test_undriven_steady_state_is_empty():
    r = steady_populations(SystemParams(g=0.5))
    assert r.n1 == r.n2 == 0 and r.delta is None


@given(params(stable=True))
def test_steady_two_paths_agree(p):
    """Outer product of b_ss against the independent 4x4 solve of the n-equation."""
    b = steady_first_moments(p)
    direct = steady_second_moments(p)
    scale = max(np.abs(direct).max(), 1e-300)
    np.testing.assert_allclose(np.outer(b.conj(), b), direct, atol=1e-12 * scale)


@given(params(stable=True))
def test_steady_is_fixed_point(p):
    b = steady_first_moments(p)
    d = moment_rhs(p, MomentState(b, np.outer(b.conj(), b)))
    scale = p.gamma * (1 + np.abs(b).max()) ** 2
    assert np.abs(d.b).max() < 1e-12 * scale
    assert np.abs(d.n).max() < 1e-12 * scale


# ---- imbalance -------------------------------------------------------------------------


@given(st.floats(1e-6, 1e6), st.floats(0, 1e6))
def test_imbalance_bounds(a, b):
    assert -1 <= imbalance(a, b) <= 1
    assert imbalance(a, a) == 0
    assert imbalance(a, 0) == 1


def test_imbalance_examples():
    assert imbalance(0.04, 0.16) == pytest.approx(-0.6)
    with pytest.raises(BothEmpty):
        imbalance(0.0, 0.0)


# ---- propagators -----------------------------------------------------------------------


@given(params(stable=False), st.floats(0, 30))
def test_propagator_matches_expm(p, t):
    m = dynamical_matrix(p)
    ref = scipy.linalg.expm(-1j * m * t)
    np.testing.assert_allclose(propagator(m, t), ref, atol=1e-10 * max(1, np.abs(ref).max()))


def test_propagator_at_exceptional_point():
    m = dynamical_matrix(RIGHT)
    t = 3.7
    expected = np.exp(-0.5 * t) * (np.eye(2) - 1j * t * (m + 0.5j * np.eye(2)))
    np.testing.assert_allclose(propagator(m, t), expected, atol=1e-15)


@pytest.mark.parametrize("p", [SystemParams(big_gamma=1), SystemParams(big_gamma=0.6, g=0.3), RIGHT])
def test_integrated_propagator_matches_quadrature(p):
    m = dynamical_matrix(p)
    t = 4.0
    s = np.linspace(0, t, 4001)
    vals = np.array([scipy.linalg.expm(-1j * m * x) for x in s])
    ref = scipy.integrate.simpson(vals, x=s, axis=0)
    np.testing.assert_allclose(integrated_propagator(m, t), ref, atol=1e-10)


# ---- evolution -------------------------------------------------------------------------


def test_single_resonator_reference_value():
    p = SystemParams(omega=0.1)
    expected = 0.04 - 0.08 * math.exp(-1) + 1.04 * math.exp(-2)
    for method in ("rk4", "exact"):
        traj = evolve(p, SINGLE, t_end=2.0, dt=1e-3, method=method)
        assert traj.times[-1] == pytest.approx(2.0)
        assert traj.n11[-1] == pytest.approx(expected, abs=1e-12 if method == "exact" else 1e-10)


def test_undriven_vacuum_stays_empty():
    traj = evolve(SystemParams(g=0.7, big_gamma=0.5, theta=1.0), VACUUM, t_end=5.0, dt=1e-2)
    assert not np.abs(traj.n).max() and not np.abs(traj.b).max()
    assert np.isnan(traj.imbalance).all()


def test_left_coupling_never_fills_second():
    for method in ("rk4", "exact"):
        traj = evolve(LEFT, SINGLE, t_end=20, dt=1e-3, method=method)
        assert np.abs(traj.n22).max() <= 1e-12
        assert np.abs(traj.b[:, 1]).max() <= 1e-12


@pytest.mark.parametrize("p", [
    SystemParams(g=2, omega=0.1),
    SystemParams(big_gamma=0.8, omega=0.1),
    RIGHT,
    SystemParams(big_gamma=1, g=0.5, omega=0.1),
    SystemParams(gamma=1.7, big_gamma=0.9, g=0.4, theta=2.1, phi=0.3, omega=0.2, omega_delta=0.6),
])
def test_rk4_matches_exact(p):
    a = evolve(p, SINGLE, 20, 1e-3, "rk4")
    b = evolve(p, SINGLE, 20, 1e-3, "exact")
    np.testing.assert_array_equal(a.times, b.times)
    assert np.abs(a.n - b.n).max() < 1e-8
    assert np.abs(a.b - b.b).max() < 1e-8


def _ivp_reference(p, init, times):
    m = dynamical_matrix(p)
    e1 = np.array([1, 0])

    def f(_, y):
        b = y[:2]
        n = y[2:].reshape(2, 2)
        db = -1j * m @ b - 1j * p.omega * e1
        dn = 1j * (m.conj() @ n - n @ m.T) + 1j * p.omega * (np.outer(e1, b) - np.outer(b.conj(), e1))
        return np.concatenate([db, dn.reshape(4)])

    s = init.state()
    y0 = np.concatenate([s.b, s.n.reshape(4)]).astype(complex)
    sol = solve_ivp(f, (0, times[-1]), y0, t_eval=times, rtol=1e-12, atol=1e-14, method="DOP853")
    return sol.y.T


@settings(max_examples=15)
@given(params(stable=False, max_omega=0.3))
def test_exact_matches_adaptive_integrator(p):
    init = InitialCondition.coherent(0.2, -0.1j)
    traj = evolve(p, init, t_end=5.0, dt=1e-3, method="exact", max_samples=50)
    ref = _ivp_reference(p, init, traj.times)
    got = np.concatenate([traj.b, traj.n.reshape(-1, 4)], axis=1)
    assert np.abs(got - ref).max() < 1e-8 * max(1.0, np.abs(ref).max())


@settings(max_examples=20)
@given(params(stable=True))
def test_trajectory_invariants(p):
    traj = evolve(p, SINGLE, t_end=10.0, dt=1e-2, method="exact", max_samples=200)
    n = traj.n
    np.testing.assert_allclose(n, np.conj(np.swapaxes(n, 1, 2)), atol=1e-12)
    assert (traj.n11 >= -1e-12).all() and (traj.n22 >= -1e-12).all()
    assert (np.abs(n[:, 0, 1]) ** 2 <= traj.n11 * traj.n22 + 1e-10).all()
    for fl in traj.fluctuation:
        assert np.linalg.eigvalsh(fl).min() >= -1e-10
    assert np.all(np.diff(traj.times) > 0)


@settings(max_examples=20)
@given(params(stable=True))
def test_vacuum_stays_coherent(p):
    traj = evolve(p, VACUUM, t_end=10.0, dt=1e-2, method="exact", max_samples=200)
    assert np.abs(traj.fluctuation).max() < 1e-10


@settings(max_examples=20)
@given(params(stable=True), st.floats(0, 0.5), st.floats(0, 0.5))
def test_fluctuation_is_drive_independent(p, w1, w2):
    a = evolve(p.replace(omega=w1 * p.gamma), SINGLE, 10.0, 1e-2, "exact", max_samples=100)
    b = evolve(p.replace(omega=w2 * p.gamma), SINGLE, 10.0, 1e-2, "exact", max_samples=100)
    assert np.abs(a.fluctuation - b.fluctuation).max() < 1e-10


@pytest.mark.parametrize("p", [
    SystemParams(g=2, omega=0.1),
    SystemParams(big_gamma=0.8, omega=0.1),
    RIGHT,
    SystemParams(gamma=1.2, big_gamma=0.5, g=0.9, theta=4.0, phi=1.0, omega=0.3, omega_delta=-0.4),
])
def test_converges_to_steady_state(p):
    # the slowest mode sets the horizon; 40/gamma suffices only when it decays near gamma/2
    rate = -eigenmodes(dynamical_matrix(p)).max_imag
    t_end = math.ceil(max(40 / p.gamma, 23 / rate))
    traj = evolve(p, SINGLE, t_end=t_end, dt=1e-3, method="exact")
    ss = steady_populations(p)
    assert abs(traj.n11[-1] - ss.n1) < 1e-8
    assert abs(traj.n22[-1] - ss.n2) < 1e-8


def test_slow_mode_not_settled_at_40():
    p = SystemParams(big_gamma=0.8, omega=0.1)
    traj = evolve(p, SINGLE, t_end=40, dt=1e-3, method="exact")
    assert abs(traj.n11[-1] - steady_populations(p).n1) > 1e-3


def test_no_backaction_on_driven_mode():
    coupled = evolve(RIGHT, SINGLE, 20, 1e-3, "rk4")
    alone = evolve(SystemParams(omega=0.1), SINGLE, 20, 1e-3, "rk4")
    assert np.abs(coupled.b[:, 0] - alone.b[:, 0]).max() < 1e-10
    assert np.abs(coupled.n11 - alone.n11).max() < 1e-10


def test_output_stride_bounds_samples():
    assert output_stride(20000) == 10
    assert output_stride(100) == 1
    traj = evolve(SystemParams(omega=0.1), SINGLE, 20, 1e-3)
    assert len(traj) == 2001


def test_large_step_warns():
    with pytest.warns(RuntimeWarning):
        evolve(SystemParams(g=5), SINGLE, t_end=1.0, dt=0.1)


def test_small_step_is_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        evolve(SystemParams(g=0.5), SINGLE, t_end=1.0, dt=1e-3)


def test_marginal_point_still_evolves():
    """Undamped eigenmode: the exact form switches to the integrated propagator."""
    p = SystemParams(big_gamma=1, omega=0.1)
    a = evolve(p, SINGLE, 20, 1e-3, "rk4")
    b = evolve(p, SINGLE, 20, 1e-3, "exact")
    assert np.abs(a.n - b.n).max() < 1e-8
    assert np.isfinite(b.n).all()


def test_evolve_rejects_bad_times():
    with pytest.raises(ValueError):
        evolve(SystemParams(), SINGLE, t_end=-1.0)
    with pytest.raises(ValueError):
        evolve(SystemParams(), SINGLE, t_end=1.0, dt=0.0)
