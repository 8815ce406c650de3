"""Two driven-dissipative resonators with coherent and bath-mediated coupling."""
from .errors import *  # noqa: F401,F403
from .model import (
    Regime,
    SystemParams,
    classify_regime,
    damping_matrix,
    dynamical_matrix,
    eigenmodes,
    generalized_couplings,
    hamiltonian_matrix,
    validate,
)
from .moments import (
    InitialCondition,
    MomentState,
    SteadyResult,
    Trajectory,
    evolve,
    imbalance,
    moment_rhs,
    steady_first_moments,
    steady_populations,
)

__version__ = "0.1.0"
