import pytest
from hypothesis import settings

from dirsim import fock, jobs
from dirsim.moments import InitialCondition

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

SINGLE = InitialCondition.single_excitation_first()

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def figure_sets():
    return jobs.figure_parameter_sets()


@pytest.fixture(scope="session")
def oracle_runs(figure_sets):
    """Density-matrix runs for every figure parameter set at N=6 and N=8."""
    return {
        name: {N: fock.evolve_rho(p, SINGLE, N, 20.0, 1e-3) for N in (6, 8)}
        for name, p in figure_sets.items()
    }

