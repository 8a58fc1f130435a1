import numpy as np
import pytest

from msbem.geometry import make_screen
from msbem.quadrature import QuadratureConfig
from msbem.solver import AssemblyCache, SolveConfig
from msbem.spaces import FULL

# Acceptance summary lines, printed at the end of the run so they are
# visible regardless of pytest's output capturing.
ACCEPTANCE_LINES = {}


def record_acceptance(criterion: int, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    line = f"[ACCEPTANCE] criterion {criterion}: {status}"
    if detail:
        line += f"  ({detail})"
    ACCEPTANCE_LINES[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture(scope="session")
def tri05():
    return make_screen("trijunction", h=0.5)


@pytest.fixture(scope="session")
def tri025():
    return make_screen("trijunction", h=0.25)


@pytest.fixture(scope="session")
def shared_cache():
    return AssemblyCache()


@pytest.fixture(scope="session")
def mats025(tri025, shared_cache):
    """Full Dirichlet/Neumann systems at h = 0.25, assembled once."""
    quad = QuadratureConfig()
    spd, V = shared_cache.system(tri025, "dirichlet", 1.0, quad, FULL)
    spn, W = shared_cache.system(tri025, "neumann", 1.0, quad, FULL)
    return {"space_d": spd, "V": V, "space_n": spn, "W": W,
            "quad": quad, "kappa": 1.0}


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
