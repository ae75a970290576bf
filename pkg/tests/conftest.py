import numpy as np
import pytest

from tissuerb import bench, coupled, fem
from tissuerb.config import ExperimentConfig


@pytest.fixture(scope="session")
def default_cfg():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def forward_fom(default_cfg):
    """Default forward FOM run, timed as the median of 5."""
    return bench.forward_fom(default_cfg)


@pytest.fixture(scope="session")
def lqr_fom(default_cfg):
    """Dense 880-dimensional GARE at the LQR defaults, timed as the median of 5."""
    return bench.lqr_fom(default_cfg)


@pytest.fixture(scope="session")
def small_coupled():
    """2 x 4 mesh, lightly damped: 15 nodes, 4 Dirichlet nodes, 22 free dofs."""
    asm = fem.assemble(fem.build_mesh(2, 4), fem.MaterialParams(50.0, 50.0, 1.0))
    return coupled.build_coupled(asm, coupled.SolidParams(100.0), damping=(0.0, 0.1))


@pytest.fixture(scope="session")
def small_system(small_coupled):
    return coupled.to_first_order(small_coupled)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
