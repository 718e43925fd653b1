import numpy as np
import pytest

from revgs import kernels
from revgs.core import Parameters, detailed_balance_equilibrium
from revgs.grid import GridSpec


@pytest.fixture
def ones():
    return Parameters()


@pytest.fixture
def grid2():
    return GridSpec.uniform(2, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    previous = kernels.backend_name()
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


def random_positive_params(rng, **fixed):
    vals = {k: float(rng.uniform(0.1, 3.0)) for k in ("k0p", "k0m", "k1p", "k1m", "k2p", "k2m")}
    vals.update({k: float(rng.uniform(0.01, 1.0)) for k in ("du", "dv", "dp_", "dq")})
    vals["z0"] = float(rng.uniform(0.1, 5.0))
    vals.update(fixed)
    return Parameters(**vals)


def perturbed(grid, eq, amp, rng):
    f = eq.fields(grid.shape)
    return f * (1.0 + amp * rng.uniform(-1, 1, f.shape))


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
