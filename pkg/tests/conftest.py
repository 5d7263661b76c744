import os

import pytest

from flagint import QuadratureSpec

# Worker count for the parallel experiment drivers; capped so the suite
# behaves the same on small CI boxes and big workstations.
JOBS = min(4, os.cpu_count() or 1)


def pytest_configure(config):
    # the acceptance battery appends one [PASS]/[FAIL] line per criterion
    config._criterion_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criterion_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid_spec():
    return QuadratureSpec(
        method="grid",
        points_per_axis=4,
        seed=0,
        inner_cutoff=-20,
        target_rel_error=1e-3,
    )


@pytest.fixture(scope="session")
def mc_spec():
    return QuadratureSpec(
        method="monte-carlo",
        samples=20000,
        seed=0,
        inner_cutoff=-20,
        target_rel_error=1e-3,
    )
