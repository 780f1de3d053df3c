"""Shared fixtures and the acceptance-summary report hook.

The expensive solves (n = 96 sweeps, n = 128 eigenpairs and torsion
ladders) are session-scoped so the unit tests and the acceptance suite
share one computation.  Each heavy fixture records its wall-clock cost in
the ``timings`` dict; acceptance tests assert their runtime budgets from
those entries.  A terminal-summary hook prints one PASS/FAIL line per
acceptance test, with the measured numbers the test registered.
"""

from __future__ import annotations

import time

import pytest

from plaplab.dirichlet import torsion_infinity_gap
from plaplab.eigen import dirichlet_eigen_first, neumann_eigen_first, p_sweep
from plaplab.fields import build_grid
from plaplab.geometry import Domain, cheeger_convex


def _timed(timings: dict, key: str, fn):
    t0 = time.perf_counter()
    out = fn()
    timings[key] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def timings() -> dict:
    """Wall-clock seconds of each heavy session fixture, keyed by name."""
    return {}


@pytest.fixture(scope="session")
def square() -> Domain:
    return Domain.unit_square()


@pytest.fixture(scope="session")
def cheeger_square(square, timings):
    return _timed(timings, "cheeger_square", lambda: cheeger_convex(square))


@pytest.fixture(scope="session")
def dirichlet_sweep(square, timings):
    return _timed(timings, "dirichlet_sweep",
                  lambda: p_sweep("dirichlet", square, (2, 4, 8, 16, 32), 96))


@pytest.fixture(scope="session")
def neumann_sweep(square, timings):
    return _timed(timings, "neumann_sweep",
                  lambda: p_sweep("neumann", square, (2, 3, 4, 6, 8, 10, 15), 96))


@pytest.fixture(scope="session")
def eigen_p2_128(square, timings):
    grid = build_grid(square, 128)
    return _timed(timings, "eigen_p2_128",
                  lambda: dirichlet_eigen_first(grid, p=2.0))


@pytest.fixture(scope="session")
def neumann_p15_128(square, timings):
    grid = build_grid(square, 128)
    return _timed(timings, "neumann_p15_128",
                  lambda: neumann_eigen_first(grid, p=15.0))


@pytest.fixture(scope="session")
def torsion_gaps_128(square, timings):
    grid = build_grid(square, 128)
    return _timed(timings, "torsion_gaps_128",
                  lambda: {p: torsion_infinity_gap(grid, p)
                           for p in (4.0, 8.0, 16.0, 32.0)})


# ---------------------------------------------------------------------------
# acceptance reporting: one printed line per acceptance test


def pytest_configure(config):
    config._acceptance_notes = {}


@pytest.fixture
def note(request):
    """Register a short measured-numbers note for the acceptance summary."""

    def _note(message: str) -> None:
        request.config._acceptance_notes[request.node.nodeid] = str(message)

    return _note


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    reports = []
    for category, outcome in (("passed", "PASS"), ("failed", "FAIL"),
                              ("error", "FAIL")):
        for rep in terminalreporter.stats.get(category, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" in nodeid and "::" in nodeid:
                reports.append((nodeid.split("::")[-1], outcome, nodeid))
    if not reports:
        return
    notes = getattr(config, "_acceptance_notes", {})
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, outcome, nodeid in sorted(reports):
        line = f"{outcome}  {name}"
        msg = notes.get(nodeid)
        if msg:
            line += f"  [{msg}]"
        terminalreporter.write_line(line)
