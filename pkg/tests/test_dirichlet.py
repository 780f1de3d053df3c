"""Variational Dirichlet solvers: torsion, p-harmonic extension, distance.

Anchors: the p=2 torsion center value has a double-sine-series closed form;
affine functions are p-harmonic for every p and must be reproduced to
round-off; the torsion-vs-distance gap shrinks as p grows; the radial
infinity-torsion profile satisfies its ODE to round-off.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

import oracles
from plaplab.dirichlet import (
    SolverConfig,
    SolverError,
    continuation_ladder,
    distance_field,
    infinity_torsion_ball,
    solve_p_harmonic,
    solve_p_torsion,
    torsion_infinity_gap,
)
from plaplab.fields import ScalarField, build_grid
from plaplab.geometry import Domain


# ---------------------------------------------------------------------------
# configuration and continuation


def test_config_validation():
    with pytest.raises(SolverError):
        SolverConfig(p=1.0)
    with pytest.raises(SolverError):
        SolverConfig(p=math.inf)
    with pytest.raises(SolverError):
        SolverConfig(tol=0.0)
    with pytest.raises(SolverError):
        SolverConfig(p=4.0, ladder=(2.0, 8.0, 4.0))
    with pytest.raises(SolverError):
        SolverConfig(p=4.0, ladder=(2.0, 3.0))


def test_continuation_ladder_shapes():
    assert continuation_ladder(2.0) == (2.0,)
    assert continuation_ladder(32.0) == (2.0, 4.0, 8.0, 16.0, 32.0)
    down = continuation_ladder(1.1)
    assert down[0] == 2.0 and down[-1] == pytest.approx(1.1)
    assert all(b < a for a, b in zip(down, down[1:]))


# ---------------------------------------------------------------------------
# torsion


def test_torsion_center_matches_series_oracle():
    grid = build_grid(Domain.unit_square(), 64)
    res = solve_p_torsion(grid, p=2.0)
    i = int(np.argmin(np.abs(grid.xs - 0.5)))
    j = int(np.argmin(np.abs(grid.ys - 0.5)))
    assert abs(oracles.torsion_center_series() - oracles.SQUARE_TORSION_CENTER) < 1e-12
    assert res.field.values[i, j] == pytest.approx(oracles.SQUARE_TORSION_CENTER,
                                                  abs=1e-4)
    assert res.optimality_residual < 1e-8
    assert np.all(np.diff(res.energy_history) <= 1e-12)


def test_torsion_is_nonnegative_and_symmetric():
    grid = build_grid(Domain.unit_square(), 32)
    res = solve_p_torsion(grid, p=3.0)
    vals = res.field.values
    assert vals.min() >= -1e-12
    # diagonal (x <-> y) symmetry is exact for the cell-based energy; the
    # mirror symmetry only holds up to the one-sided quadrature's O(h) bias
    assert np.allclose(vals, vals.T, atol=1e-9)
    assert np.allclose(vals, vals[::-1, :], atol=1e-3)


def test_torsion_distance_gap_shrinks_with_p():
    grid = build_grid(Domain.unit_square(), 48)
    g4 = torsion_infinity_gap(grid, 4.0)
    g16 = torsion_infinity_gap(grid, 16.0)
    assert g4.sup_gap == pytest.approx(0.2408, abs=5e-3)
    assert g16.sup_gap < g4.sup_gap
    assert g16.sup_gap < 0.08
    assert g16.gap.sup_norm() == g16.sup_gap


# ---------------------------------------------------------------------------
# p-harmonic extension


@pytest.mark.parametrize("p", [2.0, 3.5])
def test_affine_boundary_data_reproduced_exactly(p):
    grid = build_grid(Domain.unit_square(), 64)
    res = solve_p_harmonic(grid, lambda x, y: 2.0 * x - y + 0.25, p=p)
    xs, ys = grid.coordinates()
    exact = 2.0 * xs - ys + 0.25
    err = np.max(np.abs(res.field.values - exact)[grid.nonexterior])
    assert err < 1e-12


def test_p2_harmonic_single_preconditioned_step():
    grid = build_grid(Domain.unit_square(), 32)
    res = solve_p_harmonic(grid, lambda x, y: x * x - y * y, p=2.0)
    assert res.iterations <= 2
    xs, ys = grid.coordinates()
    err = np.max(np.abs(res.field.values - (xs * xs - ys * ys))[grid.nonexterior])
    assert err < 1e-10  # harmonic quadratic: exact for the 5-point stencil


def test_boundary_values_pinned():
    grid = build_grid(Domain.unit_square(), 24)
    res = solve_p_harmonic(grid, lambda x, y: np.sin(3 * x) + y, p=4.0)
    xs, ys = grid.coordinates()
    gvals = np.sin(3 * xs) + ys
    assert np.allclose(res.field.values[grid.boundary], gvals[grid.boundary],
                       atol=1e-13)


# ---------------------------------------------------------------------------
# distance fields


def test_distance_field_square_closed_form():
    grid = build_grid(Domain.unit_square(), 48)
    d = distance_field(grid)
    xs, ys = grid.coordinates()
    exact = np.minimum(np.minimum(xs, 1.0 - xs), np.minimum(ys, 1.0 - ys))
    assert np.array_equal(d.values[grid.nonexterior], exact[grid.nonexterior])


def test_distance_field_disc_closed_form():
    grid = build_grid(Domain.disc((0.0, 0.0), 1.0), 32)
    d = distance_field(grid)
    xs, ys = grid.coordinates()
    exact = np.maximum(1.0 - np.hypot(xs, ys), 0.0)
    assert np.allclose(d.values[grid.nonexterior], exact[grid.nonexterior],
                       atol=1e-13)


def test_distance_field_interval():
    grid = build_grid(Domain.interval(0.0, 1.0), 16)
    d = distance_field(grid)
    exact = np.minimum(grid.xs, 1.0 - grid.xs)
    assert np.allclose(d.values, exact, atol=1e-15)


# ---------------------------------------------------------------------------
# radial infinity-torsion profile


def test_infinity_torsion_profile_closed_form():
    prof = infinity_torsion_ball(2.0)
    assert prof.coefficient == pytest.approx(3.0 ** (4.0 / 3.0) / 4.0, rel=1e-15)
    assert float(np.max(np.abs(prof.residuals))) < 1e-10
    assert prof.values[0] == pytest.approx(prof.coefficient * 2.0 ** (4.0 / 3.0),
                                           rel=1e-14)
    assert prof.values[-1] == pytest.approx(0.0, abs=1e-14)
    assert np.all(np.diff(prof.values) < 0.0)


def test_infinity_torsion_profile_errors():
    with pytest.raises(SolverError):
        infinity_torsion_ball(0.0)
    with pytest.raises(SolverError):
        infinity_torsion_ball(1.0, samples=1)
