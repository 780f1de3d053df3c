"""First (and exploratory second) eigenpairs of the p-Laplacian.

Anchors: the 1-D Dirichlet root has the closed form
``2 pi (p-1)^(1/p) / (p sin(pi/p))`` (the 1-D Neumann root on a length-2
interval is half of it), the unit square's p=2 eigenvalue is 2 pi^2, the
unit disc's root is the first Bessel zero, and the whole problem is
exactly scale-covariant.  A hand-computable tent function pins the
discrete Rayleigh quotient's quadrature conventions.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

import oracles
from plaplab.eigen import (
    EigenConfig,
    EigenError,
    diagonal_profile,
    dirichlet_eigen_first,
    neumann_eigen_first,
    nodal_distances,
    project_zero_pmean,
    rayleigh_quotient,
    second_dirichlet_eigen_experiment,
)
from plaplab.fields import ScalarField, build_grid
from plaplab.geometry import Domain, scaled


# ---------------------------------------------------------------------------
# quotient primitives


def test_rayleigh_quotient_hand_value_for_tent():
    # tent on [0,1] with n=8: gradient magnitude 1 on every cell (N = 1),
    # lumped masses h at interior nodes give D = (1/8) * 44/64 = 11/128
    grid = build_grid(Domain.interval(0.0, 1.0), 8)
    tent = ScalarField.from_function(grid, lambda x: np.minimum(x, 1.0 - x))
    assert rayleigh_quotient(tent, 2.0) == pytest.approx(128.0 / 11.0, rel=1e-14)


def test_rayleigh_quotient_admissibility_checks():
    grid = build_grid(Domain.unit_square(), 16)
    bad_dirichlet = ScalarField.from_function(grid, lambda x, y: x + 1.0)
    with pytest.raises(EigenError):
        rayleigh_quotient(bad_dirichlet, 2.0, bc="dirichlet")
    with pytest.raises(EigenError):
        rayleigh_quotient(bad_dirichlet, 2.0, bc="neumann")
    zero = ScalarField.from_function(grid, lambda x, y: np.zeros_like(x))
    with pytest.raises(EigenError):
        rayleigh_quotient(zero, 2.0, bc="dirichlet")


def test_project_zero_pmean_properties():
    grid = build_grid(Domain.unit_square(), 24)
    u = ScalarField.from_function(grid, lambda x, y: x + 0.2 * np.sin(3.0 * y))
    w = project_zero_pmean(u, 3.0)
    # balanced: the Neumann quotient accepts the projected field
    assert rayleigh_quotient(w, 3.0, bc="neumann") > 0.0
    again = project_zero_pmean(w, 3.0)
    assert np.allclose(again.values, w.values, atol=1e-12)
    with pytest.raises(EigenError):
        project_zero_pmean(u, 1.0)


def test_config_validation():
    with pytest.raises(EigenError):
        EigenConfig(p=1.0)
    with pytest.raises(EigenError):
        EigenConfig(tol=0.0)


# ---------------------------------------------------------------------------
# 1-D closed forms


@pytest.mark.parametrize("p", [2.0, 3.5])
def test_interval_dirichlet_root_closed_form(p):
    grid = build_grid(Domain.interval(0.0, 1.0), 64)
    res = dirichlet_eigen_first(grid, p=p)
    assert res.root == pytest.approx(oracles.pi_p(p), rel=5e-4)
    assert res.field.values.min() >= -1e-12  # first eigenfunction one-signed


def test_interval_dirichlet_refines_toward_closed_form():
    errs = {}
    for n in (64, 128):
        grid = build_grid(Domain.interval(0.0, 1.0), n)
        errs[n] = abs(dirichlet_eigen_first(grid, p=2.0).root - math.pi)
    assert errs[128] < 0.3 * errs[64]  # second-order eigenvalue convergence


@pytest.mark.parametrize("p", [2.0, 3.5])
def test_interval_neumann_root_closed_form(p):
    grid = build_grid(Domain.interval(-1.0, 1.0), 128)
    res = neumann_eigen_first(grid, p=p)
    assert res.root == pytest.approx(oracles.pi_p(p) / 2.0, rel=2e-4)


def test_pi_p_reduces_to_pi():
    assert oracles.pi_p(2.0) == pytest.approx(math.pi, rel=1e-15)


# ---------------------------------------------------------------------------
# 2-D closed forms


def test_square_p2_eigenvalue():
    grid = build_grid(Domain.unit_square(), 48)
    res = dirichlet_eigen_first(grid, p=2.0)
    assert res.raw == pytest.approx(2.0 * math.pi**2, rel=1e-3)
    assert res.field.sup_norm() == pytest.approx(1.0, abs=1e-12)


def test_disc_p2_root_is_first_bessel_zero():
    grid = build_grid(Domain.disc((0.0, 0.0), 1.0), 48)
    res = dirichlet_eigen_first(grid, p=2.0)
    j01 = math.sqrt(2.0 * oracles.bessel_dirichlet_eigenvalue(1))
    assert res.root == pytest.approx(j01, rel=5e-3)


def test_eigenvalue_scale_covariance_is_exact():
    r1 = dirichlet_eigen_first(build_grid(Domain.unit_square(), 32), p=3.0)
    r2 = dirichlet_eigen_first(build_grid(scaled(Domain.unit_square(), 2.0), 32),
                               p=3.0)
    assert r1.root == pytest.approx(2.0 * r2.root, rel=1e-12)


# ---------------------------------------------------------------------------
# sweeps toward the geometric limits


def test_dirichlet_sweep_structure(dirichlet_sweep):
    rep = dirichlet_sweep
    assert rep.problem == "dirichlet"
    assert rep.target == pytest.approx(2.0, rel=1e-12)  # 1/inradius
    ps = [e.p for e in rep.entries]
    assert ps == sorted(ps) == [2.0, 4.0, 8.0, 16.0, 32.0]
    roots = [e.root for e in rep.entries]
    assert all(b < a for a, b in zip(roots, roots[1:]))
    gaps = [e.relative_gap for e in rep.entries]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    payload = rep.to_dict()
    assert payload["limitTarget"] == rep.target
    assert len(payload["entries"]) == 5


def test_neumann_sweep_structure(neumann_sweep):
    rep = neumann_sweep
    assert rep.problem == "neumann"
    assert rep.target == pytest.approx(math.sqrt(2.0), rel=1e-12)  # 2/diameter
    ps = [e.p for e in rep.entries]
    assert ps == sorted(ps) == [2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 15.0]
    roots = [e.root for e in rep.entries]
    assert all(b < a for a, b in zip(roots, roots[1:]))


def test_neumann_below_dirichlet_at_matching_p(dirichlet_sweep, neumann_sweep):
    lam = {e.p: e.root for e in dirichlet_sweep.entries}
    big = {e.p: e.root for e in neumann_sweep.entries}
    for p in (2.0, 4.0, 8.0):
        assert big[p] < lam[p]


# ---------------------------------------------------------------------------
# profiles and nodal structure


def test_diagonal_profile_of_cosine_mode():
    grid = build_grid(Domain.unit_square(), 64)
    u = ScalarField.from_function(grid, lambda x, y: np.cos(np.pi * x))
    prof = diagonal_profile(u)
    assert prof.t[0] == -1.0 and prof.t[-1] == 1.0
    assert float(np.max(np.abs(prof.values))) == pytest.approx(1.0, abs=1e-12)
    assert prof.max_deviation == pytest.approx(oracles.COSINE_LINE_DEVIATION,
                                               abs=2e-3)


def test_diagonal_profile_requires_square():
    grid = build_grid(Domain.rectangle(0.0, 0.0, 2.0, 1.0), 16)
    u = ScalarField.from_function(grid, lambda x, y: x)
    with pytest.raises(EigenError):
        diagonal_profile(u)


def test_nodal_distances_interval():
    grid = build_grid(Domain.interval(0.0, 1.0), 16)
    u = ScalarField.from_function(grid, lambda x: x - 0.5)
    d_plus, d_minus = nodal_distances(u)
    assert d_plus == pytest.approx(0.5, abs=1e-12)
    assert d_minus == pytest.approx(0.5, abs=1e-12)


def test_nodal_distances_vertical_line():
    grid = build_grid(Domain.unit_square(), 20)
    u = ScalarField.from_function(grid, lambda x, y: x - 0.3)
    d_plus, d_minus = nodal_distances(u)
    assert d_plus == pytest.approx(0.7, abs=1e-12)
    assert d_minus == pytest.approx(0.3, abs=1e-12)


def test_p15_neumann_eigenfunction_diagnostics(neumann_p15_128):
    res = neumann_p15_128
    assert res.p == 15.0 and res.bc == "neumann"
    assert res.field.sup_norm() == pytest.approx(1.0, abs=1e-12)
    assert res.residual < 1e-4
    assert np.all(np.diff(res.history) <= 1e-12)


# ---------------------------------------------------------------------------
# exploratory second eigenpair


def test_second_pair_square_p2_is_degenerate():
    res = second_dirichlet_eigen_experiment(build_grid(Domain.unit_square(), 48),
                                            p=2.0)
    assert res.orientation == "other"  # parallel/diagonal families tie at p=2
    assert res.eigen.raw == pytest.approx(5.0 * math.pi**2, rel=1e-2)


def test_second_pair_rectangle_splits_long_side():
    grid = build_grid(Domain.rectangle(0.0, 0.0, 2.0, 1.0), 32)
    res = second_dirichlet_eigen_experiment(grid, p=2.0)
    assert res.orientation == "parallel"
    assert res.eigen.raw == pytest.approx(2.0 * math.pi**2, rel=1e-2)


def test_second_pair_square_p6_prefers_diagonal():
    res = second_dirichlet_eigen_experiment(build_grid(Domain.unit_square(), 48),
                                            p=6.0)
    assert res.orientation == "diagonal"
    assert res.eigen.raw > res.eigen.root  # raw = root^6 >> root here
