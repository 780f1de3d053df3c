"""Shared discrete variational machinery for the Dirichlet and eigenvalue
solvers.

The lattice is triangulated by splitting each cell along the same diagonal:
lower triangle (i,j)-(i+1,j)-(i+1,j+1), upper triangle (i,j)-(i+1,j+1)-
(i,j+1).  Affine elements give per-triangle gradients

    lower: ( (v10-v00)/h , (v11-v10)/h )
    upper: ( (v11-v01)/h , (v01-v00)/h )

so the regularized p-Dirichlet energy and its gradient are a handful of
shifted-array operations.  For p = 2 this energy reduces exactly to the
classical 5-point scheme, whose sparse factorization doubles as the descent
preconditioner for all p.  Masses are lumped (one third of each incident
triangle's area), which keeps boundary quadrature first-order consistent.

A triangle enters the energy only when all its vertices carry values
(non-exterior); degrees of freedom are the interior nodes for Dirichlet
boundary conditions and every mass-carrying node for natural (Neumann)
conditions.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fields import Grid

__all__ = ["VariationalCore", "make_core"]


class VariationalCore:
    """Energy/gradient evaluations and a factorized p=2 preconditioner."""

    def __init__(self, grid: Grid, bc: str):
        if bc not in ("dirichlet", "neumann"):
            raise ValueError(f"unknown boundary condition {bc!r}")
        self.grid = grid
        self.bc = bc
        self.h = grid.h
        if grid.dim == 2:
            self._setup_2d()
        else:
            self._setup_1d()
        self.dof_index = np.flatnonzero(self.dof_mask.ravel())
        self._factor = None

    # -- setup ------------------------------------------------------------

    def _setup_2d(self) -> None:
        ok = self.grid.nonexterior
        self.tri_low = ok[:-1, :-1] & ok[1:, :-1] & ok[1:, 1:]
        self.tri_up = ok[:-1, :-1] & ok[1:, 1:] & ok[:-1, 1:]
        h = self.h
        mass = np.zeros(self.grid.shape)
        wl = self.tri_low.astype(float) * (h * h / 6.0)
        wu = self.tri_up.astype(float) * (h * h / 6.0)
        mass[:-1, :-1] += wl + wu
        mass[1:, :-1] += wl
        mass[1:, 1:] += wl + wu
        mass[:-1, 1:] += wu
        self.mass = mass
        if self.bc == "dirichlet":
            self.dof_mask = self.grid.interior.copy()
        else:
            self.dof_mask = ok & (mass > 0.0)

    def _setup_1d(self) -> None:
        ok = self.grid.nonexterior
        self.seg = ok[:-1] & ok[1:]
        mass = np.zeros(self.grid.shape)
        w = self.seg.astype(float) * (self.h / 2.0)
        mass[:-1] += w
        mass[1:] += w
        self.mass = mass
        if self.bc == "dirichlet":
            self.dof_mask = self.grid.interior.copy()
        else:
            self.dof_mask = ok & (mass > 0.0)

    # -- energies ---------------------------------------------------------

    def _tri_grads(self, v: np.ndarray):
        h = self.h
        dxl = (v[1:, :-1] - v[:-1, :-1]) / h
        dyl = (v[1:, 1:] - v[1:, :-1]) / h
        dxu = (v[1:, 1:] - v[:-1, 1:]) / h
        dyu = (v[:-1, 1:] - v[:-1, :-1]) / h
        return dxl, dyl, dxu, dyu

    def energy(self, v: np.ndarray, p: float, delta: float) -> float:
        """``sum (1/p)(|grad v|^2 + delta^2)^(p/2)`` over admissible elements."""
        d2 = delta * delta
        if self.grid.dim == 1:
            g2 = ((v[1:] - v[:-1]) / self.h) ** 2
            return float(np.sum(((g2 + d2) ** (p / 2.0))[self.seg]) * self.h / p)
        dxl, dyl, dxu, dyu = self._tri_grads(v)
        el = ((dxl**2 + dyl**2 + d2) ** (p / 2.0))[self.tri_low].sum()
        eu = ((dxu**2 + dyu**2 + d2) ** (p / 2.0))[self.tri_up].sum()
        return float((el + eu) * self.h * self.h / (2.0 * p))

    def energy_grad(self, v: np.ndarray, p: float, delta: float):
        """(energy, gradient); the gradient is zeroed off the dof mask."""
        d2 = delta * delta
        if self.grid.dim == 1:
            g = (v[1:] - v[:-1]) / self.h
            g2 = g * g + d2
            e = float(np.sum((g2 ** (p / 2.0))[self.seg]) * self.h / p)
            # d/dv of (h/p)(g^2+d^2)^(p/2): the h and the 1/h from dg/dv cancel
            flux = np.where(self.seg, g2 ** (p / 2.0 - 1.0), 0.0) * g
            grad = np.zeros_like(v)
            grad[:-1] -= flux
            grad[1:] += flux
            grad = np.where(self.dof_mask, grad, 0.0)
            return e, grad
        dxl, dyl, dxu, dyu = self._tri_grads(v)
        g2l = dxl**2 + dyl**2 + d2
        g2u = dxu**2 + dyu**2 + d2
        e = float((np.where(self.tri_low, g2l ** (p / 2.0), 0.0).sum()
                   + np.where(self.tri_up, g2u ** (p / 2.0), 0.0).sum())
                  * self.h * self.h / (2.0 * p))
        wl = np.where(self.tri_low, g2l ** (p / 2.0 - 1.0), 0.0) * (self.h / 2.0)
        wu = np.where(self.tri_up, g2u ** (p / 2.0 - 1.0), 0.0) * (self.h / 2.0)
        grad = np.zeros_like(v)
        grad[:-1, :-1] += wl * (-dxl) + wu * (-dyu)
        grad[1:, :-1] += wl * (dxl - dyl)
        grad[1:, 1:] += wl * dyl + wu * dxu
        grad[:-1, 1:] += wu * (dyu - dxu)
        grad = np.where(self.dof_mask, grad, 0.0)
        return e, grad

    # -- masses and p-norms ----------------------------------------------

    def pnorm_term(self, v: np.ndarray, p: float) -> float:
        """``sum mass * |v|^p`` over value-carrying nodes."""
        return float(np.sum(self.mass * np.abs(v) ** p))

    def pnorm_grad(self, v: np.ndarray, p: float) -> np.ndarray:
        g = p * self.mass * np.abs(v) ** (p - 1.0) * np.sign(v)
        return np.where(self.dof_mask, g, 0.0)

    def load_grad(self, f_vals: np.ndarray) -> np.ndarray:
        """Gradient of ``-sum mass f v`` (linear load term)."""
        return np.where(self.dof_mask, -self.mass * f_vals, 0.0)

    # -- stiffness assembly and preconditioners ---------------------------

    def _assemble_stiffness(self, w_low=None, w_up=None) -> sp.csr_matrix:
        """Per-element-weighted P1 stiffness (weights default to 1)."""
        shape = self.grid.shape
        nn = int(np.prod(shape))
        rows, cols, vals = [], [], []

        def flat(ii, jj):
            return (ii * shape[1] + jj).ravel()

        if self.grid.dim == 1:
            idx = np.flatnonzero(self.seg)
            wseg = np.ones(len(idx)) if w_low is None else w_low[self.seg]
            stamps = [(idx, idx, 1.0), (idx + 1, idx + 1, 1.0),
                      (idx, idx + 1, -1.0), (idx + 1, idx, -1.0)]
            for r, c, w in stamps:
                rows.append(r)
                cols.append(c)
                vals.append(w * wseg / self.h)
        else:
            ii, jj = np.meshgrid(np.arange(shape[0] - 1), np.arange(shape[1] - 1),
                                 indexing="ij")
            for tri, wtri, corners in (
                    (self.tri_low, w_low, ((0, 0), (1, 0), (1, 1))),
                    (self.tri_up, w_up, ((0, 0), (0, 1), (1, 1)))):
                sel = tri.ravel()
                nodes = [flat(ii + di, jj + dj)[sel] for (di, dj) in corners]
                wt = np.ones(len(nodes[0])) if wtri is None else wtri.ravel()[sel]
                # element stiffness of a right isoceles P1 triangle with legs h:
                # E = 1/4[(v_b - v_a)^2 + (v_c - v_b)^2] for corner order a, b, c
                stamp = {(0, 0): 0.5, (1, 1): 1.0, (2, 2): 0.5,
                         (0, 1): -0.5, (1, 0): -0.5, (1, 2): -0.5, (2, 1): -0.5}
                for (a, b), w in stamp.items():
                    rows.append(nodes[a])
                    cols.append(nodes[b])
                    vals.append(w * wt)
        A = sp.coo_matrix((np.concatenate(vals),
                           (np.concatenate(rows), np.concatenate(cols))),
                          shape=(nn, nn)).tocsr()
        return A

    def _restrict_and_factor(self, A: sp.csr_matrix, mass_shift: float):
        idx = self.dof_index
        Add = A[idx][:, idx].tocsc()
        if self.bc == "neumann":
            Mdd = sp.diags(self.mass.ravel()[idx])
            Add = (Add + mass_shift * Mdd).tocsc()
        return spla.splu(Add)

    def _neumann_sigma(self) -> float:
        return 1.0 / max(self.grid.domain.bounding_box[2]
                         - self.grid.domain.bounding_box[0], 1.0) ** 2

    def _preconditioner(self):
        if self._factor is None:
            self._factor = self._restrict_and_factor(self._assemble_stiffness(),
                                                     self._neumann_sigma())
        return self._factor

    def weighted_factor(self, v: np.ndarray, p: float, delta: float):
        """Factorized lagged-diffusivity metric ``sum_T w_T E_T`` with
        ``w_T = (|grad v|_T^2 + delta^2)^{(p-2)/2}``.

        This is the Picard linearization of the p-energy around ``v``;
        weights are floored at 1e-12 of their maximum to keep the matrix
        positive definite where the gradient vanishes.  Returns an object
        with ``.solve`` usable via :meth:`precond_solve`.
        """
        d2 = delta * delta
        if self.grid.dim == 1:
            g2 = ((v[1:] - v[:-1]) / self.h) ** 2 + d2
            wl = np.where(self.seg, g2 ** (p / 2.0 - 1.0), 0.0)
            wl = np.maximum(wl, 1e-12 * max(wl.max(), 1e-300))
            wu = None
            scale = float(np.mean(wl[self.seg])) if self.seg.any() else 1.0
        else:
            dxl, dyl, dxu, dyu = self._tri_grads(v)
            g2l = dxl**2 + dyl**2 + d2
            g2u = dxu**2 + dyu**2 + d2
            wl = np.where(self.tri_low, g2l ** (p / 2.0 - 1.0), 0.0)
            wu = np.where(self.tri_up, g2u ** (p / 2.0 - 1.0), 0.0)
            floor = 1e-12 * max(wl.max(), wu.max(), 1e-300)
            wl = np.maximum(wl, floor)
            wu = np.maximum(wu, floor)
            both = np.concatenate([wl[self.tri_low], wu[self.tri_up]])
            scale = float(np.mean(both)) if len(both) else 1.0
        return self._restrict_and_factor(self._assemble_stiffness(wl, wu),
                                         self._neumann_sigma() * scale)

    def precond_solve(self, grad: np.ndarray, factor=None) -> np.ndarray:
        """Apply an inverse metric (default: the p=2 stiffness, shifted for
        Neumann) to a gradient array; returns a full-shape array supported
        on the dofs."""
        if factor is None:
            factor = self._preconditioner()
        g = grad.ravel()[self.dof_index]
        d = factor.solve(g)
        out = np.zeros(int(np.prod(self.grid.shape)))
        out[self.dof_index] = d
        return out.reshape(self.grid.shape)

    def stiffness_apply(self, v: np.ndarray) -> np.ndarray:
        """A v with the full (5-point) stiffness; used by the p=2 direct solve."""
        _, g = self.energy_grad(v, 2.0, 0.0)
        return g


_CORE_CACHE: dict[tuple[int, str], VariationalCore] = {}


def make_core(grid: Grid, bc: str) -> VariationalCore:
    """Cached core per (grid identity, bc); grids are immutable."""
    key = (id(grid), bc)
    core = _CORE_CACHE.get(key)
    if core is None or core.grid is not grid:
        core = VariationalCore(grid, bc)
        _CORE_CACHE[key] = core
    return core
