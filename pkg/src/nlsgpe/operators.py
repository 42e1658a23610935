"""Finite-difference Laplacians on the active node set of a grid.

In 1D the operator is an explicit (cyclic) tridiagonal matrix, so any
``alpha I + beta L + diag(D)`` system is solved directly by the Thomas
algorithm. In 2D (Dirichlet only) constant-coefficient systems go through
the DST fast solver; a variable diagonal has to be handled by the caller
(lagged into a fixed-point iteration).
"""

from __future__ import annotations

import numpy as np

from .core import BC, Grid
from .linsolve import Tridiag, TridiagFactor, fast_poisson_dst


def fd_laplacian_1d(grid: Grid) -> Tridiag:
    """Second difference D2 on the active unknowns of a 1D grid.

    Dirichlet: nodes 1..J-1. Periodic: nodes 0..J-1, cyclic. Neumann: nodes
    0..J with mirror ghosts psi_{-1} = psi_1, psi_{J+1} = psi_{J-1}.
    """
    ax = grid.axes[0]
    h2 = ax.h**2
    if ax.bc is BC.DIRICHLET:
        n = ax.J - 1
    elif ax.bc is BC.PERIODIC:
        n = ax.J
    else:
        n = ax.J + 1
    lower = np.full(n, 1.0 / h2, dtype=complex)
    upper = np.full(n, 1.0 / h2, dtype=complex)
    diag = np.full(n, -2.0 / h2, dtype=complex)
    if ax.bc is BC.NEUMANN:
        upper[0] = 2.0 / h2
        lower[-1] = 2.0 / h2
    return Tridiag(lower, diag, upper, cyclic=ax.bc is BC.PERIODIC)


class FDSpace:
    """Active unknowns and Laplacian for the finite-difference schemes."""

    def __init__(self, grid: Grid, laplacian: Tridiag | None = None):
        self.grid = grid
        self.dim = grid.dim
        if self.dim == 1:
            self.bc = grid.axes[0].bc
            self.L = fd_laplacian_1d(grid) if laplacian is None else laplacian
            J = grid.axes[0].J
            self.active = {
                BC.DIRICHLET: slice(1, J),
                BC.PERIODIC: slice(0, J),
                BC.NEUMANN: slice(0, J + 1),
            }[self.bc]
            if self.L.n != self.active.stop - self.active.start:
                raise ValueError("Laplacian size does not match the active node count")
        else:
            if any(ax.bc is not BC.DIRICHLET for ax in grid.axes):
                raise NotImplementedError("2D finite-difference schemes support Dirichlet grids only")
            if laplacian is not None:
                raise NotImplementedError("custom 2D Laplacians are not supported")
            self.bc = BC.DIRICHLET
            self.L = None
            self.active = (slice(1, -1),) * self.dim
        self._factors: dict = {}

    @property
    def supports_diagonal(self) -> bool:
        return self.dim == 1

    def restrict(self, values: np.ndarray) -> np.ndarray:
        return np.array(values[self.active], dtype=complex)

    def extend(self, active: np.ndarray) -> np.ndarray:
        out = np.zeros(self.grid.shape, dtype=complex)
        out[self.active] = active
        if self.dim == 1 and self.bc is BC.PERIODIC:
            out[-1] = out[0]
        return out

    def lap(self, u: np.ndarray) -> np.ndarray:
        if self.dim == 1:
            return self.L.matvec(u)
        hx, hy = self.grid.h
        p = np.zeros((u.shape[0] + 2, u.shape[1] + 2), dtype=complex)
        p[1:-1, 1:-1] = u
        return ((p[2:, 1:-1] - 2.0 * u + p[:-2, 1:-1]) / hx**2
                + (p[1:-1, 2:] - 2.0 * u + p[1:-1, :-2]) / hy**2)

    def apply(self, alpha, beta, u, D=None) -> np.ndarray:
        """(alpha I + beta L + diag(D)) u on the active set."""
        out = alpha * u + beta * self.lap(u)
        if D is not None:
            out = out + D * u
        return out

    def solver(self, alpha: complex, beta: complex, D=None, key=None):
        """Return ``solve(rhs)`` for (alpha I + beta L + diag(D)); cached when ``key`` is given."""
        if key is not None:
            hit = self._factors.get(key)
            if hit is not None:
                return hit
        if self.dim == 1:
            diag = alpha + beta * self.L.diag
            if D is not None:
                diag = diag + D
            fac = TridiagFactor(Tridiag(beta * self.L.lower, diag, beta * self.L.upper,
                                        cyclic=self.L.cyclic))
            solve = fac.solve
        else:
            if D is not None:
                raise NotImplementedError("variable diagonals need an outer iteration in 2D")
            grid = self.grid

            def solve(rhs, _a=alpha, _b=beta):
                full = np.zeros(grid.shape, dtype=complex)
                full[self.active] = rhs
                return fast_poisson_dst(grid, _a, full, laplacian_scale=_b)[self.active]

        if key is not None:
            if len(self._factors) > 32:
                self._factors.clear()
            self._factors[key] = solve
        return solve
