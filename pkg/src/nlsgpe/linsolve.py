"""Algebraic kernels for the implicit schemes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np
import scipy.fft as sfft

from .core import BC, Grid

__all__ = [
    "Tridiag",
    "TridiagFactor",
    "ZeroPivotError",
    "thomas_solve",
    "FixedPointPolicy",
    "FixedPointError",
    "fixed_point_solve",
    "ResonanceError",
    "fast_poisson_dst",
    "fd_laplacian_eigenvalues",
]


class ZeroPivotError(ArithmeticError):
    def __init__(self, index: int):
        super().__init__(f"zero pivot at row {index} in tridiagonal elimination")
        self.index = index


@dataclass(frozen=True)
class Tridiag:
    """Tridiagonal (optionally cyclic) complex matrix.

    All three arrays have length n. ``lower[i] = A[i, i-1]`` and
    ``upper[i] = A[i, i+1]``; for a cyclic matrix ``lower[0] = A[0, n-1]``
    and ``upper[n-1] = A[n-1, 0]``, otherwise those two entries are ignored.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    cyclic: bool = False

    def __post_init__(self):
        n = np.shape(self.diag)[0]
        for name in ("lower", "diag", "upper"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=complex)
            if arr.shape != (n,):
                raise ValueError(f"{name} has shape {arr.shape}, expected ({n},)")
            object.__setattr__(self, name, arr)
        if self.cyclic and n < 3:
            raise ValueError("cyclic tridiagonal systems need n >= 3")

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        y = self.diag * x
        y[1:] += self.lower[1:] * x[:-1]
        y[:-1] += self.upper[:-1] * x[1:]
        if self.cyclic:
            y[0] += self.lower[0] * x[-1]
            y[-1] += self.upper[-1] * x[0]
        return y

    def to_dense(self) -> np.ndarray:
        n = self.n
        m = np.diag(self.diag)
        m[np.arange(1, n), np.arange(n - 1)] = self.lower[1:]
        m[np.arange(n - 1), np.arange(1, n)] = self.upper[:-1]
        if self.cyclic:
            m[0, -1] += self.lower[0]
            m[-1, 0] += self.upper[-1]
        return m


@numba.njit(cache=True, nogil=True)
def _thomas_factor(a, b, c):
    n = b.shape[0]
    cp = np.empty(n, dtype=np.complex128)
    inv = np.empty(n, dtype=np.complex128)
    for i in range(n):
        piv = b[i]
        if i > 0:
            piv = piv - a[i] * cp[i - 1]
        scale = abs(b[i]) + (abs(a[i]) if i > 0 else 0.0) + (abs(c[i]) if i < n - 1 else 0.0)
        if not (abs(piv) > 1e-15 * scale) or not np.isfinite(piv.real) or not np.isfinite(piv.imag):
            return cp, inv, i
        inv[i] = 1.0 / piv
        cp[i] = c[i] * inv[i] if i < n - 1 else 0.0
    return cp, inv, -1


@numba.njit(cache=True, nogil=True)
def _thomas_apply(a, cp, inv, d):
    n = d.shape[0]
    x = np.empty(n, dtype=np.complex128)
    x[0] = d[0] * inv[0]
    for i in range(1, n):
        x[i] = (d[i] - a[i] * x[i - 1]) * inv[i]
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return x


class TridiagFactor:
    """Stored Thomas elimination of a (cyclic) tridiagonal matrix; reusable across rhs."""

    def __init__(self, m: Tridiag):
        self.m = m
        if not m.cyclic:
            self._core = self._factor(m.lower, m.diag, m.upper)
            return
        # Sherman-Morrison: A = B + u v^T with u = (gamma, 0.., upper[-1]), v = (1, 0.., lower[0]/gamma)
        n = m.n
        gamma = -m.diag[0] if m.diag[0] != 0 else -1.0
        diag = m.diag.copy()
        diag[0] -= gamma
        diag[-1] -= m.upper[-1] * m.lower[0] / gamma
        self._core = self._factor(m.lower, diag, m.upper)
        u = np.zeros(n, dtype=complex)
        u[0] = gamma
        u[-1] = m.upper[-1]
        self._v_last = m.lower[0] / gamma
        self._z = _thomas_apply(m.lower, *self._core, u)
        self._den = 1.0 + self._z[0] + self._v_last * self._z[-1]
        if self._den == 0:
            raise ZeroPivotError(0)

    @staticmethod
    def _factor(a, b, c):
        cp, inv, bad = _thomas_factor(a, b, c)
        if bad >= 0:
            raise ZeroPivotError(int(bad))
        return cp, inv

    def solve(self, rhs) -> np.ndarray:
        d = np.ascontiguousarray(rhs, dtype=complex)
        if d.shape != (self.m.n,):
            raise ValueError(f"rhs shape {d.shape} does not match system size {self.m.n}")
        y = _thomas_apply(self.m.lower, *self._core, d)
        if not self.m.cyclic:
            return y
        coef = (y[0] + self._v_last * y[-1]) / self._den
        return y - coef * self._z


def thomas_solve(m: Tridiag, rhs) -> np.ndarray:
    """Solve ``m x = rhs`` by the Thomas algorithm in O(n) (Sherman-Morrison if cyclic)."""
    return TridiagFactor(m).solve(rhs)


# ----------------------------------------------------------------------------
# Fixed-point driver


@dataclass(frozen=True)
class FixedPointPolicy:
    """Stopping rule for the per-step nonlinear solve.

    ``mode="fixed_point"`` iterates with the constant Crank-Nicolson operator
    and the nonlinear term lagged on the right-hand side; ``mode="newton"``
    (modified Newton) refreshes the nonlinear diagonal inside the operator on
    every sweep.
    """

    tol: float = 1e-12
    max_iter: int = 100
    mode: str = "fixed_point"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be >= 1")
        if self.mode not in ("fixed_point", "newton"):
            raise ValueError(f"unknown fixed-point mode {self.mode!r}")


class FixedPointError(RuntimeError):
    def __init__(self, last_iterate, residual, iterations):
        super().__init__(
            f"fixed-point iteration did not converge in {iterations} sweeps "
            f"(relative update {residual:.3e}); reduce tau"
        )
        self.last_iterate = last_iterate
        self.residual = residual
        self.iterations = iterations


def fixed_point_solve(update_map: Callable[[np.ndarray], np.ndarray], initial_guess,
                      policy: FixedPointPolicy = FixedPointPolicy()):
    """Iterate ``x <- update_map(x)`` until the relative update drops below ``policy.tol``.

    The first application of ``update_map`` is the initial solve; the returned
    iteration count is the number of refinement sweeps that followed it, so a
    map that does not depend on its argument reports 1.
    """
    x = update_map(np.asarray(initial_guess))
    residual = np.inf
    for k in range(1, int(policy.max_iter) + 1):
        x_new = update_map(x)
        scale = max(float(np.max(np.abs(x_new))), 1e-300)
        residual = float(np.max(np.abs(x_new - x))) / scale
        x = x_new
        if not np.isfinite(residual):
            break
        if residual <= policy.tol:
            return x, k
    raise FixedPointError(x, residual, int(policy.max_iter))


# ----------------------------------------------------------------------------
# Spectral fast solver for constant-coefficient Dirichlet operators


def fd_laplacian_eigenvalues(grid: Grid) -> np.ndarray:
    """Eigenvalues of the 3/5-point Dirichlet Laplacian on the sine modes (negative)."""
    lam = 0.0
    for axis, ax in enumerate(grid.axes):
        if ax.bc is not BC.DIRICHLET:
            raise ValueError("fast DST solves need homogeneous Dirichlet axes")
        l = np.arange(1, ax.J)
        la = -4.0 / ax.h**2 * np.sin(l * np.pi / (2 * ax.J)) ** 2
        shape = [1] * grid.dim
        shape[axis] = ax.J - 1
        lam = lam + la.reshape(shape)
    return np.asarray(lam)


_EIG_CACHE: dict = {}


def fast_poisson_dst(grid: Grid, diagonal_shift: complex, rhs, epsilon: float = 1.0,
                     laplacian_scale: complex | None = None) -> np.ndarray:
    """Solve (shift - eps^2/2 * Lap_h) u = rhs with homogeneous Dirichlet data.

    ``rhs`` is given on all nodes (boundary entries ignored); the solution has
    zero boundary values. ``laplacian_scale`` overrides the -eps^2/2 factor.
    """
    key = grid
    lam = _EIG_CACHE.get(key)
    if lam is None:
        lam = fd_laplacian_eigenvalues(grid)
        _EIG_CACHE[key] = lam
    coef = -0.5 * epsilon**2 if laplacian_scale is None else laplacian_scale
    denom = diagonal_shift + coef * lam
    if np.min(np.abs(denom)) <= 1e-13 * max(np.max(np.abs(denom)), 1e-300):
        raise ResonanceError("diagonal shift resonates with a Laplacian eigenvalue")
    r = np.asarray(rhs, dtype=complex)[(slice(1, -1),) * grid.dim]
    axes = tuple(range(grid.dim))
    c = sfft.dstn(r, type=1, axes=axes)
    u_hat = c / denom
    u = np.zeros(grid.shape, dtype=complex)
    u[(slice(1, -1),) * grid.dim] = sfft.idstn(u_hat, type=1, axes=axes)
    return u


class ResonanceError(ArithmeticError):
    pass
