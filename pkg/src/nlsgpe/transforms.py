"""Sine, cosine and Fourier transforms matched to the boundary conditions.

Normalizations (per axis, J intervals):

* sine:    c_l = (2/J) sum_{j=1}^{J-1} v_j sin(l j pi / J),  v_j = sum_l c_l sin(l j pi / J)
* cosine:  c_l = (2/J) sum''_j v_j cos(l j pi / J),          v_j = sum''_l c_l cos(l j pi / J)
  (double prime: first and last terms halved)
* fourier: c_l = (1/J) sum_{j=0}^{J-1} v_j exp(-i mu_l (x_j - a)), v_j = sum_l c_l exp(i mu_l (x_j - a))

Fields carry all J+1 nodes; the forward transform reads the active nodes for
the basis and the inverse writes them back (zero endpoints for sine, node J
copied from node 0 for fourier).
"""

from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from .core import BC, Grid

__all__ = ["SpectralPlan", "dst_forward", "dst_inverse", "kinetic_phase", "free_propagate"]

ENDPOINT_TOL = 1e-14


def _forward_axis(v, basis, J, axis):
    if axis != v.ndim - 1:
        return np.moveaxis(_forward_axis(np.moveaxis(v, axis, -1), basis, J, v.ndim - 1), -1, axis)
    if basis == "sine":
        return sfft.dst(v[..., 1:-1], type=1) / J
    if basis == "cosine":
        return sfft.dct(v, type=1) / J
    return sfft.fft(v[..., :-1]) / J


def _inverse_axis(c, basis, J, axis):
    if axis != c.ndim - 1:
        return np.moveaxis(_inverse_axis(np.moveaxis(c, axis, -1), basis, J, c.ndim - 1), -1, axis)
    v = np.empty(c.shape[:-1] + (J + 1,), dtype=complex)
    if basis == "sine":
        v[..., 0] = 0.0
        v[..., -1] = 0.0
        v[..., 1:-1] = sfft.dst(c, type=1)
        v[..., 1:-1] *= 0.5
    elif basis == "cosine":
        v[...] = sfft.dct(c, type=1)
        v *= 0.5
    else:
        v[..., :-1] = sfft.ifft(c) * J
        v[..., -1] = v[..., 0]
    return v


class SpectralPlan:
    """Transform plan for a grid; one basis per axis chosen from its boundary condition.

    Wavenumbers and kinetic multipliers are computed once and cached per tau.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        self.bases = tuple(ax.basis for ax in grid.axes)
        self.wavenumbers = tuple(ax.wavenumbers for ax in grid.axes)
        mesh = np.meshgrid(*self.wavenumbers, indexing="ij")
        self.mu2 = sum(m**2 for m in mesh)
        self._phase_cache: dict[tuple[float, float], np.ndarray] = {}
        # one multi-axis call for pure sine plans in 2D
        self._all_sine = grid.dim > 1 and all(b == "sine" for b in self.bases)
        self._volume = float(np.prod([ax.J for ax in grid.axes]))

    @property
    def basis(self) -> str:
        return self.bases[0] if len(set(self.bases)) == 1 else "mixed"

    def forward(self, v, axes=None) -> np.ndarray:
        c = np.asarray(v, dtype=complex)
        if axes is None and self._all_sine:
            core = (slice(1, -1),) * self.grid.dim
            return sfft.dstn(c[core], type=1) / self._volume
        for axis in range(self.grid.dim) if axes is None else axes:
            c = _forward_axis(c, self.bases[axis], self.grid.axes[axis].J, axis)
        return c

    def inverse(self, c, axes=None) -> np.ndarray:
        v = np.asarray(c, dtype=complex)
        if axes is None and self._all_sine:
            out = np.zeros(self.grid.shape, dtype=complex)
            out[(slice(1, -1),) * self.grid.dim] = sfft.dstn(v, type=1) * 0.5**self.grid.dim
            return out
        for axis in range(self.grid.dim) if axes is None else axes:
            v = _inverse_axis(v, self.bases[axis], self.grid.axes[axis].J, axis)
        return v

    def phase(self, tau: float, epsilon: float) -> np.ndarray:
        key = (float(tau), float(epsilon))
        ph = self._phase_cache.get(key)
        if ph is None:
            if len(self._phase_cache) > 16:
                self._phase_cache.clear()
            ph = np.exp(-0.5j * tau * epsilon * self.mu2)
            self._phase_cache[key] = ph
        return ph


def _require_sine(plan: SpectralPlan):
    if any(b != "sine" for b in plan.bases):
        raise ValueError("dst_* operate on Dirichlet (sine) plans only")


def dst_forward(plan: SpectralPlan, v) -> np.ndarray:
    """Sine coefficients l = 1..J-1 of a field with zero endpoints."""
    _require_sine(plan)
    v = np.asarray(v, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(v)))) if v.size else 1.0
    for axis in range(v.ndim):
        ends = np.take(v, [0, -1], axis=axis)
        if np.max(np.abs(ends)) > ENDPOINT_TOL * scale:
            raise ValueError("nonzero boundary values in a Dirichlet field")
    return plan.forward(v)


def dst_inverse(plan: SpectralPlan, coeffs) -> np.ndarray:
    _require_sine(plan)
    return plan.inverse(coeffs)


def kinetic_phase(plan: SpectralPlan, tau: float, epsilon: float) -> np.ndarray:
    """Diagonal multiplier exp(-i tau eps mu_l^2 / 2) in coefficient space."""
    return plan.phase(tau, epsilon)


def free_propagate(plan: SpectralPlan, v, tau: float, epsilon: float) -> np.ndarray:
    """Exact free Schrodinger flow of the spectral interpolant over time tau."""
    return plan.inverse(plan.phase(tau, epsilon) * plan.forward(v))


def spectral_mass_weights(grid: Grid) -> np.ndarray:
    """Parseval weights so that the nodal mass equals sum w_l |c_l|^2.

    Per axis: sine (b-a)/2; cosine (b-a)/2 with (b-a)/4 at l = 0, J; fourier (b-a).
    """
    w = np.ones(())
    for ax in grid.axes:
        if ax.bc is BC.DIRICHLET:
            wa = np.full(ax.J - 1, 0.5 * ax.length)
        elif ax.bc is BC.NEUMANN:
            wa = np.full(ax.J + 1, 0.5 * ax.length)
            wa[0] = wa[-1] = 0.25 * ax.length
        else:
            wa = np.full(ax.J, ax.length)
        w = np.multiply.outer(w, wa)
    return w
