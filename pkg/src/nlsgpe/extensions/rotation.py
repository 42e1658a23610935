"""Rotating GPE: i psi_t = -1/2 Lap psi + V psi + beta |psi|^2 psi - Omega L_z psi in 2D.

Two propagators are provided.

* :func:`rotation_adi_step` works in the laboratory frame on a doubly
  periodic box. The kinetic-rotation flow is split into an x-part (symbol
  kx^2/2 + Omega y kx, exact in Fourier-x for every y) and a y-part
  (ky^2/2 - Omega x ky), composed symmetrically with the phase sub-step.
* :func:`lagrangian_rotating_step` works in rotating Lagrangian coordinates
  x~ = A(t)^T x, where the angular momentum term disappears and the trap
  becomes W(x~, t) = V(A(t) x~). A plain time-splitting step then applies.
  :func:`lagrangian_to_eulerian` resamples such a field on the fixed nodes.

Both are posed with eps = 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from ..core import BC, Grid, ModelParams, Nonlinearity, Potential, WaveField
from ..schemes import SchemeState, _close, apply_half_phase, make_state, tssp_step

__all__ = ["rotation_matrix", "RotationFrame", "RotatingState", "make_rotating_state",
           "rotation_adi_step", "rotated_harmonic_integral", "lagrangian_rotating_step",
           "lagrangian_to_eulerian", "BoxTooSmallWarning"]

BOUNDARY_TOL = 1e-8

RotatingState = SchemeState


class BoxTooSmallWarning(UserWarning):
    pass


def rotation_matrix(omega: float, t: float, dim: int = 2) -> np.ndarray:
    """A(t) = ((cos, sin), (-sin, cos)) of angle omega*t; 3D adds a trivial z row."""
    c, s = np.cos(omega * t), np.sin(omega * t)
    if dim == 2:
        return np.array([[c, s], [-s, c]])
    if dim == 3:
        return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    raise ValueError("rotation matrices exist for dim 2 or 3")


@dataclass(frozen=True)
class RotationFrame:
    """Rotating frame of angular velocity ``omega``; x = A(t) x~."""

    omega: float
    dim: int = 2

    def A(self, t: float) -> np.ndarray:
        return rotation_matrix(self.omega, t, self.dim)

    def inverse(self, t: float) -> np.ndarray:
        return self.A(t).T

    def to_lagrangian(self, t, x, y):
        c, s = np.cos(self.omega * t), np.sin(self.omega * t)
        return c * x - s * y, s * x + c * y

    def to_eulerian(self, t, xt, yt):
        c, s = np.cos(self.omega * t), np.sin(self.omega * t)
        return c * xt + s * yt, -s * xt + c * yt


def make_rotating_state(grid: Grid) -> SchemeState:
    """Spectral state for either rotating propagator (2D grids only)."""
    if grid.dim != 2:
        raise ValueError("rotating propagators are built in 2D")
    return make_state("TSSP", grid)


def _check_box(state: SchemeState, values: np.ndarray):
    if state._cache.get("box_warned"):
        return
    peak = float(np.max(np.abs(values)))
    edge = max(float(np.max(np.abs(values[[0, -1], :]))), float(np.max(np.abs(values[:, [0, -1]]))))
    if edge > BOUNDARY_TOL * peak:
        state._cache["box_warned"] = True
        warnings.warn(f"field magnitude at the box boundary is {edge / max(peak, 1e-300):.2e} of its "
                      "maximum; enlarge the computational box", BoxTooSmallWarning, stacklevel=3)


def _fvals(values, beta):
    if beta == 0.0:
        return None
    return beta * (values.real**2 + values.imag**2)


def _adi_factors(state: SchemeState, omega: float, tau: float):
    key = ("adi", float(omega), float(tau))
    hit = state._cache.get(key)
    if hit is not None:
        return hit
    ax, ay = state.grid.axes
    kx, ky = ax.wavenumbers, ay.wavenumbers
    x = ax.nodes[:-1]
    y = ay.nodes[:-1]
    half = 0.5 * tau
    # x-part acts on (kx, y), y-part on (x, ky)
    fx = np.exp(-1j * half * (0.5 * kx[:, None] ** 2 + omega * kx[:, None] * y[None, :]))
    fy = np.exp(-1j * tau * (0.5 * ky[None, :] ** 2 - omega * x[:, None] * ky[None, :]))
    if len(state._cache) > 64:
        state._cache.clear()
    state._cache[key] = (fx, fy)
    return fx, fy


def rotation_adi_step(state: SchemeState, field: WaveField, params: ModelParams, potential: Potential,
                      tau: float) -> WaveField:
    """One Strang step P(tau/2) X(tau/2) Y(tau) X(tau/2) P(tau/2) on a periodic 2D box.

    P is the exact phase flow of V + beta|psi|^2, X and Y the exact flows of
    -1/2 d_xx - i Omega y d_x and -1/2 d_yy + i Omega x d_y in Fourier space.
    Warns once per state when the field is not negligible at the boundary.
    """
    grid = state.grid
    if grid.dim != 2 or any(ax.bc is not BC.PERIODIC for ax in grid.axes):
        raise ValueError("the ADI rotation step needs a doubly periodic 2D grid")
    if params.epsilon != 1.0:
        raise ValueError("the rotating model is posed with eps = 1")
    omega = params.omega_rot
    beta = params.beta
    _check_box(state, field.values)
    fx, fy = _adi_factors(state, omega, tau)
    v = apply_half_phase(state, field.values, potential, _fvals(field.values, beta), field.t, tau, 1.0)
    core = v[:-1, :-1]
    core = sfft.ifft(fx * sfft.fft(core, axis=0), axis=0)
    core = sfft.ifft(fy * sfft.fft(core, axis=1), axis=1)
    core = sfft.ifft(fx * sfft.fft(core, axis=0), axis=0)
    v = np.empty(grid.shape, dtype=complex)
    v[:-1, :-1] = core
    v[-1, :-1] = core[0]
    v[:, -1] = v[:, 0]
    v = apply_half_phase(state, v, potential, _fvals(v, beta), field.t + 0.5 * tau, tau, 1.0)
    return WaveField(grid, v, field.t + tau)


# ----------------------------------------------------------------------------
# rotating Lagrangian coordinates


def rotated_harmonic_integral(gammas, omega: float, t0: float, t1: float, xt, yt):
    """int_{t0}^{t1} W(x~, t) dt for V = (gx^2 x^2 + gy^2 y^2)/2 and x = A(t) x~.

    W = 1/2 [gp r~^2 + gm cos(2 Omega t)(x~^2 - y~^2) + 2 gm sin(2 Omega t) x~ y~]
    with gp, gm = (gx^2 +/- gy^2)/2, integrated in closed form.
    """
    cp, cm, cs = _harmonic_coefficients(gammas, omega, t0, t1)
    return cp * (xt**2 + yt**2) + cm * (xt**2 - yt**2) + cs * (xt * yt)


def _harmonic_coefficients(gammas, omega, t0, t1):
    """Weights of r~^2, x~^2 - y~^2 and x~ y~ in the W integral."""
    gx, gy = (float(gammas[0]), float(gammas[-1]))
    gp = 0.5 * (gx**2 + gy**2)
    gm = 0.5 * (gx**2 - gy**2)
    dt = t1 - t0
    if omega == 0.0:
        ic, is_ = dt, 0.0
    else:
        w = np.sin(omega * dt) / omega
        ic = np.cos(omega * (t0 + t1)) * w
        is_ = np.sin(omega * (t0 + t1)) * w
    return 0.5 * gp * dt, 0.5 * gm * ic, gm * is_


def _w_integral(state, frame: RotationFrame, potential: Potential, t0: float, t1: float):
    grid = state.grid
    xt, yt = grid.mesh
    if potential.is_harmonic:
        mono = state._cache.get("w_monomials")
        if mono is None:
            mono = state._cache["w_monomials"] = (xt**2 + yt**2, xt**2 - yt**2, xt * yt)
        cp, cm, cs = _harmonic_coefficients(potential.info["gammas"], frame.omega, t0, t1)
        out = cp * mono[0] + cm * mono[1] + cs * mono[2]
        return out + potential.offset * (t1 - t0) if potential.offset else out
    tm = 0.5 * (t0 + t1)
    x, y = frame.to_eulerian(tm, xt, yt)
    return potential.evaluate(x, y, t=tm) * (t1 - t0)


def _lagrangian_phase(state, values, frame, potential, beta, t0, t1):
    theta = -_w_integral(state, frame, potential, t0, t1)
    if beta != 0.0:
        theta = theta - (t1 - t0) * beta * (values.real**2 + values.imag**2)
    return values * (np.cos(theta) + 1j * np.sin(theta))


def lagrangian_rotating_step(state: SchemeState, field: WaveField, params: ModelParams,
                             potential: Potential, tau: float, nl: Nonlinearity | None = None) -> WaveField:
    """Time-splitting step for the field in rotating Lagrangian coordinates.

    The phase sub-steps integrate W(x~, t) = V(A(t) x~) exactly for a static
    harmonic V and by the midpoint rule otherwise. With Omega = 0 this is
    :func:`nlsgpe.schemes.tssp_step`.
    """
    if params.epsilon != 1.0:
        raise ValueError("the rotating model is posed with eps = 1")
    if state.grid.dim != 2:
        raise ValueError("Lagrangian rotating steps are built in 2D")
    nl = Nonlinearity.cubic(params.beta) if nl is None else nl
    if params.omega_rot == 0.0:
        return tssp_step(state, field, params, potential, nl, tau)
    if not nl.is_cubic and not nl.is_zero:
        raise ValueError("the rotating model uses a cubic nonlinearity")
    beta = 0.0 if nl.is_zero else nl.beta
    frame = RotationFrame(params.omega_rot)
    plan = state.plan
    t0 = field.t
    tm = t0 + 0.5 * tau
    v = _lagrangian_phase(state, field.values, frame, potential, beta, t0, tm)
    v = plan.inverse(plan.phase(tau, 1.0) * plan.forward(v))
    v = _lagrangian_phase(state, v, frame, potential, beta, tm, t0 + tau)
    return WaveField(state.grid, _close(state, v), t0 + tau)


def _basis_matrix(ax, p: np.ndarray) -> np.ndarray:
    """Values of the axis basis functions at points p, shape (len(p), n_modes)."""
    u = (p - ax.a)[:, None]
    k = ax.wavenumbers[None, :]
    if ax.bc is BC.DIRICHLET:
        return np.sin(k * u)
    if ax.bc is BC.NEUMANN:
        return np.cos(k * u)
    E = np.exp(1j * k * u)
    # Nyquist mode as a cosine so real band-limited data stay real
    E[:, ax.J // 2] = np.cos(k[0, ax.J // 2] * u[:, 0])
    return E


def lagrangian_to_eulerian(field: WaveField, omega: float, t: float | None = None,
                           chunk: int = 4096) -> WaveField:
    """Resample a Lagrangian-frame field on the fixed Cartesian nodes at time t.

    Evaluates the spectral (sine, cosine or Fourier) interpolant of the field at
    x~ = A(t)^T x for every node x. Points that leave the box get value 0 and
    trigger one warning. Cost is O(nodes * modes_x * modes_y).
    """
    grid = field.grid
    if grid.dim != 2:
        raise ValueError("lagrangian_to_eulerian works on 2D fields")
    t = field.t if t is None else t
    A = rotation_matrix(omega, t)
    if np.array_equal(A, np.eye(2)):
        return field.replace(values=field.values.copy())
    from ..transforms import SpectralPlan

    C = SpectralPlan(grid).forward(field.values)
    frame = RotationFrame(omega)
    X, Y = grid.mesh
    xt, yt = frame.to_lagrangian(t, X.ravel(), Y.ravel())
    ax, ay = grid.axes
    tol = 1e-12
    inside = ((xt >= ax.a - tol * ax.length) & (xt <= ax.b + tol * ax.length)
              & (yt >= ay.a - tol * ay.length) & (yt <= ay.b + tol * ay.length))
    if not np.all(inside):
        warnings.warn(f"{int(np.sum(~inside))} target nodes map outside the computational box; "
                      "their values are set to 0", BoxTooSmallWarning, stacklevel=2)
    out = np.zeros(xt.shape, dtype=complex)
    idx = np.flatnonzero(inside)
    CT = C.T
    for start in range(0, idx.size, chunk):
        sel = idx[start:start + chunk]
        Ex = _basis_matrix(ax, xt[sel])
        Ey = _basis_matrix(ay, yt[sel])
        out[sel] = np.sum(Ex * (Ey @ CT), axis=1)
    values = out.reshape(grid.shape)
    if grid.bc is BC.DIRICHLET:
        values[[0, -1], :] = 0.0
        values[:, [0, -1]] = 0.0
    return WaveField(grid, values, t)
