"""Damped NLSE/GPE: i psi_t = -1/2 Lap psi + V psi + f(|psi|^2) psi - i g(|psi|^2) psi.

Along the phase sub-step the density obeys rho' = -2 g(rho) rho, which has a
closed-form solution for the three damping laws; the phase is the time
integral of V + f(rho(t)). Both pieces are exact for cubic f and the phase
integral falls back to composite Simpson quadrature for other f.
"""

from __future__ import annotations

import numpy as np

from ..core import Damping, ModelParams, Nonlinearity, Potential, WaveField
from ..schemes import SchemeState, _close, _potential, tssp_step

__all__ = ["DampingKind", "damped_density", "damped_amplitude", "damped_phase_integral",
           "damped_phase_substep", "damped_tssp_step"]

# The damping law type lives in core so ModelParams can carry it.
DampingKind = Damping

SIMPSON_PANELS = 256


def _check(rho_n, s):
    rho_n = np.asarray(rho_n, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(rho_n < 0):
        raise ValueError("density must be nonnegative")
    if np.any(s < 0):
        raise ValueError("sub-step length must be nonnegative")
    return rho_n, s


def damped_density(rho_n, s, kind: Damping):
    """Exact solution of rho' = -2 g(rho) rho after time s.

    linear: rho e^{-2 delta s}; cubic: rho/(1 + 2 delta1 rho s);
    quintic: rho/sqrt(1 + 4 delta2 rho^2 s).
    """
    rho_n, s = _check(rho_n, s)
    d = kind.coefficient
    if kind.kind == "none" or d == 0.0:
        return rho_n * np.ones_like(s)
    if kind.kind == "linear":
        return rho_n * np.exp(-2.0 * d * s)
    if kind.kind == "cubic":
        return rho_n / (1.0 + 2.0 * d * rho_n * s)
    return rho_n / np.sqrt(1.0 + 4.0 * d * rho_n**2 * s)


def damped_amplitude(rho_n, s, kind: Damping):
    """sqrt(rho(s)/rho_n), finite at rho_n = 0."""
    rho_n, s = _check(rho_n, s)
    d = kind.coefficient
    if kind.kind == "none" or d == 0.0:
        return np.ones(np.broadcast(rho_n, s).shape)
    if kind.kind == "linear":
        return np.exp(-d * s) * np.ones_like(rho_n)
    if kind.kind == "cubic":
        return 1.0 / np.sqrt(1.0 + 2.0 * d * rho_n * s)
    return (1.0 + 4.0 * d * rho_n**2 * s) ** -0.25


def damped_phase_integral(rho_n, s, kind: Damping, nl: Nonlinearity):
    """int_0^s f(rho(u)) du along the damped density.

    Closed forms for cubic f = beta rho, written to stay accurate as the
    damping coefficient or rho s goes to zero; Simpson quadrature otherwise.
    """
    rho_n, s = _check(rho_n, s)
    d = kind.coefficient
    if kind.kind == "none" or d == 0.0:
        return np.asarray(nl.f(rho_n), dtype=float) * s
    if not nl.is_cubic:
        return _simpson(rho_n, s, kind, nl, SIMPSON_PANELS)
    beta = nl.beta
    if kind.kind == "linear":
        return -beta * rho_n * np.expm1(-2.0 * d * s) / (2.0 * d)
    if kind.kind == "cubic":
        y = 2.0 * d * rho_n * s
        return beta * rho_n * s * _log1p_over(y)
    y = 4.0 * d * rho_n**2 * s
    return beta * 2.0 * rho_n * s / (1.0 + np.sqrt(1.0 + y))


def _simpson(rho_n, s, kind, nl, n):
    """Composite Simpson rule on n panels, accumulated node by node in time to bound memory."""
    acc = np.zeros(np.broadcast(rho_n, s).shape)
    for i in range(n + 1):
        w = 1.0 if i in (0, n) else (4.0 if i % 2 else 2.0)
        acc += w * np.asarray(nl.f(damped_density(rho_n, s * (i / n), kind)), dtype=float)
    return s * acc / (3.0 * n)


def _log1p_over(y):
    y = np.asarray(y, dtype=float)
    out = np.ones_like(y)
    big = y > 1e-8
    out[big] = np.log1p(y[big]) / y[big]
    small = ~big
    out[small] = 1.0 - 0.5 * y[small]
    return out


def damped_phase_substep(values, V, nl: Nonlinearity, kind: Damping, s: float):
    """Exact nodal flow of i psi' = (V + f(rho)) psi - i g(rho) psi over time s >= 0.

    Parameters
    ----------
    values : ndarray or WaveField
        Nodal values. A WaveField is advanced to ``t + s`` and returned as one.
    V : ndarray or Potential
        Potential values (complex allowed: an imaginary part adds linear
        decay), or a static Potential evaluated on the field's grid.
    """
    if isinstance(values, WaveField):
        field = values
        pot = V.on(field.grid, field.t) if isinstance(V, Potential) else V
        return field.replace(values=damped_phase_substep(field.values, pot, nl, kind, s), t=field.t + s)
    values = np.asarray(values, dtype=complex)
    rho = values.real**2 + values.imag**2
    amp = damped_amplitude(rho, s, kind)
    theta = -(np.asarray(V) * s + damped_phase_integral(rho, s, kind, nl))
    return values * amp * np.exp(1j * theta)


def damped_tssp_step(state: SchemeState, field: WaveField, params: ModelParams, potential: Potential,
                     nl: Nonlinearity, kind: Damping | None, tau: float) -> WaveField:
    """Strang splitting for the damped equation: damped phase (tau/2), kinetic, damped phase (tau/2).

    With no active damping this is :func:`nlsgpe.schemes.tssp_step` itself.
    Requires eps = 1 (the damped model is posed in those units) and tau > 0,
    since the damped flow is not reversible.
    """
    kind = kind if kind is not None else params.damping
    if not kind.active:
        return tssp_step(state, field, params, potential, nl, tau)
    if params.epsilon != 1.0:
        raise ValueError("the damped model is posed with eps = 1")
    if not tau > 0:
        raise ValueError("damped steps need tau > 0")
    if state.plan is None:
        raise ValueError("damped_tssp_step needs a TSSP state")
    plan = state.plan
    half = 0.5 * tau
    V0 = _potential(state, potential, field.t + 0.25 * tau)
    v = damped_phase_substep(field.values, V0, nl, kind, half)
    v = plan.inverse(plan.phase(tau, 1.0) * plan.forward(v))
    V1 = _potential(state, potential, field.t + 0.75 * tau)
    v = damped_phase_substep(v, V1, nl, kind, half)
    return WaveField(state.grid, _close(state, v), field.t + tau)
