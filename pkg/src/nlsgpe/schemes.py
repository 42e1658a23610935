"""Time-stepping schemes for the NLSE/GPE.

Every scheme follows one contract::

    new_field = <scheme>_step(state, field, params, potential, nl, tau)

The :class:`SchemeState` carries whatever history or cached operators the
scheme needs (previous level for the leap-frog type schemes, the relaxation
variable for ReFD, factorized operators, the spectral plan). Negative ``tau``
steps backward in time; :func:`reflect_state` prepares a state for running a
trajectory in reverse.

Finite-difference schemes work on the active unknowns of the grid: interior
nodes for Dirichlet, nodes 0..J-1 (cyclic) for periodic, all nodes with mirror
ghosts for Neumann. In 2D only Dirichlet grids are supported, and constant
coefficient implicit operators are inverted with the DST fast solver.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .core import BC, Grid, ModelParams, Nonlinearity, Potential, WaveField, enforce_bc
from .linsolve import FixedPointPolicy, Tridiag, fixed_point_solve
from .operators import FDSpace
from .transforms import SpectralPlan

__all__ = [
    "SCHEMES",
    "SchemeState",
    "InstabilityError",
    "StabilityWarning",
    "make_state",
    "reflect_state",
    "step",
    "cnfd_step",
    "refd_step",
    "sifd_step",
    "tssp_step",
    "tsfd_step",
    "ssfd_step",
    "lpfd_step",
    "stability_limit",
    "Stepper",
]

SCHEMES = ("CNFD", "ReFD", "SIFD-A", "SIFD-B", "TSSP", "TSFD", "SSFD", "LPFD")
TWO_LEVEL = ("SIFD-A", "SIFD-B", "LPFD")
BLOWUP_FACTOR = 1e6


class InstabilityError(RuntimeError):
    """The numerical solution blew up (sup norm grew past the detection threshold)."""


class StabilityWarning(UserWarning):
    pass


def canonical_scheme(tag: str) -> str:
    lookup = {s.upper(): s for s in SCHEMES}
    lookup["SIFD"] = "SIFD-A"
    key = str(tag).strip().upper()
    if key not in lookup:
        raise ValueError(f"unknown scheme {tag!r}; expected one of {SCHEMES}")
    return lookup[key]


@dataclass
class SchemeState:
    """Per-run mutable state of a scheme (single writer).

    Attributes
    ----------
    variant : str
        Scheme tag from :data:`SCHEMES`.
    prev_field : WaveField or None
        Previous time level for SIFD/LPFD; ``None`` until the first step.
    relax_u : ndarray or None
        ReFD relaxation variable u^{n-1/2} on all nodes.
    policy : FixedPointPolicy
        Inner solve policy for CNFD/SSFD (and 2D iterative solves).
    plan : SpectralPlan or None
        Transform plan (TSSP).
    space : FDSpace or None
        Finite-difference operator set (all FD schemes and TSFD).
    absorb : ndarray or None
        Nonnegative absorption profile; the effective potential is V - i*absorb.
    """

    variant: str
    grid: Grid
    policy: FixedPointPolicy = dc_field(default_factory=FixedPointPolicy)
    plan: SpectralPlan | None = None
    space: FDSpace | None = None
    prev_field: WaveField | None = None
    relax_u: np.ndarray | None = None
    absorb: np.ndarray | None = None
    sup0: float | None = None
    last_iterations: int = 0
    stability_warnings: list = dc_field(default_factory=list)
    _cache: dict = dc_field(default_factory=dict, repr=False)


def make_state(variant: str, grid: Grid, *, policy: FixedPointPolicy | None = None,
               laplacian: Tridiag | None = None, absorb=None) -> SchemeState:
    """Create the state for ``variant`` on ``grid``.

    ``laplacian`` replaces the standard second difference on the active set
    (used for the PML-stretched operator); ``absorb`` is a nonnegative
    profile on all nodes added as -i*absorb to the potential.
    """
    variant = canonical_scheme(variant)
    st = SchemeState(variant, grid, policy=policy or FixedPointPolicy())
    if variant == "TSSP":
        if laplacian is not None:
            raise ValueError("TSSP cannot use a stretched (PML) Laplacian")
        st.plan = SpectralPlan(grid)
    else:
        st.space = FDSpace(grid, laplacian)
    if absorb is not None:
        absorb = np.asarray(absorb, dtype=float)
        if absorb.shape != grid.shape:
            raise ValueError("absorption profile must match the grid shape")
        if np.any(absorb < 0):
            raise ValueError("absorption profile must be nonnegative")
        st.absorb = absorb
    return st


# ----------------------------------------------------------------------------
# helpers


def _potential(state: SchemeState, potential: Potential, t: float) -> np.ndarray:
    """Effective (possibly complex) potential on all nodes at time t, cached if static."""
    if not potential.time_dependent:
        hit = state._cache.get("V")
        if hit is not None and hit[0] is potential:
            return hit[1]
    V = potential.on(state.grid, t)
    if state.absorb is not None:
        V = V - 1j * state.absorb
    if not potential.time_dependent:
        state._cache["V"] = (potential, V)
    return V


def _solver(state, name, tau, potential, alpha, beta, D=None, t=None):
    """Cached factorization keyed by scheme part, tau and the potential identity."""
    space = state.space
    if D is not None and potential is not None and potential.time_dependent:
        return space.solver(alpha, beta, D)
    key = (name, float(tau), id(potential))
    hit = state._cache.get(key)
    if hit is not None and hit[0] is potential:
        return hit[1]
    solve = space.solver(alpha, beta, D)
    state._cache[key] = (potential, solve)
    return solve


def _check_blowup(state: SchemeState, values: np.ndarray, tau: float):
    sup = float(np.max(np.abs(values)))
    if not np.isfinite(sup) or (state.sup0 is not None and sup > BLOWUP_FACTOR * max(state.sup0, 1e-300)):
        h = min(state.grid.h)
        raise InstabilityError(
            f"{state.variant} blew up (sup norm {sup:.3e}); tau/h^2 = {abs(tau) / h**2:.4g}"
        )


def _init_sup(state: SchemeState, field: WaveField):
    if state.sup0 is None:
        state.sup0 = float(np.max(np.abs(field.values)))


def _finish(state: SchemeState, active: np.ndarray, t: float) -> WaveField:
    return WaveField(state.grid, state.space.extend(active), t)


# ----------------------------------------------------------------------------
# Crank-Nicolson family: unknown s = psi^{n+1} + psi^n
#   [I - (i tau eps/4) L + (i tau/(2 eps)) (V + N(s))] s = 2 psi^n


def _cn_family_step(state, field, params, potential, nl, tau, nonlin: Callable):
    eps = params.epsilon
    sp = state.space
    psi = sp.restrict(field.values)
    V = sp.restrict(_potential(state, potential, field.t + 0.5 * tau))
    cV = 1j * tau / (2.0 * eps)
    beta_L = -1j * tau * eps / 4.0
    rhs0 = 2.0 * psi
    newton = state.policy.mode == "newton" and sp.supports_diagonal
    if sp.supports_diagonal:
        solve0 = _solver(state, "cn", tau, potential, 1.0, beta_L, cV * V)
        Vexp = 0.0
    else:
        solve0 = _solver(state, "cn-free", tau, None, 1.0, beta_L)
        Vexp = V

    if nl.is_zero and not (not sp.supports_diagonal and np.any(V != 0)):
        s = solve0(rhs0)
        state.last_iterations = 1
        return _finish(state, s - psi, field.t + tau)

    if newton:
        def update(s):
            return sp.solver(1.0, beta_L, cV * (V + nonlin(s, psi)))(rhs0)
    else:
        def update(s):
            return solve0(rhs0 - cV * (Vexp + nonlin(s, psi)) * s)

    s, its = fixed_point_solve(update, rhs0, state.policy)
    state.last_iterations = its
    return _finish(state, s - psi, field.t + tau)


def cnfd_step(state, field, params, potential, nl, tau) -> WaveField:
    """Crank-Nicolson FD step; the nonlinearity enters through G(|psi^{n+1}|^2, |psi^n|^2)."""
    rho_n = np.abs(state.space.restrict(field.values)) ** 2

    def nonlin(s, psi):
        return nl.G(np.abs(s - psi) ** 2, rho_n)

    return _cn_family_step(state, field, params, potential, nl, tau, nonlin)


def ssfd_step(state, field, params, potential, nl, tau) -> WaveField:
    """Midpoint (Sanz-Serna) FD step with f evaluated at |(psi^{n+1}+psi^n)/2|^2."""

    def nonlin(s, psi):
        return nl.f(0.25 * np.abs(s) ** 2)

    return _cn_family_step(state, field, params, potential, nl, tau, nonlin)


def refd_step(state, field, params, potential, nl, tau) -> WaveField:
    """Relaxation FD step: u^{n+1/2} = 2 f(|psi^n|^2) - u^{n-1/2}, then one linear CN solve."""
    eps = params.epsilon
    sp = state.space
    if state.relax_u is None:
        state.relax_u = np.asarray(nl.f(field.density), dtype=float)
    u_new = 2.0 * np.asarray(nl.f(field.density), dtype=float) - state.relax_u
    psi = sp.restrict(field.values)
    V = sp.restrict(_potential(state, potential, field.t + 0.5 * tau))
    U = sp.restrict(u_new)
    cV = 1j * tau / (2.0 * eps)
    beta_L = -1j * tau * eps / 4.0
    rhs0 = 2.0 * psi
    if sp.supports_diagonal:
        s = sp.solver(1.0, beta_L, cV * (V + U))(rhs0)
        state.last_iterations = 1
    else:
        solve0 = _solver(state, "cn-free", tau, None, 1.0, beta_L)
        W = cV * (V + U)
        s, state.last_iterations = fixed_point_solve(lambda s: solve0(rhs0 - W * s), rhs0, state.policy)
    state.relax_u = u_new
    return _finish(state, s - psi, field.t + tau)


# ----------------------------------------------------------------------------
# leap-frog type schemes


def _first_step(state, field, params, potential, nl, tau) -> WaveField:
    """Explicit Euler start psi^1 = psi^0 - (i tau/eps) H psi^0."""
    eps = params.epsilon
    sp = state.space
    psi = sp.restrict(field.values)
    V = sp.restrict(_potential(state, potential, field.t))
    f = sp.restrict(nl.f(field.density))
    H = -0.5 * eps**2 * sp.lap(psi) + (V + f) * psi
    return _finish(state, psi - (1j * tau / eps) * H, field.t + tau)


def stability_limit(field: WaveField, params: ModelParams, potential: Potential,
                    nl: Nonlinearity, variant: str = "A") -> float:
    """Guideline time step 1/(eps max|V + f|) (variant A) or 1/(eps max|f|) (variant B)."""
    f = np.asarray(nl.f(field.density), dtype=float)
    if str(variant).upper().endswith("A"):
        f = f + potential.on(field.grid, field.t)
    m = float(np.max(np.abs(f)))
    return np.inf if m == 0 else 1.0 / (params.epsilon * m)


def _two_level(state, field, params, potential, nl, tau, advance):
    _init_sup(state, field)
    prev = state.prev_field
    if prev is None:
        new = _first_step(state, field, params, potential, nl, tau)
    else:
        if abs((field.t - prev.t) - tau) > 1e-9 * max(abs(tau), 1e-300) + 1e-12 * abs(field.t):
            raise ValueError(
                f"history lag {field.t - prev.t!r} does not match tau={tau!r}; "
                "reset the state or reflect it before changing the step"
            )
        new = advance(prev, field)
    _check_blowup(state, new.values, tau)
    state.prev_field = field
    return new


def sifd_step(state, field, params, potential, nl, tau, variant: str | None = None) -> WaveField:
    """Semi-implicit FD (leap-frog nonlinearity, CN Laplacian).

    Variant A treats V explicitly; variant B averages V over psi^{n+1}, psi^{n-1}.
    A step larger than :func:`stability_limit` issues a :class:`StabilityWarning`.
    """
    if variant is None:
        variant = state.variant[-1] if state.variant.startswith("SIFD") else "A"
    variant = str(variant).upper()[-1]
    if variant not in "AB":
        raise ValueError(f"unknown SIFD variant {variant!r}")
    eps = params.epsilon
    sp = state.space
    limit = stability_limit(field, params, potential, nl, variant)
    if abs(tau) > limit:
        msg = f"SIFD-{variant}: |tau|={abs(tau):.3e} exceeds the stability estimate {limit:.3e}"
        state.stability_warnings.append(msg)
        warnings.warn(msg, StabilityWarning, stacklevel=2)

    def advance(prev, cur):
        psi_m = sp.restrict(prev.values)
        psi = sp.restrict(cur.values)
        V = sp.restrict(_potential(state, potential, cur.t))
        f = sp.restrict(nl.f(cur.density))
        bL = 1j * tau * eps / 2.0
        if variant == "A":
            solve = _solver(state, "sifd-a", tau, None, 1.0, -bL)
            rhs = sp.apply(1.0, bL, psi_m) - (2j * tau / eps) * (V + f) * psi
            new = solve(rhs)
        else:
            cV = 1j * tau / eps
            rhs = sp.apply(1.0, bL, psi_m, -cV * V) - (2j * tau / eps) * f * psi
            if sp.supports_diagonal:
                new = _solver(state, "sifd-b", tau, potential, 1.0, -bL, cV * V)(rhs)
            else:
                solve0 = _solver(state, "sifd-a", tau, None, 1.0, -bL)
                new, state.last_iterations = fixed_point_solve(
                    lambda u: solve0(rhs - cV * V * u), psi, state.policy)
        return _finish(state, new, cur.t + tau)

    return _two_level(state, field, params, potential, nl, tau, advance)


def _lpfd_warn(state, tau, eps):
    h = min(state.grid.h)
    cfl = h**2 / (2.0 * eps * state.grid.dim)
    if abs(tau) > cfl and not state._cache.get("lpfd-warned"):
        msg = f"LPFD: |tau|/h^2 = {abs(tau) / h**2:.3g} exceeds the explicit limit {cfl / h**2:.3g}"
        state.stability_warnings.append(msg)
        state._cache["lpfd-warned"] = True
        warnings.warn(msg, StabilityWarning, stacklevel=3)


def lpfd_step(state, field, params, potential, nl, tau) -> WaveField:
    """Explicit leap-frog FD step; warns when |tau| > h^2/(2 eps), raises on blow-up."""
    eps = params.epsilon
    sp = state.space
    _lpfd_warn(state, tau, eps)

    def advance(prev, cur):
        psi_m = sp.restrict(prev.values)
        psi = sp.restrict(cur.values)
        V = sp.restrict(_potential(state, potential, cur.t))
        f = sp.restrict(nl.f(cur.density))
        H = -0.5 * eps**2 * sp.lap(psi) + (V + f) * psi
        return _finish(state, psi_m - (2j * tau / eps) * H, cur.t + tau)

    return _two_level(state, field, params, potential, nl, tau, advance)


# ----------------------------------------------------------------------------
# splitting schemes


def _potential_phase(state, potential, t0, tau, eps):
    """exp(-i int_{t0}^{t0+tau/2} V dt / eps) on all nodes, or None when V vanishes.

    Time-dependent potentials use the midpoint rule over the half step.
    """
    key = ("vphase", float(tau), float(eps))
    if not potential.time_dependent:
        hit = state._cache.get(key)
        if hit is not None and hit[0] is potential:
            return hit[1]
    V = _potential(state, potential, t0 + 0.25 * tau)
    ph = None if not np.any(V) else np.exp(-0.5j * tau * V / eps)
    if not potential.time_dependent:
        state._cache[key] = (potential, ph)
    return ph


def apply_half_phase(state, values, potential, fvals, t0, tau, eps):
    """values * exp(-i (tau/2) [V + fvals] / eps); ``fvals=None`` skips the nonlinear factor.

    The density is frozen along the phase flow, so the factor is exact for
    real V; the potential part is cached for static potentials.
    """
    ph = _potential_phase(state, potential, t0, tau, eps)
    out = values if ph is None else values * ph
    if fvals is not None:
        theta = (-0.5 * tau / eps) * np.asarray(fvals, dtype=float)
        out = out * (np.cos(theta) + 1j * np.sin(theta))
    return out


def _half_phase(state, values, potential, nl, t0, tau, eps):
    fvals = None if nl.is_zero else nl.f(values.real**2 + values.imag**2)
    return apply_half_phase(state, values, potential, fvals, t0, tau, eps)


def _close(state, v):
    if state.grid.dim == 1 and state.grid.axes[0].bc is BC.DIRICHLET:
        v[0] = v[-1] = 0.0
        return v
    return enforce_bc(state.grid, v)


def tssp_step(state, field, params, potential, nl, tau) -> WaveField:
    """Strang splitting: half phase, exact spectral free flight, half phase."""
    eps = params.epsilon
    plan = state.plan
    v = _half_phase(state, field.values, potential, nl, field.t, tau, eps)
    v = plan.inverse(plan.phase(tau, eps) * plan.forward(v))
    v = _half_phase(state, v, potential, nl, field.t + 0.5 * tau, tau, eps)
    return WaveField(state.grid, _close(state, v), field.t + tau)


def tsfd_step(state, field, params, potential, nl, tau) -> WaveField:
    """Strang splitting with a Crank-Nicolson finite-difference free flight."""
    eps = params.epsilon
    sp = state.space
    v = _half_phase(state, field.values, potential, nl, field.t, tau, eps)
    bL = 1j * tau * eps / 4.0
    u = sp.restrict(v)
    u = _solver(state, "tsfd", tau, None, 1.0, -bL)(sp.apply(1.0, bL, u))
    v = _half_phase(state, sp.extend(u), potential, nl, field.t + 0.5 * tau, tau, eps)
    return WaveField(state.grid, _close(state, v), field.t + tau)


# ----------------------------------------------------------------------------
# dispatch and reversal

_DISPATCH = {
    "CNFD": cnfd_step,
    "ReFD": refd_step,
    "SIFD-A": sifd_step,
    "SIFD-B": sifd_step,
    "TSSP": tssp_step,
    "TSFD": tsfd_step,
    "SSFD": ssfd_step,
    "LPFD": lpfd_step,
}


def step(state, field, params, potential, nl, tau) -> WaveField:
    """Advance by one step with the scheme named in ``state.variant``."""
    if field.grid != state.grid:
        raise ValueError("field grid does not match the scheme state")
    new = _DISPATCH[state.variant](state, field, params, potential, nl, tau)
    if state.variant not in TWO_LEVEL and not np.all(np.isfinite(new.values)):
        raise InstabilityError(f"{state.variant} produced non-finite values (tau={tau})")
    return new


def reflect_state(state: SchemeState, field: WaveField, nl: Nonlinearity) -> WaveField:
    """Prepare ``state`` to integrate backward from ``field`` with step -tau.

    Two-level schemes swap their levels (the returned field is the previous
    level); ReFD reflects the relaxation variable about 2 f(|psi|^2). Other
    schemes are unchanged and return ``field``.
    """
    if state.variant in TWO_LEVEL:
        if state.prev_field is None:
            return field
        prev = state.prev_field
        state.prev_field = field
        return prev
    if state.variant == "ReFD" and state.relax_u is not None:
        state.relax_u = 2.0 * np.asarray(nl.f(field.density), dtype=float) - state.relax_u
    return field


class Stepper:
    """Bind a scheme to one model so runs read ``stepper.run(field, tau, n)``.

    Parameters
    ----------
    scheme : str
        Tag from :data:`SCHEMES`.
    grid : Grid
    params : ModelParams
    potential : Potential, optional
    nl : Nonlinearity, optional
        Defaults to cubic with ``params.beta``.
    **state_kw
        Forwarded to :func:`make_state`.
    """

    def __init__(self, scheme: str, grid: Grid, params: ModelParams, potential: Potential | None = None,
                 nl: Nonlinearity | None = None, **state_kw):
        self.grid = grid
        self.params = params
        self.potential = potential if potential is not None else Potential.zero()
        self.nl = nl if nl is not None else Nonlinearity.cubic(params.beta)
        self.fast = bool(state_kw.pop("fast", True))
        self.state = make_state(scheme, grid, **state_kw)

    @property
    def scheme(self) -> str:
        return self.state.variant

    def step(self, field: WaveField, tau: float) -> WaveField:
        return step(self.state, field, self.params, self.potential, self.nl, tau)

    def run(self, field: WaveField, tau: float, n_steps: int, callback=None) -> WaveField:
        """Advance ``n_steps`` steps; ``callback(n, field)`` is called after each one.

        Without a callback, eligible 1D configurations run in a compiled loop
        (see :mod:`nlsgpe.kernels`) that performs the same arithmetic.
        """
        n_steps = int(n_steps)
        if callback is None and self.fast and n_steps > 1:
            out = _fast_run(self, field, tau, n_steps)
            if out is not None:
                return out
        for n in range(n_steps):
            field = self.step(field, tau)
            if callback is not None:
                callback(n + 1, field)
        return field

    def reflect(self, field: WaveField) -> WaveField:
        return reflect_state(self.state, field, self.nl)


def _fast_eligible(stepper: Stepper) -> bool:
    st = stepper.state
    return (
        st.variant in ("CNFD", "SSFD", "ReFD", "SIFD-A", "SIFD-B", "LPFD", "TSFD")
        and st.grid.dim == 1
        and not st.space.L.cyclic
        and not stepper.potential.time_dependent
        and stepper.nl.is_cubic
        and (st.policy.mode == "fixed_point" or st.variant not in ("CNFD", "SSFD"))
    )


def _fast_run(stepper: Stepper, field: WaveField, tau: float, n_steps: int) -> WaveField | None:
    """Compiled equivalent of ``n_steps`` calls to :func:`step`, or None if not applicable."""
    from . import kernels as K  # local import keeps numba compilation lazy

    if not _fast_eligible(stepper) or field.grid != stepper.grid:
        return None
    st = stepper.state
    sp = st.space
    eps = stepper.params.epsilon
    beta = float(stepper.nl.beta)
    tau = float(tau)
    lo, di, up = sp.L.lower, sp.L.diag, sp.L.upper
    V_full = _potential(st, stepper.potential, field.t)
    V = np.ascontiguousarray(sp.restrict(V_full))
    t_end = field.t + n_steps * tau

    if st.variant in TWO_LEVEL:
        if st.prev_field is None:
            field = stepper.step(field, tau)
            n_steps -= 1
            t_end = field.t + n_steps * tau
            if n_steps == 0:
                return field
        elif abs((field.t - st.prev_field.t) - tau) > 1e-9 * max(abs(tau), 1e-300) + 1e-12 * abs(field.t):
            return None
        _init_sup(st, field)
        psi_m = sp.restrict(st.prev_field.values)
        psi = sp.restrict(field.values)
        if st.variant == "LPFD":
            _lpfd_warn(st, tau, eps)
            status, done, _ = K.lpfd_run(psi_m, psi, lo, di, up, V, eps, beta, tau, n_steps, st.sup0)
        else:
            variant_b = st.variant == "SIFD-B"
            status, done, viol = K.sifd_run(psi_m, psi, lo, di, up, V, eps, beta, tau, n_steps,
                                           variant_b, st.sup0)
            if viol:
                msg = (f"{st.variant}: |tau|={abs(tau):.3e} exceeded the stability estimate "
                       f"on {viol} of {done} steps")
                st.stability_warnings.append(msg)
                warnings.warn(msg, StabilityWarning, stacklevel=3)
        t_last = field.t + done * tau
        st.prev_field = WaveField(st.grid, sp.extend(psi_m), t_last - tau)
        out = WaveField(st.grid, sp.extend(psi), t_last)
        if status == K.BLOWUP:
            h = min(st.grid.h)
            raise InstabilityError(
                f"{st.variant} blew up after {done} steps; tau/h^2 = {abs(tau) / h**2:.4g}")
        return out.replace(t=t_end)

    psi = sp.restrict(field.values)
    if st.variant in ("CNFD", "SSFD"):
        status, done, its = K.cnfd_run(psi, lo, di, up, V, eps, beta, tau, n_steps,
                                       float(st.policy.tol), int(st.policy.max_iter),
                                       st.variant == "SSFD")
        st.last_iterations = int(its)
        if status == K.FP_FAIL:
            from .linsolve import FixedPointError
            raise FixedPointError(sp.extend(psi), np.nan, int(st.policy.max_iter))
    elif st.variant == "ReFD":
        if st.relax_u is None:
            st.relax_u = np.asarray(stepper.nl.f(field.density), dtype=float)
        u_full = np.array(st.relax_u, dtype=float)
        u = np.ascontiguousarray(sp.restrict(u_full).real)
        K.refd_run(psi, u, lo, di, up, V, eps, beta, tau, n_steps)
        if n_steps % 2:
            u_full = -u_full  # inactive nodes carry rho = 0, so u <- -u each step
        u_full[sp.active] = u
        st.relax_u = u_full
        st.last_iterations = 1
    else:
        ph = _potential_phase(st, stepper.potential, field.t, tau, eps)
        vphase = np.ones(sp.L.n, dtype=complex) if ph is None else np.ascontiguousarray(sp.restrict(ph))
        K.tsfd_run(psi, lo, di, up, vphase, ph is not None, eps, beta, tau, n_steps)
    out = WaveField(st.grid, sp.extend(psi), t_end)
    if not np.all(np.isfinite(out.values)):
        raise InstabilityError(f"{st.variant} produced non-finite values (tau={tau})")
    return out
