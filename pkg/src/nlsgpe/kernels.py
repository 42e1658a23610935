"""Compiled multi-step loops for the 1D finite-difference schemes.

These cover the common benchmark configuration: one dimension, non-cyclic
Laplacian (Dirichlet, Neumann or PML), static potential (possibly complex with
an absorbing layer), cubic nonlinearity f = beta*rho and plain fixed-point
inner solves. They perform exactly the same arithmetic as the generic steppers
in :mod:`nlsgpe.schemes` without the per-step Python overhead; the generic
steppers remain the reference and are used for everything else.

Every kernel returns a status code: 0 ok, 1 fixed-point failure, 2 blow-up.
"""

from __future__ import annotations

import numba
import numpy as np

OK, FP_FAIL, BLOWUP = 0, 1, 2


@numba.njit(cache=True, nogil=True)
def _factor(a, b, c):
    n = b.shape[0]
    cp = np.empty(n, dtype=np.complex128)
    inv = np.empty(n, dtype=np.complex128)
    for i in range(n):
        piv = b[i]
        if i > 0:
            piv = piv - a[i] * cp[i - 1]
        inv[i] = 1.0 / piv
        cp[i] = c[i] * inv[i] if i < n - 1 else 0.0
    return cp, inv


@numba.njit(cache=True, nogil=True)
def _apply(a, cp, inv, d, x):
    n = d.shape[0]
    x[0] = d[0] * inv[0]
    for i in range(1, n):
        x[i] = (d[i] - a[i] * x[i - 1]) * inv[i]
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]


@numba.njit(cache=True, nogil=True)
def _lap(lo, di, up, u, out):
    n = u.shape[0]
    for i in range(n):
        v = di[i] * u[i]
        if i > 0:
            v += lo[i] * u[i - 1]
        if i < n - 1:
            v += up[i] * u[i + 1]
        out[i] = v


@numba.njit(cache=True, nogil=True)
def cnfd_run(psi, lo, di, up, V, eps, beta, tau, n_steps, tol, max_iter, midpoint):
    """CNFD (midpoint=False) or SSFD (midpoint=True) over n_steps; psi updated in place."""
    n = psi.shape[0]
    cV = 1j * tau / (2.0 * eps)
    bL = -1j * tau * eps / 4.0
    a = bL * lo
    c = bL * up
    b = 1.0 + bL * di + cV * V
    cp, inv = _factor(a, b, c)
    rhs = np.empty(n, dtype=np.complex128)
    s = np.empty(n, dtype=np.complex128)
    s_new = np.empty(n, dtype=np.complex128)
    rho = np.empty(n)
    total_its = 0
    for step in range(n_steps):
        for i in range(n):
            rho[i] = psi[i].real ** 2 + psi[i].imag ** 2
            s[i] = 2.0 * psi[i]
        # first application from the guess s = 2 psi
        for i in range(n):
            if midpoint:
                g = beta * 0.25 * (s[i].real ** 2 + s[i].imag ** 2)
            else:
                d = s[i] - psi[i]
                g = 0.5 * beta * (d.real ** 2 + d.imag ** 2 + rho[i])
            rhs[i] = 2.0 * psi[i] - cV * g * s[i]
        _apply(a, cp, inv, rhs, s)
        converged = False
        for k in range(1, max_iter + 1):
            for i in range(n):
                if midpoint:
                    g = beta * 0.25 * (s[i].real ** 2 + s[i].imag ** 2)
                else:
                    d = s[i] - psi[i]
                    g = 0.5 * beta * (d.real ** 2 + d.imag ** 2 + rho[i])
                rhs[i] = 2.0 * psi[i] - cV * g * s[i]
            _apply(a, cp, inv, rhs, s_new)
            num = 0.0
            den = 0.0
            for i in range(n):
                num = max(num, abs(s_new[i] - s[i]))
                den = max(den, abs(s_new[i]))
                s[i] = s_new[i]
            res = num / max(den, 1e-300)
            if not np.isfinite(res):
                break
            if res <= tol:
                converged = True
                total_its = k
                break
        if not converged:
            return FP_FAIL, step, total_its
        for i in range(n):
            psi[i] = s[i] - psi[i]
    return OK, n_steps, total_its


@numba.njit(cache=True, nogil=True)
def refd_run(psi, u, lo, di, up, V, eps, beta, tau, n_steps):
    """ReFD over n_steps; psi and u (relaxation variable on active nodes) updated in place."""
    n = psi.shape[0]
    cV = 1j * tau / (2.0 * eps)
    bL = -1j * tau * eps / 4.0
    a = bL * lo
    c = bL * up
    b = np.empty(n, dtype=np.complex128)
    rhs = np.empty(n, dtype=np.complex128)
    s = np.empty(n, dtype=np.complex128)
    for step in range(n_steps):
        for i in range(n):
            u[i] = 2.0 * beta * (psi[i].real ** 2 + psi[i].imag ** 2) - u[i]
            b[i] = 1.0 + bL * di[i] + cV * (V[i] + u[i])
            rhs[i] = 2.0 * psi[i]
        cp, inv = _factor(a, b, c)
        _apply(a, cp, inv, rhs, s)
        for i in range(n):
            psi[i] = s[i] - psi[i]
    return OK, n_steps, 1


@numba.njit(cache=True, nogil=True)
def sifd_run(psi_m, psi, lo, di, up, V, eps, beta, tau, n_steps, variant_b, sup0):
    """SIFD-A/B leap-frog over n_steps from levels (psi_m, psi); both updated in place.

    Returns (status, steps_done, n_limit_violations).
    """
    n = psi.shape[0]
    bL = 1j * tau * eps / 2.0
    cV = 1j * tau / eps
    a = -bL * lo
    c = -bL * up
    b = np.empty(n, dtype=np.complex128)
    for i in range(n):
        b[i] = 1.0 - bL * di[i] + (cV * V[i] if variant_b else 0.0)
    cp, inv = _factor(a, b, c)
    lap = np.empty(n, dtype=np.complex128)
    rhs = np.empty(n, dtype=np.complex128)
    new = np.empty(n, dtype=np.complex128)
    violations = 0
    for step in range(n_steps):
        m = 0.0
        for i in range(n):
            f = beta * (psi[i].real ** 2 + psi[i].imag ** 2)
            w = abs(f) if variant_b else abs(V[i].real + f)
            m = max(m, w)
        if m > 0.0 and abs(tau) > 1.0 / (eps * m):
            violations += 1
        _lap(lo, di, up, psi_m, lap)
        for i in range(n):
            f = beta * (psi[i].real ** 2 + psi[i].imag ** 2)
            if variant_b:
                rhs[i] = psi_m[i] + bL * lap[i] - cV * V[i] * psi_m[i] - (2j * tau / eps) * f * psi[i]
            else:
                rhs[i] = psi_m[i] + bL * lap[i] - (2j * tau / eps) * (V[i] + f) * psi[i]
        _apply(a, cp, inv, rhs, new)
        sup = 0.0
        for i in range(n):
            psi_m[i] = psi[i]
            psi[i] = new[i]
            sup = max(sup, abs(new[i]))
        if not np.isfinite(sup) or sup > 1e6 * max(sup0, 1e-300):
            return BLOWUP, step + 1, violations
    return OK, n_steps, violations


@numba.njit(cache=True, nogil=True)
def lpfd_run(psi_m, psi, lo, di, up, V, eps, beta, tau, n_steps, sup0):
    n = psi.shape[0]
    lap = np.empty(n, dtype=np.complex128)
    for step in range(n_steps):
        _lap(lo, di, up, psi, lap)
        sup = 0.0
        for i in range(n):
            f = beta * (psi[i].real ** 2 + psi[i].imag ** 2)
            new = psi_m[i] - (2j * tau / eps) * (-0.5 * eps**2 * lap[i] + (V[i] + f) * psi[i])
            psi_m[i] = psi[i]
            psi[i] = new
            sup = max(sup, abs(new))
        if not np.isfinite(sup) or sup > 1e6 * max(sup0, 1e-300):
            return BLOWUP, step + 1, 0
    return OK, n_steps, 0


@numba.njit(cache=True, nogil=True)
def tsfd_run(v, lo, di, up, vphase, has_v, eps, beta, tau, n_steps):
    """TSFD over n_steps on the active unknowns ``v`` (updated in place)."""
    n = v.shape[0]
    bL = 1j * tau * eps / 4.0
    a = -bL * lo
    c = -bL * up
    b = 1.0 - bL * di
    cp, inv = _factor(a, b, c)
    lap = np.empty(n, dtype=np.complex128)
    rhs = np.empty(n, dtype=np.complex128)
    half = -0.5 * tau / eps
    for step in range(n_steps):
        for half_step in range(2):
            for i in range(n):
                x = v[i]
                rho = x.real ** 2 + x.imag ** 2
                if has_v:
                    x = x * vphase[i]
                if beta != 0.0:
                    th = half * beta * rho
                    x = x * (np.cos(th) + 1j * np.sin(th))
                v[i] = x
            if half_step == 0:
                _lap(lo, di, up, v, lap)
                for i in range(n):
                    rhs[i] = v[i] + bL * lap[i]
                _apply(a, cp, inv, rhs, v)
    return OK, n_steps, 0
