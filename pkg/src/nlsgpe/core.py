"""Domain types for the NLSE/GPE: grids, fields, potentials, nonlinearities.

The model is

    i eps d_t psi = -eps^2/2 Lap psi + V psi + f(|psi|^2) psi

with optional damping, rotation and two-component coupling handled in
:mod:`nlsgpe.extensions`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "BC",
    "Damping",
    "ModelParams",
    "Axis",
    "Grid",
    "build_grid",
    "WaveField",
    "Potential",
    "Nonlinearity",
    "eval_G",
    "bright_soliton",
    "soliton_mass",
    "soliton_energy",
    "dispersion_omega",
]


class BC(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    PERIODIC = "periodic"


DAMPING_KINDS = ("none", "linear", "cubic", "quintic")


@dataclass(frozen=True)
class Damping:
    """Damping law g(rho): linear -> delta, cubic -> delta*rho, quintic -> delta*rho^2."""

    kind: str = "none"
    coefficient: float = 0.0

    def __post_init__(self):
        if self.kind not in DAMPING_KINDS:
            raise ValueError(f"unknown damping kind {self.kind!r}; expected one of {DAMPING_KINDS}")
        if not self.coefficient >= 0.0:
            raise ValueError(f"damping coefficient must be >= 0, got {self.coefficient}")

    @property
    def active(self) -> bool:
        return self.kind != "none" and self.coefficient > 0.0

    def g(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.kind == "none":
            return np.zeros_like(rho)
        if self.kind == "linear":
            return np.full_like(rho, self.coefficient)
        if self.kind == "cubic":
            return self.coefficient * rho
        return self.coefficient * rho**2


@dataclass(frozen=True)
class ModelParams:
    epsilon: float = 1.0
    beta: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0
    beta0: float = 0.0
    c0: float = 0.0
    omega_rot: float = 0.0
    damping: Damping = field(default_factory=Damping)
    josephson_lambda: float = 0.0
    beta11: float = 0.0
    beta12: float = 0.0
    beta21: float | None = None
    beta22: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.beta21 is None:
            object.__setattr__(self, "beta21", self.beta12)
        elif self.beta21 != self.beta12:
            raise ValueError("coupling matrix must be symmetric: beta12 != beta21")


@dataclass(frozen=True)
class Axis:
    a: float
    b: float
    J: int
    bc: BC = BC.DIRICHLET

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError(f"need b > a, got a={self.a}, b={self.b}")
        if int(self.J) != self.J or self.J % 2 or self.J < 4:
            raise ValueError(f"J must be an even integer >= 4, got {self.J}")
        object.__setattr__(self, "J", int(self.J))
        object.__setattr__(self, "bc", BC(self.bc))

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.J

    @cached_property
    def nodes(self) -> np.ndarray:
        x = self.a + np.arange(self.J + 1) * self.h
        x[-1] = self.b
        return x

    @property
    def basis(self) -> str:
        return {BC.DIRICHLET: "sine", BC.NEUMANN: "cosine", BC.PERIODIC: "fourier"}[self.bc]

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Wavenumbers of the transform matched to the boundary condition.

        sine: pi*l/(b-a), l = 1..J-1; cosine: pi*l/(b-a), l = 0..J;
        fourier: 2*pi*l/(b-a) with l in FFT order.
        """
        if self.bc is BC.DIRICHLET:
            return np.pi * np.arange(1, self.J) / self.length
        if self.bc is BC.NEUMANN:
            return np.pi * np.arange(self.J + 1) / self.length
        return 2.0 * np.pi * np.fft.fftfreq(self.J, 1.0 / self.J) / self.length


@dataclass(frozen=True)
class Grid:
    """Tensor-product grid of one or two axes; fields live on all J+1 nodes per axis."""

    axes: tuple[Axis, ...]

    def __post_init__(self):
        if len(self.axes) not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.J + 1 for ax in self.axes)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(ax.h for ax in self.axes)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def bc(self) -> BC:
        bcs = {ax.bc for ax in self.axes}
        if len(bcs) != 1:
            raise ValueError("mixed boundary conditions across axes")
        return bcs.pop()

    @property
    def x(self) -> np.ndarray:
        return self.axes[0].nodes

    @cached_property
    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*(ax.nodes for ax in self.axes), indexing="ij"))

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=complex)

    def describe(self) -> dict:
        return {
            "dim": self.dim,
            "axes": [
                {"a": ax.a, "b": ax.b, "J": ax.J, "bc": ax.bc.value} for ax in self.axes
            ],
        }


def build_grid(a, b, J, bc="dirichlet") -> Grid:
    """Build a 1D grid, or a 2D grid when ``a``, ``b``, ``J`` are length-2 sequences.

    >>> build_grid(0.0, 1.0, 4).x
    array([0.  , 0.25, 0.5 , 0.75, 1.  ])
    """
    if np.ndim(a) == 0:
        return Grid((Axis(float(a), float(b), J, BC(bc)),))
    bcs = [bc] * len(a) if isinstance(bc, (str, BC)) else list(bc)
    return Grid(tuple(Axis(float(ai), float(bi), Ji, BC(c)) for ai, bi, Ji, c in zip(a, b, J, bcs)))


@dataclass(frozen=True)
class WaveField:
    grid: Grid
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise ValueError(f"field shape {values.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", values)

    @classmethod
    def sample(cls, grid: Grid, func: Callable, t: float = 0.0) -> "WaveField":
        """Sample ``func(*coords)`` at the nodes and impose the boundary condition."""
        values = np.broadcast_to(np.asarray(func(*grid.mesh), dtype=complex), grid.shape)
        return cls(grid, enforce_bc(grid, values), t)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def replace(self, values=None, t=None) -> "WaveField":
        return WaveField(self.grid, self.values if values is None else values,
                         self.t if t is None else t)


def enforce_bc(grid: Grid, values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=complex)
    for axis, ax in enumerate(grid.axes):
        sl_first = [slice(None)] * grid.dim
        sl_last = [slice(None)] * grid.dim
        sl_first[axis] = 0
        sl_last[axis] = -1
        if ax.bc is BC.DIRICHLET:
            values[tuple(sl_first)] = 0.0
            values[tuple(sl_last)] = 0.0
        elif ax.bc is BC.PERIODIC:
            values[tuple(sl_last)] = values[tuple(sl_first)]
    return values


class Potential:
    """Real external potential V(x[, y], t).

    Use the constructors (:meth:`zero`, :meth:`harmonic`, :meth:`lattice`,
    :meth:`attractive`, :meth:`tabulated`, :meth:`quench`) rather than
    ``__init__`` directly.
    """

    def __init__(self, kind: str, func: Callable, *, time_dependent=False, offset=0.0, **info):
        self.kind = kind
        self._func = func
        self.time_dependent = time_dependent
        self.offset = float(offset)
        self.info = info

    def __repr__(self):
        return f"Potential({self.kind!r}, offset={self.offset}, {self.info})"

    def evaluate(self, *coords, t=0.0) -> np.ndarray:
        coords = [np.asarray(c, dtype=float) for c in coords]
        out = np.asarray(self._func(*coords, t), dtype=float)
        out = np.broadcast_to(out, np.broadcast(*coords).shape)
        return out + self.offset if self.offset else np.array(out)

    def on(self, grid: Grid, t: float = 0.0) -> np.ndarray:
        return self.evaluate(*grid.mesh, t=t)

    def shifted(self, alpha: float) -> "Potential":
        """The same potential plus a real constant (gauge shift)."""
        return Potential(self.kind, self._func, time_dependent=self.time_dependent,
                         offset=self.offset + alpha, **self.info)

    @property
    def is_harmonic(self) -> bool:
        return self.kind == "harmonic" and not self.time_dependent

    @classmethod
    def zero(cls):
        return cls("zero", lambda *args: 0.0)

    @classmethod
    def constant(cls, value: float):
        return cls("zero", lambda *args: 0.0, offset=value)

    @classmethod
    def harmonic(cls, gammas: Sequence[float] | float = 1.0, sign: float = 1.0):
        """V = sign * sum_i gamma_i^2 x_i^2 / 2."""
        g = np.atleast_1d(np.asarray(gammas, dtype=float))

        def func(*args):
            *coords, _t = args
            gam = g if g.size == len(coords) else np.full(len(coords), g[0])
            return sign * 0.5 * sum(gi**2 * c**2 for gi, c in zip(gam, coords))

        kind = "harmonic" if sign > 0 else "attractive"
        return cls(kind, func, gammas=tuple(g))

    @classmethod
    def attractive(cls, gammas: Sequence[float] | float = 1.0):
        return cls.harmonic(gammas, sign=-1.0)

    @classmethod
    def lattice(cls, amplitudes: Sequence[float], wavenumbers: Sequence[float]):
        """V = sum_i A_i cos(L_i x_i)."""
        A = np.asarray(amplitudes, dtype=float)
        L = np.asarray(wavenumbers, dtype=float)

        def func(*args):
            *coords, _t = args
            return sum(Ai * np.cos(Li * c) for Ai, Li, c in zip(A, L, coords))

        return cls("lattice", func, amplitudes=tuple(A), wavenumbers=tuple(L))

    @classmethod
    def tabulated(cls, grid: Grid, values):
        """Potential known only at the nodes of ``grid``; evaluation elsewhere is an error."""
        table = np.asarray(values, dtype=float)
        if table.shape != grid.shape:
            raise ValueError("tabulated potential must match the grid shape")
        if not np.all(np.isfinite(table)):
            raise ValueError("tabulated potential must be finite")
        mesh = grid.mesh

        def func(*args):
            *coords, _t = args
            if len(coords) != grid.dim or any(c.shape != m.shape or not np.array_equal(c, m)
                                              for c, m in zip(coords, mesh)):
                raise ValueError("tabulated potential can only be evaluated on its own grid")
            return table

        return cls("tabulated", func)

    @classmethod
    def quench(cls, gamma_x: Callable[[float], float], gamma_y: Callable[[float], float]):
        """Time-dependent anisotropic harmonic trap (gamma_x(t)^2 x^2 + gamma_y(t)^2 y^2)/2."""

        def func(x, y, t):
            return 0.5 * (gamma_x(t) ** 2 * x**2 + gamma_y(t) ** 2 * y**2)

        return cls("quench", func, time_dependent=True)


# ----------------------------------------------------------------------------
# Nonlinearities

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_GL_THETA = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


def _log1p_ratio(z):
    """log1p(z)/z, continuous at z = 0."""
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    small = np.abs(z) < 1e-6
    zs = z[small]
    out[small] = 1.0 - zs / 2.0 + zs**2 / 3.0
    zl = z[~small]
    out[~small] = np.log1p(zl) / zl
    return out


@dataclass(frozen=True)
class Nonlinearity:
    """Density nonlinearity f with primitive F (F(0) = 0) and difference quotient G."""

    kind: str
    f: Callable[[np.ndarray], np.ndarray]
    F: Callable[[np.ndarray], np.ndarray]
    G_exact: Callable[[np.ndarray, np.ndarray], np.ndarray]
    coefficients: tuple = ()

    @property
    def is_zero(self) -> bool:
        return self.kind == "cubic" and self.coefficients == (0.0,)

    @property
    def is_cubic(self) -> bool:
        return self.kind == "cubic"

    @property
    def beta(self) -> float:
        if self.kind != "cubic":
            raise ValueError(f"{self.kind} nonlinearity has no single cubic coefficient")
        return self.coefficients[0]

    def G(self, rho1, rho2):
        rho1 = np.asarray(rho1, dtype=float)
        rho2 = np.asarray(rho2, dtype=float)
        out = np.asarray(self.G_exact(rho1, rho2), dtype=float)
        near = np.abs(rho1 - rho2) <= 1e-12 * np.maximum(1.0, np.maximum(rho1, rho2))
        if np.any(near):
            mid = np.asarray(self.f(0.5 * (rho1 + rho2)), dtype=float)
            out = np.where(near, mid, out)
        return out

    @classmethod
    def cubic(cls, beta: float) -> "Nonlinearity":
        beta = float(beta)
        return cls(
            "cubic",
            f=lambda r: beta * r,
            F=lambda r: 0.5 * beta * np.asarray(r) ** 2,
            G_exact=lambda r1, r2: 0.5 * beta * (r1 + r2),
            coefficients=(beta,),
        )

    @classmethod
    def zero(cls) -> "Nonlinearity":
        return cls.cubic(0.0)

    @classmethod
    def cubic_quintic(cls, beta1: float, beta2: float) -> "Nonlinearity":
        b1, b2 = float(beta1), float(beta2)
        return cls(
            "cubic-quintic",
            f=lambda r: b1 * r + b2 * np.asarray(r) ** 2,
            F=lambda r: 0.5 * b1 * np.asarray(r) ** 2 + b2 * np.asarray(r) ** 3 / 3.0,
            G_exact=lambda r1, r2: 0.5 * b1 * (r1 + r2) + b2 * (r1 * r1 + r1 * r2 + r2 * r2) / 3.0,
            coefficients=(b1, b2),
        )

    @classmethod
    def saturating(cls, beta0: float, c0: float) -> "Nonlinearity":
        b0, c = float(beta0), float(c0)
        if c <= 0.0:
            raise ValueError("saturating nonlinearity needs c0 > 0")

        def F(r):
            r = np.asarray(r, dtype=float)
            # b0/c * (r - log1p(c r)/c), written to stay accurate for small c r
            return b0 * r * (1.0 - _log1p_ratio(c * r)) / c

        def G(r1, r2):
            # b0/c * [1 - log((1+c r1)/(1+c r2)) / (c (r1 - r2))]
            base = 1.0 + c * r2
            z = c * (r1 - r2) / base
            return b0 / c * (1.0 - _log1p_ratio(z) / base)

        return cls(
            "saturating",
            f=lambda r: b0 * np.asarray(r) / (1.0 + c * np.asarray(r)),
            F=F,
            G_exact=G,
            coefficients=(b0, c),
        )

    @classmethod
    def custom(cls, f: Callable[[np.ndarray], np.ndarray]) -> "Nonlinearity":
        """User-supplied smooth f; F and G come from 24-point Gauss-Legendre quadrature."""

        def F(r):
            r = np.asarray(r, dtype=float)
            vals = f(np.multiply.outer(r, _GL_THETA))
            return r * (vals @ _GL_W)

        def G(r1, r2):
            r1, r2 = np.broadcast_arrays(np.asarray(r1, float), np.asarray(r2, float))
            pts = np.multiply.outer(r1, _GL_THETA) + np.multiply.outer(r2, 1.0 - _GL_THETA)
            return f(pts) @ _GL_W

        return cls("custom", f=f, F=F, G_exact=G)


def eval_G(nl: Nonlinearity, rho1, rho2):
    """Difference quotient (F(rho1) - F(rho2)) / (rho1 - rho2) of the primitive."""
    r1 = np.asarray(rho1, dtype=float)
    r2 = np.asarray(rho2, dtype=float)
    if np.any(r1 < 0) or np.any(r2 < 0):
        raise ValueError("densities must be nonnegative")
    out = nl.G(r1, r2)
    return float(out) if out.ndim == 0 else out


# ----------------------------------------------------------------------------
# Analytic references


def _check_focusing(beta):
    if not beta < 0:
        raise ValueError(f"bright soliton needs a focusing nonlinearity (beta < 0), got {beta}")


def bright_soliton(t, x, A=2.0, v=1.0, x0=0.0, theta0=0.0, beta=-1.0):
    """Bright soliton of the focusing cubic NLSE with eps = 1."""
    _check_focusing(beta)
    x = np.asarray(x, dtype=float)
    amp = A / np.sqrt(-beta) / np.cosh(A * (x - v * t - x0))
    phase = v * x - 0.5 * (v**2 - A**2) * t + theta0
    out = amp * np.exp(1j * phase)
    return complex(out) if out.ndim == 0 else out


def soliton_mass(A, beta):
    _check_focusing(beta)
    return -2.0 * A / beta


def soliton_energy(A, v, beta):
    """Energy of the bright soliton: A v^2/(-beta) - A^3/(-3 beta).

    Direct integration gives kinetic A v^2/(-beta) + A^3/(-3 beta) and
    interaction -2 A^3/(-3 beta).
    """
    _check_focusing(beta)
    return A * v**2 / (-beta) - A**3 / (-3.0 * beta)


def dispersion_omega(params: ModelParams, nl: Nonlinearity, A, k) -> float:
    """Frequency of the plane wave A exp(i(k.x - omega t))."""
    eps = params.epsilon
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    k2 = float(np.sum(np.square(k)))
    return eps * k2 / 2.0 + float(nl.f(np.asarray(abs(A) ** 2, dtype=float))) / eps
