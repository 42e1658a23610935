"""Absorbing layers for open-domain problems: PML and complex absorbing potential.

Both treatments pad the physical interval [a, b] with a layer of width R0 on
each side and use the quadratic profile

    sigma(x) = (x - a)^2 / delta^2  (x < a),   (x - b)^2 / delta^2  (x > b),

zero inside [a, b]. The PML stretches the coordinate, x -> S(x) = 1 + R sigma(x)
with R = exp(i pi/4), and replaces the second difference by the
variable-coefficient stencil built from S. The CAP adds -i sigma0 sigma(x) to
the potential instead, so it works with every scheme including TSSP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BC, Grid, ModelParams, Nonlinearity, Potential, WaveField, build_grid
from .linsolve import Tridiag

__all__ = [
    "PmlSpec",
    "CapSpec",
    "AbsorbingLayer",
    "build_pml",
    "build_cap",
    "sigma_profile",
    "pml_laplacian_apply",
    "pml_stencil",
    "pml_tridiag",
    "extend_field",
    "restrict_field",
    "AbsorbResult",
    "absorb_run",
    "PML_SCHEMES",
]

PML_SCHEMES = ("CNFD", "ReFD", "SIFD-A", "SIFD-B", "TSFD", "SSFD", "LPFD")
DEFAULT_LAYER_CELLS = 16
DEFAULT_DELTA_FRACTION = 0.25


@dataclass(frozen=True)
class PmlSpec:
    """Perfectly matched layer of width ``R0`` with shaping constant ``delta``.

    ``None`` for either length selects the defaults R0 = 16 h, delta = R0/4.
    """

    R0: float | None = None
    delta: float | None = None
    R: complex = complex(np.exp(0.25j * np.pi))

    def resolve(self, h: float) -> "PmlSpec":
        R0 = DEFAULT_LAYER_CELLS * h if self.R0 is None else float(self.R0)
        delta = DEFAULT_DELTA_FRACTION * R0 if self.delta is None else float(self.delta)
        if not R0 > 0:
            raise ValueError(f"layer width R0 must be positive, got {R0}")
        if not delta > 0:
            raise ValueError(f"pml delta must be positive, got {delta}")
        return PmlSpec(R0, delta, complex(self.R))


@dataclass(frozen=True)
class CapSpec:
    """Complex absorbing potential sigma0 * sigma(x) in a layer of width ``R0``."""

    R0: float | None = None
    delta: float | None = None
    sigma0: float = 1.0

    def resolve(self, h: float) -> "CapSpec":
        R0 = DEFAULT_LAYER_CELLS * h if self.R0 is None else float(self.R0)
        delta = DEFAULT_DELTA_FRACTION * R0 if self.delta is None else float(self.delta)
        if not R0 > 0 or not delta > 0:
            raise ValueError("CAP layer width and delta must be positive")
        if not self.sigma0 >= 0:
            raise ValueError("CAP strength sigma0 must be >= 0")
        return CapSpec(R0, delta, float(self.sigma0))


def sigma_profile(x, a: float, b: float, delta: float) -> np.ndarray:
    """Quadratic absorption profile, exactly zero on [a, b]."""
    x = np.asarray(x, dtype=float)
    return np.where(x < a, (x - a) ** 2, np.where(x > b, (x - b) ** 2, 0.0)) / delta**2


@dataclass(frozen=True)
class AbsorbingLayer:
    """Extended grid with the sampled layer data.

    Attributes
    ----------
    grid : Grid
        Extended Dirichlet grid on [a - R0, b + R0].
    physical : Grid
        The original grid.
    offset : int
        Index of the physical node a on the extended grid (layer cell count).
    sigma : ndarray
        Profile at the extended nodes.
    S, S_half : ndarray or None
        PML stretch at nodes and at half nodes x_j + h/2 (PML only).
    absorb : ndarray or None
        sigma0 * sigma at the nodes (CAP only).
    """

    kind: str
    grid: Grid
    physical: Grid
    offset: int
    spec: object
    sigma: np.ndarray
    S: np.ndarray | None = None
    S_half: np.ndarray | None = None
    absorb: np.ndarray | None = None

    @property
    def h(self) -> float:
        return self.grid.axes[0].h

    @property
    def physical_slice(self) -> slice:
        return slice(self.offset, self.offset + self.physical.axes[0].J + 1)

    def laplacian(self) -> Tridiag | None:
        """Second-difference replacement for the FD schemes (None for a CAP)."""
        return pml_tridiag(self) if self.kind == "pml" else None


def _extend(grid: Grid, R0: float):
    if grid.dim != 1:
        raise NotImplementedError("absorbing layers are implemented for 1D grids")
    ax = grid.axes[0]
    cells = R0 / ax.h
    m = int(round(cells))
    if m < 1 or abs(cells - m) > 1e-9 * max(1.0, cells):
        raise ValueError(f"layer width R0={R0} must be a positive integer multiple of h={ax.h}")
    ext = build_grid(ax.a - m * ax.h, ax.b + m * ax.h, ax.J + 2 * m, BC.DIRICHLET)
    return ext, m


def build_pml(grid: Grid, spec: PmlSpec = PmlSpec()) -> AbsorbingLayer:
    """Extend ``grid`` by a PML and sample S at the nodes and half nodes."""
    ax = grid.axes[0]
    spec = spec.resolve(ax.h)
    ext, m = _extend(grid, spec.R0)
    x = ext.x
    x_half = 0.5 * (x[:-1] + x[1:])
    sig = sigma_profile(x, ax.a, ax.b, spec.delta)
    S = 1.0 + spec.R * sig
    S_half = 1.0 + spec.R * sigma_profile(x_half, ax.a, ax.b, spec.delta)
    # the physical block must be exactly unstretched
    S[m:m + ax.J + 1] = 1.0
    return AbsorbingLayer("pml", ext, grid, m, spec, sig, S=S, S_half=S_half)


def build_cap(grid: Grid, spec: CapSpec = CapSpec()) -> AbsorbingLayer:
    """Extend ``grid`` by a complex-absorbing-potential layer."""
    ax = grid.axes[0]
    spec = spec.resolve(ax.h)
    ext, m = _extend(grid, spec.R0)
    sig = sigma_profile(ext.x, ax.a, ax.b, spec.delta)
    return AbsorbingLayer("cap", ext, grid, m, spec, sig, absorb=spec.sigma0 * sig)


def pml_laplacian_apply(layer: AbsorbingLayer, d, j: int) -> complex:
    """Stencil value at interior node j of the extended grid.

    (1/(2 h^2 S_j)) [d_{j-1}/S_{j-1/2} - (1/S_{j-1/2} + 1/S_{j+1/2}) d_j + d_{j+1}/S_{j+1/2}]
    """
    n = layer.grid.axes[0].J
    if not 1 <= j <= n - 1:
        raise IndexError(f"node {j} is not interior on the extended grid")
    h = layer.h
    sm, sp = layer.S_half[j - 1], layer.S_half[j]
    return (d[j - 1] / sm - (1.0 / sm + 1.0 / sp) * d[j] + d[j + 1] / sp) / (2.0 * h**2 * layer.S[j])


def pml_stencil(layer: AbsorbingLayer, d) -> np.ndarray:
    """Vectorized :func:`pml_laplacian_apply` over all interior nodes."""
    d = np.asarray(d, dtype=complex)
    h = layer.h
    sm, sp = layer.S_half[:-1], layer.S_half[1:]
    inner = d[:-2] / sm - (1.0 / sm + 1.0 / sp) * d[1:-1] + d[2:] / sp
    return inner / (2.0 * h**2 * layer.S[1:-1])


def pml_tridiag(layer: AbsorbingLayer) -> Tridiag:
    """Twice the stencil as a tridiagonal matrix on the interior (replaces D2 in the schemes)."""
    h2 = layer.h**2
    S = layer.S[1:-1]
    sm, sp = layer.S_half[:-1], layer.S_half[1:]
    return Tridiag(1.0 / (h2 * S * sm), -(1.0 / sm + 1.0 / sp) / (h2 * S), 1.0 / (h2 * S * sp))


def extend_field(layer: AbsorbingLayer, field: WaveField) -> WaveField:
    values = layer.grid.zeros()
    values[layer.physical_slice] = field.values
    return WaveField(layer.grid, values, field.t)


def restrict_field(layer: AbsorbingLayer, field: WaveField) -> WaveField:
    return WaveField(layer.physical, field.values[layer.physical_slice], field.t)


# ----------------------------------------------------------------------------
# reflection experiment


@dataclass
class AbsorbResult:
    """Outcome of :func:`absorb_run`.

    ``metric`` is the largest physical-region mass after ``exit_time``
    divided by the initial mass.
    """

    metric: float
    exit_time: float
    times: np.ndarray
    physical_mass: np.ndarray
    total_mass: np.ndarray

    def as_row(self) -> dict:
        return {"metric": self.metric, "exit_time": self.exit_time,
                "final_physical_mass": float(self.physical_mass[-1]),
                "final_total_mass": float(self.total_mass[-1])}


def _exit_time(field: WaveField, epsilon: float, n_widths: float = 6.0) -> float:
    """Kinematic estimate of when the packet has left [a, b].

    The far edge is the centre plus ``n_widths`` rms widths of the density, with
    the width spreading like a free Gaussian, sqrt(w^2 + (eps t / (2 w))^2).
    """
    ax = field.grid.axes[0]
    x = ax.nodes
    rho = field.density
    N = rho.sum()
    xc = float((x * rho).sum() / N)
    w0 = max(float(np.sqrt(((x - xc) ** 2 * rho).sum() / N)), 1e-12)
    dpsi = np.gradient(field.values, ax.h)
    v = epsilon * float(np.imag(np.conj(field.values) * dpsi).sum() / N)
    if abs(v) < 1e-12:
        raise ValueError("packet has no mean momentum; pass exit_time explicitly")
    dist = (ax.b - xc) if v > 0 else (xc - ax.a)
    t = dist / abs(v)
    for _ in range(50):
        t = (dist + n_widths * np.hypot(w0, epsilon * t / (2.0 * w0))) / abs(v)
    return float(t)


def absorb_run(scheme: str, field: WaveField, spec, horizon: float, tau: float,
               params: ModelParams | None = None, potential: Potential | None = None,
               nl: Nonlinearity | None = None, exit_time: float | None = None,
               sample_every: int = 1) -> AbsorbResult:
    """Evolve an outgoing packet through an absorbing layer and measure what comes back.

    Parameters
    ----------
    scheme : str
        FD scheme for a PML; any scheme for a CAP.
    field : WaveField
        Initial data on the physical grid.
    spec : PmlSpec, CapSpec or None
        ``None`` runs the bare Dirichlet problem (hard wall).
    horizon : float
        Final time.
    exit_time : float, optional
        Start of the reflection window; a kinematic estimate by default.
    """
    from .schemes import Stepper, canonical_scheme

    params = params or ModelParams()
    potential = potential or Potential.zero()
    nl = nl or Nonlinearity.cubic(params.beta)
    scheme = canonical_scheme(scheme)
    if exit_time is None:
        exit_time = _exit_time(field, params.epsilon)
    if not exit_time < horizon:
        raise ValueError(f"horizon {horizon} ends before the packet exits (t={exit_time:.3g})")

    if spec is None:
        layer = None
        grid = field.grid
        psi = field
        stepper = Stepper(scheme, grid, params, potential, nl)
        phys = slice(None)
    else:
        if isinstance(spec, PmlSpec):
            if scheme not in PML_SCHEMES:
                raise ValueError(f"{scheme} cannot be combined with a PML; use a CAP")
            layer = build_pml(field.grid, spec)
            stepper = Stepper(scheme, layer.grid, params, potential, nl, laplacian=layer.laplacian())
        elif isinstance(spec, CapSpec):
            layer = build_cap(field.grid, spec)
            stepper = Stepper(scheme, layer.grid, params, potential, nl, absorb=layer.absorb)
        else:
            raise TypeError(f"unsupported absorbing spec {spec!r}")
        psi = extend_field(layer, field)
        phys = layer.physical_slice

    h = psi.grid.axes[0].h
    n_steps = int(math.ceil(horizon / tau - 1e-9))
    N0 = h * float(np.sum(field.density))
    times, pm, tm = [0.0], [N0], [N0]
    done = 0
    while done < n_steps:
        k = min(sample_every, n_steps - done)
        psi = stepper.run(psi, tau, k)
        done += k
        rho = psi.density
        times.append(psi.t)
        pm.append(h * float(rho[phys].sum()))
        tm.append(h * float(rho.sum()))
    times = np.array(times)
    pm = np.array(pm)
    window = times >= exit_time
    metric = float(pm[window].max() / N0) if np.any(window) else float("nan")
    return AbsorbResult(metric, float(exit_time), times, pm, np.array(tm))
