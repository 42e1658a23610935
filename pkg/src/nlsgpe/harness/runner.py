"""Build model objects from a :class:`RunConfig` and drive a simulation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from ..boundaries import CapSpec, PmlSpec, build_cap, build_pml, extend_field
from ..core import (Damping, Grid, ModelParams, Nonlinearity, Potential, WaveField, bright_soliton,
                    build_grid, enforce_bc)
from ..diagnostics import ConservationReport, discrete_energy_cnfd, discrete_energy_relax, discrete_mass
from ..linsolve import FixedPointError, FixedPointPolicy, ResonanceError, ZeroPivotError
from ..schemes import InstabilityError, Stepper, canonical_scheme
from .config import RunConfig, _as_list
from .snapshots import Snapshot, read_snapshot, write_manifest, write_snapshot

__all__ = ["SimulationError", "RunResult", "build_grid_from", "build_params", "build_potential",
           "build_nonlinearity", "build_initial", "vortex_lattice_ansatz", "run_simulation"]


class SimulationError(RuntimeError):
    """Blow-up or solver failure during a run; ``report`` is a JSON-ready record."""

    def __init__(self, report: dict):
        self.report = report
        super().__init__(f"{report['error']}: {report['message']}")

    def as_json(self) -> str:
        return json.dumps(self.report, indent=2, sort_keys=True)


@dataclass
class RunResult:
    config_hash: str
    report: ConservationReport
    frames: list = dc_field(default_factory=list)
    snapshots: list = dc_field(default_factory=list)
    out_dir: Path | None = None

    @property
    def final(self):
        return self.frames[-1][1]


def build_grid_from(cfg: RunConfig) -> Grid:
    a, b, J = (_as_list(cfg[k]) for k in ("grid.a", "grid.b", "grid.J"))
    bc = _as_list(cfg["grid.bc"])
    if len(bc) == 1:
        bc = bc * len(J)
    if len(J) == 1:
        return build_grid(a[0], b[0], J[0], bc[0])
    return build_grid(a, b, J, bc)


def build_params(cfg: RunConfig) -> ModelParams:
    return ModelParams(
        epsilon=float(cfg["model.epsilon"]), beta=float(cfg["model.beta"]), beta1=float(cfg["model.beta1"]),
        beta2=float(cfg["model.beta2"]), beta0=float(cfg["model.beta0"]), c0=float(cfg["model.c0"]),
        omega_rot=float(cfg["model.omega"]),
        damping=Damping(cfg["model.damping"], float(cfg["model.damping_coefficient"])),
        josephson_lambda=float(cfg["model.lambda"]), beta11=float(cfg["model.beta11"]),
        beta12=float(cfg["model.beta12"]), beta22=float(cfg["model.beta22"]),
    )


def build_potential(cfg: RunConfig, prefix: str = "potential") -> Potential:
    kind = cfg[f"{prefix}.kind"]
    if kind == "zero":
        return Potential.zero()
    if kind == "constant":
        return Potential.constant(float(cfg[f"{prefix}.value"]))
    if kind == "harmonic":
        return Potential.harmonic(_as_list(cfg[f"{prefix}.gammas"]))
    if kind == "attractive":
        return Potential.attractive(_as_list(cfg[f"{prefix}.gammas"]))
    return Potential.lattice(_as_list(cfg[f"{prefix}.amplitudes"]), _as_list(cfg[f"{prefix}.wavenumbers"]))


def build_nonlinearity(cfg: RunConfig) -> Nonlinearity:
    kind = cfg["model.nonlinearity"]
    if kind == "cubic":
        return Nonlinearity.cubic(float(cfg["model.beta"]))
    if kind == "cubic-quintic":
        return Nonlinearity.cubic_quintic(float(cfg["model.beta1"]), float(cfg["model.beta2"]))
    if kind == "saturating":
        return Nonlinearity.saturating(float(cfg["model.beta0"]), float(cfg["model.c0"]))
    return Nonlinearity.zero()


def _vec(values, dim):
    v = [float(x) for x in _as_list(values)]
    return v * dim if len(v) == 1 else v


def vortex_lattice_ansatz(grid: Grid, beta: float, omega: float, gamma: float = 1.0,
                          spacing: float | None = None, core: float | None = None) -> np.ndarray:
    """Phase-imprinted vortex lattice in a Thomas-Fermi cloud (unit mass).

    Not a stationary state: vortices sit on a triangular lattice of the
    Feynman density Omega/pi inside 0.75 of the Thomas-Fermi radius, each with
    core profile r/sqrt(r^2 + xi^2).
    """
    X, Y = grid.mesh
    mu = gamma * np.sqrt(beta / np.pi)
    R = np.sqrt(2.0 * mu) / gamma
    rho = np.maximum(mu - 0.5 * gamma**2 * (X**2 + Y**2), 0.0) / beta
    psi = np.sqrt(rho).astype(complex)
    xi = 1.0 / np.sqrt(2.0 * mu) if core is None else float(core)
    if omega > 0:
        a = np.sqrt(2.0 * np.pi / (np.sqrt(3.0) * omega)) if spacing is None else float(spacing)
        n = int(np.ceil(R / a)) + 1
        z = X + 1j * Y
        for i in range(-n, n + 1):
            for j in range(-n, n + 1):
                zk = a * (i + 0.5 * j) + 1j * a * (np.sqrt(3.0) / 2.0) * j
                if abs(zk) < 0.75 * R:
                    d = z - zk
                    psi *= d / np.sqrt(np.abs(d) ** 2 + xi**2)
    psi[[0, -1], :] = 0.0
    psi[:, [0, -1]] = 0.0
    norm = discrete_mass(WaveField(grid, psi))
    return psi / np.sqrt(norm)


def build_initial(cfg: RunConfig, grid: Grid, prefix: str = "initial") -> WaveField:
    kind = cfg[f"{prefix}.kind"]
    dim = grid.dim
    if kind == "soliton":
        func = lambda x: bright_soliton(0.0, x, A=cfg["initial.A"], v=cfg["initial.v"], x0=cfg["initial.x0"],
                                        theta0=cfg["initial.theta0"], beta=cfg["model.beta"])
        f = WaveField.sample(grid, func)
    elif kind == "plane-wave":
        k = _vec(cfg[f"{prefix}.k"], dim)
        amp = float(cfg[f"{prefix}.amplitude"])
        f = WaveField(grid, amp * np.exp(1j * sum(ki * c for ki, c in zip(k, grid.mesh))))
    elif kind == "gaussian":
        k = _vec(cfg[f"{prefix}.k"], dim)
        c = _vec(cfg[f"{prefix}.center"], dim)
        w = float(cfg[f"{prefix}.width"])
        amp = float(cfg[f"{prefix}.amplitude"])
        r2 = sum((m - ci) ** 2 for m, ci in zip(grid.mesh, c))
        ph = sum(ki * m for ki, m in zip(k, grid.mesh))
        f = WaveField(grid, amp * np.exp(-r2 / (2.0 * w**2) + 1j * ph / cfg["model.epsilon"]))
    elif kind == "wkb":
        eps = float(cfg["model.epsilon"])
        w = float(cfg["initial.width"])
        K0 = float(cfg["initial.K0"])
        s = float(cfg["initial.focus"])
        x = grid.x
        phase = (K0 * x - np.logaddexp(s * x, -s * x) / s) / eps
        f = WaveField(grid, float(cfg["initial.amplitude"]) * np.exp(-x**2 / (2.0 * w**2) + 1j * phase))
    elif kind == "vortex-lattice":
        # built in the unit pre-quench trap; potential.* is the post-quench trap
        psi = vortex_lattice_ansatz(grid, float(cfg["model.beta"]), float(cfg["model.omega"]), 1.0,
                                    cfg["initial.spacing"], cfg["initial.core"])
        f = WaveField(grid, psi)
    else:
        f = read_snapshot(cfg["initial.path"], grid.axes[0].bc)
        if f.grid.shape != grid.shape or any(
                not np.isclose(fa.a, ga.a) or not np.isclose(fa.b, ga.b) for fa, ga in zip(f.grid.axes, grid.axes)):
            raise ValueError("initial snapshot grid does not match grid.*")
        f = WaveField(grid, f.values, 0.0)
    return WaveField(grid, enforce_bc(grid, np.array(f.values, dtype=complex)), 0.0)


# ----------------------------------------------------------------------------


def _metadata(cfg: RunConfig, grid: Grid, frame: str) -> dict:
    model = {k.split(".", 1)[1]: v for k, v in cfg.values.items() if k.startswith("model.")}
    meta = {
        "format": "NLSF",
        "config_hash": cfg.hash,
        "grid": grid.describe(),
        "model": model,
        "scheme": canonical_scheme(cfg["scheme.name"]),
        "frame": frame,
        "initial": cfg["initial.kind"],
    }
    if cfg["initial.kind"] == "vortex-lattice":
        meta["initial_note"] = "phase-imprinted lattice ansatz; not a stationary state"
    return meta


class _Driver:
    """Uniform ``advance(k)`` interface over the plain and extended models."""

    def __init__(self, cfg: RunConfig):
        from ..extensions import (CoupledField, coupled_tssp_step, damped_tssp_step,
                                  lagrangian_rotating_step, make_coupled_state, make_rotating_state,
                                  rotation_adi_step)
        from ..schemes import make_state

        self.cfg = cfg
        self.kind = cfg["model.kind"]
        self.params = build_params(cfg)
        self.potential = build_potential(cfg)
        self.nl = build_nonlinearity(cfg)
        self.tau = float(cfg["time.tau"])
        grid = build_grid_from(cfg)
        self.physical_grid = grid
        self.frame = "lagrangian" if self.kind == "rotating-lagrangian" else "eulerian"
        field = build_initial(cfg, grid)
        policy = FixedPointPolicy(float(cfg["scheme.tol"]), int(cfg["scheme.max_iter"]), cfg["scheme.mode"])
        scheme = canonical_scheme(cfg["scheme.name"])
        self.relaxed = scheme == "ReFD" and (self.nl.is_cubic or self.nl.is_zero)
        self.boundary = cfg["boundary.kind"]
        if self.kind == "plain":
            kw = {"policy": policy}
            if self.boundary != "none":
                if self.boundary == "pml":
                    layer = build_pml(grid, PmlSpec(cfg["boundary.R0"], cfg["boundary.delta"]))
                    kw["laplacian"] = layer.laplacian()
                else:
                    layer = build_cap(grid, CapSpec(cfg["boundary.R0"], cfg["boundary.delta"],
                                                    float(cfg["boundary.sigma0"])))
                    kw["absorb"] = layer.absorb
                field = extend_field(layer, field)
                grid = layer.grid
            self.stepper = Stepper(scheme, grid, self.params, self.potential, self.nl, **kw)
            self._advance = lambda f, k: self.stepper.run(f, self.tau, k)
        elif self.kind == "coupled":
            pot2 = build_potential(cfg, "potential2") if cfg["potential2.kind"] else self.potential
            self.potentials = (self.potential, pot2)
            second = build_initial(cfg, grid, "initial2")
            field = CoupledField(field, second)
            state = make_coupled_state(grid)

            def adv(f, k):
                for _ in range(k):
                    f = coupled_tssp_step(state, f, self.params, self.potentials, self.tau)
                return f

            self._advance = adv
        else:
            state = make_rotating_state(grid) if self.kind.startswith("rotating") else make_state("TSSP", grid)
            if self.kind == "damped":
                one = lambda f: damped_tssp_step(state, f, self.params, self.potential, self.nl, None, self.tau)
            elif self.kind == "rotating-adi":
                one = lambda f: rotation_adi_step(state, f, self.params, self.potential, self.tau)
            else:
                one = lambda f: lagrangian_rotating_step(state, f, self.params, self.potential, self.tau, self.nl)

            def adv(f, k):
                for _ in range(k):
                    f = one(f)
                return f

            self._advance = adv
        self.grid = grid
        self.field = field

    def advance(self, k: int):
        self.field = self._advance(self.field, k)
        return self.field

    def record(self, report: ConservationReport, f):
        if self.kind == "coupled":
            m1, m2 = discrete_mass(f.psi1), discrete_mass(f.psi2)
            report.add(f.t, m1 + m2, mass1=m1, mass2=m2)
            return
        mass = discrete_mass(f)
        energy = relaxed = None
        if self.kind == "plain" and self.boundary == "none":
            energy = discrete_energy_cnfd(f, self.potential, self.nl, self.params)
            if self.relaxed:
                u = self.stepper.state.relax_u
                u = self.nl.f(f.density) if u is None else u
                relaxed = discrete_energy_relax(f, u, self.potential, self.params, nl=self.nl)
        report.add(f.t, mass, energy, relaxed)


def run_simulation(cfg: RunConfig, out_dir=None, keep_frames: bool = True) -> RunResult:
    """Run ``cfg``; writes snapshots, manifest.json and conservation.csv when ``out_dir`` is given.

    Raises :class:`SimulationError` (after writing ``error.json``) on blow-up or
    solver failure.
    """
    drv = _Driver(cfg)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    n_total = cfg.n_steps
    every = cfg["time.snapshot_every"] or max(n_total, 1)
    stops = list(range(0, n_total, every)) + [n_total]
    stops = sorted(set(stops))
    report = ConservationReport()
    result = RunResult(cfg.hash, report, out_dir=out)
    meta = _metadata(cfg, drv.grid, drv.frame)

    def emit(step, f):
        drv.record(report, f)
        if keep_frames:
            result.frames.append((f.t, f))
        if out is None:
            return
        comps = (f.psi1, f.psi2) if drv.kind == "coupled" else (f,)
        for c, comp in enumerate(comps, start=1):
            suffix = f"_c{c}" if len(comps) > 1 else ""
            path = write_snapshot(out / f"snap_{step:08d}{suffix}.nlsf", comp)
            result.snapshots.append(Snapshot(path, comp.t, step, c))

    done = 0
    emit(0, drv.field)
    try:
        for stop in stops[1:]:
            f = drv.advance(stop - done)
            done = stop
            f = f.__class__(f.psi1.replace(t=done * drv.tau), f.psi2.replace(t=done * drv.tau)) \
                if drv.kind == "coupled" else f.replace(t=done * drv.tau)
            drv.field = f
            emit(done, f)
    except (InstabilityError, FixedPointError, ZeroPivotError, ResonanceError, FloatingPointError) as exc:
        rep = {"status": "failed", "error": type(exc).__name__, "message": str(exc),
               "last_recorded_step": done, "t_recorded": done * drv.tau, "config_hash": cfg.hash}
        if out is not None:
            (out / "error.json").write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n", encoding="utf-8")
            write_manifest(out, meta, result.snapshots)
            report.to_csv(out / "conservation.csv")
        raise SimulationError(rep) from exc
    if out is not None:
        write_manifest(out, meta, result.snapshots)
        report.to_csv(out / "conservation.csv")
    return result
