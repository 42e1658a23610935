"""Experiment drivers: convergence ladders, eps-scalability, absorption sweep, vortex demo.

Every driver returns a :class:`Table` whose CSV form is byte-stable for a
given input (rows are emitted in ladder order regardless of ``threads``).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from ..boundaries import CapSpec, PmlSpec, absorb_run
from ..core import ModelParams, WaveField, bright_soliton, build_grid, enforce_bc
from ..diagnostics import PROBES, ProbeSetup, error_norms, scheme_property_table
from ..schemes import Stepper, canonical_scheme
from .config import RunConfig

__all__ = ["Table", "SOLITON", "convergence_study", "observed_orders", "wkb_initial",
           "epsilon_scalability_study", "threshold_rows", "absorb_sweep", "vortex_config",
           "demo_vortex", "schemes_table"]


@dataclass
class Table:
    """Fixed-header rows; ``seconds`` style columns are kept out of the CSV for byte stability."""

    header: tuple
    rows: list = dc_field(default_factory=list)
    timings: list = dc_field(default_factory=list)

    def column(self, name):
        return [r[name] for r in self.rows]

    def to_csv(self, path=None) -> str:
        lines = [",".join(self.header)]
        lines += [",".join(_fmt(r.get(k)) for k in self.header) for r in self.rows]
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


# ----------------------------------------------------------------------------
# convergence ladders on the bright soliton


@dataclass(frozen=True)
class SolitonProblem:
    a: float = -15.0
    b: float = 20.0
    t_final: float = 5.0
    A: float = 2.0
    v: float = 1.0
    x0: float = 0.0
    theta0: float = 0.0
    beta: float = -1.0

    def exact(self, t, x):
        return bright_soliton(t, x, self.A, self.v, self.x0, self.theta0, self.beta)

    @classmethod
    def from_config(cls, cfg: RunConfig) -> "SolitonProblem":
        if cfg["initial.kind"] != "soliton" or cfg.dim != 1:
            raise ValueError("convergence studies need the 1D soliton problem")
        if cfg["model.epsilon"] != 1.0 or cfg["potential.kind"] != "zero" or cfg["model.nonlinearity"] != "cubic":
            raise ValueError("the soliton reference needs eps = 1, V = 0 and cubic f")
        return cls(float(cfg["grid.a"]), float(cfg["grid.b"]), float(cfg["time.t_final"]),
                   float(cfg["initial.A"]), float(cfg["initial.v"]), float(cfg["initial.x0"]),
                   float(cfg["initial.theta0"]), float(cfg["model.beta"]))


SOLITON = SolitonProblem()
SPACE_TAU = 1e-5
TIME_H = 3.5e-3
CONV_HEADER = ("scheme", "axis", "h", "tau", "J", "n_steps", "e_p", "e_m", "e_m_abs", "order_p", "label")


def _soliton_rung(prob: SolitonProblem, scheme: str, J: int, tau: float):
    g = build_grid(prob.a, prob.b, J)
    f = WaveField.sample(g, lambda x: prob.exact(0.0, x))
    f = f.replace(values=enforce_bc(g, f.values.copy()))
    n = int(round(prob.t_final / tau))
    st = Stepper(scheme, g, ModelParams(epsilon=1.0, beta=prob.beta))
    f = st.run(f, tau, n)
    return error_norms(f, prob.exact), n


def _cells(prob: SolitonProblem, h: float) -> int:
    J = (prob.b - prob.a) / h
    if abs(J - round(J)) > 1e-6 * J:
        raise ValueError(f"h={h} does not divide the domain length {prob.b - prob.a}")
    return int(round(J))


def _estimate_seconds(prob, scheme, J, tau, probe_steps=200):
    """Wall time of a full rung extrapolated from a short run."""
    short = SolitonProblem(prob.a, prob.b, probe_steps * tau, prob.A, prob.v, prob.x0, prob.theta0, prob.beta)
    _, dt = _timed(_soliton_rung, short, scheme, J, tau)
    return dt * prob.t_final / (probe_steps * tau)


def observed_orders(steps, errors):
    """log(e_k / e_{k+1}) / log(s_k / s_{k+1}); ``None`` for the first rung."""
    out = [None]
    for (s0, e0), (s1, e1) in zip(zip(steps, errors), zip(steps[1:], errors[1:])):
        out.append(float(math.log(e0 / e1) / math.log(s0 / s1)) if e0 > 0 and e1 > 0 else None)
    return out


def convergence_study(base: RunConfig | None, axis: str, ladder, schemes=None, *, fixed: float | None = None,
                      budget: float | None = None, sentinel: float | None = None, threads: int = 1) -> Table:
    """Error ladder against the exact soliton.

    Parameters
    ----------
    base : RunConfig or None
        Soliton problem (domain, t_final, soliton data, scheme); ``None`` uses
        the standard problem on (-15, 20) to t = 5.
    axis : {"space", "time"}
        Which step the ladder refines; the other is held at ``fixed``
        (tau = 1e-5 for space, h = 3.5e-3 for time).
    ladder : sequence of float
        Values of h (space) or tau (time).
    budget : float, optional
        Per-rung wall-time budget in seconds. A scheme whose estimated finest
        rung exceeds it reruns with the fixed step set to ``sentinel``
        (default 10x the fixed step) and its rows are labelled ``sentinel``;
        only order slopes are meaningful for those.
    """
    if axis not in ("space", "time"):
        raise ValueError(f"axis must be 'space' or 'time', got {axis!r}")
    prob = SOLITON if base is None else SolitonProblem.from_config(base)
    if schemes is None:
        schemes = [base["scheme.name"]] if base is not None else ["TSSP"]
    schemes = [canonical_scheme(s) for s in schemes]
    fixed = (SPACE_TAU if axis == "space" else TIME_H) if fixed is None else float(fixed)
    ladder = [float(x) for x in ladder]

    def plan(fix):
        if axis == "space":
            return [(_cells(prob, h), fix, h) for h in ladder]
        J = _cells(prob, fix)
        return [(J, tau, tau) for tau in ladder]

    jobs = []
    for s in schemes:
        fix, label = fixed, "full"
        if budget is not None:
            J, tau, _ = max(plan(fixed), key=lambda p: p[0] / p[1])
            if _estimate_seconds(prob, s, J, tau) > budget:
                fix = 10.0 * fixed if sentinel is None else float(sentinel)
                label = "sentinel"
        jobs += [(s, J, tau, step, label) for J, tau, step in plan(fix)]

    results = _map(lambda j: _timed(_soliton_rung, prob, j[0], j[1], j[2]), jobs, threads)
    table = Table(CONV_HEADER)
    for s in schemes:
        idx = [i for i, j in enumerate(jobs) if j[0] == s]
        steps = [jobs[i][3] for i in idx]
        errs = [results[i][0][0].e_p for i in idx]
        orders = observed_orders(steps, errs)
        for i, order in zip(idx, orders):
            (norms, n), dt = results[i]
            _, J, tau, _, label = jobs[i]
            table.rows.append({"scheme": s, "axis": axis, "h": (prob.b - prob.a) / J, "tau": tau, "J": J,
                               "n_steps": n, "e_p": norms.e_p, "e_m": norms.e_m, "e_m_abs": norms.e_m_abs,
                               "order_p": order, "label": label})
            table.timings.append(dt)
    return table


# ----------------------------------------------------------------------------
# eps-scalability


@dataclass(frozen=True)
class WkbProblem:
    """exp(-x^2) exp(i S0(x)/eps) with S0 = K0 x - log(2 cosh(s x))/s on a Dirichlet box."""

    L: float = 8.0
    t_final: float = 1.0
    beta: float = 0.1
    K0: float = 1.0
    focus: float = 5.0


WKB = WkbProblem()
SCAL_HEADER = ("scheme", "epsilon", "r", "h", "tau", "J", "n_steps", "l1_error", "resolved")
THRESH_HEADER = ("scheme", "epsilon", "first_r", "first_h_over_eps", "crossing_r")


def wkb_initial(prob: WkbProblem, eps: float):
    def func(x):
        s = prob.focus
        return np.exp(-x**2) * np.exp(1j * (prob.K0 * x - np.logaddexp(s * x, -s * x) / s) / eps)

    return func


def _wkb_run(prob: WkbProblem, scheme: str, eps: float, J: int, n: int) -> WaveField:
    g = build_grid(-prob.L, prob.L, J)
    f = WaveField.sample(g, wkb_initial(prob, eps))
    f = f.replace(values=enforce_bc(g, f.values.copy()))
    st = Stepper(scheme, g, ModelParams(epsilon=eps, beta=prob.beta))
    return st.run(f, prob.t_final / n, n)


def _wkb_ref(prob, eps):
    J = int(round(2 * prob.L / (eps / 32)))
    n = int(round(prob.t_final / (eps / 128)))
    return _wkb_run(prob, "TSSP", eps, J, n)


def epsilon_scalability_study(schemes=("TSSP", "CNFD"), epsilons=(0.25, 0.125, 0.0625), *, ks=range(7),
                              threshold: float = 0.1, sanity: bool = True, problem: WkbProblem = WKB,
                              threads: int = 1) -> tuple[Table, Table]:
    """Density l1 error on the joint ladder h = tau = r eps, r = 2^-k.

    The reference is TSSP with h = eps/32 and tau = eps/128, linearly
    interpolated onto each coarse grid. Returns the rung table and the
    threshold table: the first dyadic r below ``threshold`` and the
    log-log interpolated crossing r* (``None`` when unresolved).
    """
    schemes = [canonical_scheme(s) for s in schemes]
    eps_list = ([1.0] if sanity else []) + [float(e) for e in epsilons]
    refs = dict(zip(eps_list, _map(lambda e: _wkb_ref(problem, e), eps_list, threads)))
    jobs = []
    for s in schemes:
        for e in eps_list:
            for k in ks:
                r = 2.0 ** -k
                J = int(round(2 * problem.L / (r * e)))
                J += J % 2
                n = max(1, int(math.ceil(problem.t_final / (r * e) - 1e-9)))
                jobs.append((s, e, r, J, n))

    def work(job):
        s, e, r, J, n = job
        try:
            f = _wkb_run(problem, s, e, J, n)
        except (ArithmeticError, RuntimeError):
            return float("inf")
        ref = refs[e]
        rr = np.interp(f.grid.x, ref.grid.x, ref.density)
        err = float(np.sum(np.abs(f.density - rr)) / np.sum(rr))
        return err if np.isfinite(err) else float("inf")

    errs = _map(work, jobs, threads)
    rungs = Table(SCAL_HEADER)
    for (s, e, r, J, n), err in zip(jobs, errs):
        rungs.rows.append({"scheme": s, "epsilon": e, "r": r, "h": 2 * problem.L / J, "tau": problem.t_final / n,
                           "J": J, "n_steps": n, "l1_error": err, "resolved": err < threshold})
    return rungs, threshold_rows(rungs, threshold)


def threshold_rows(rungs: Table, threshold: float = 0.1) -> Table:
    out = Table(THRESH_HEADER)
    keys = []
    for r in rungs.rows:
        if (r["scheme"], r["epsilon"]) not in keys:
            keys.append((r["scheme"], r["epsilon"]))
    for s, e in keys:
        rows = sorted((x for x in rungs.rows if x["scheme"] == s and x["epsilon"] == e), key=lambda x: -x["r"])
        first = next((x for x in rows if x["l1_error"] < threshold), None)
        cross = None
        for hi, lo in zip(rows, rows[1:]):
            if hi["l1_error"] < threshold:
                cross = hi["r"]
                break
            if lo["l1_error"] < threshold and math.isfinite(hi["l1_error"]):
                a, b = math.log(hi["l1_error"]), math.log(lo["l1_error"])
                w = (a - math.log(threshold)) / (a - b)
                cross = float(math.exp(math.log(hi["r"]) + w * (math.log(lo["r"]) - math.log(hi["r"]))))
                break
        if cross is None and rows and rows[-1]["l1_error"] < threshold:
            cross = rows[-1]["r"]
        out.rows.append({"scheme": s, "epsilon": e, "first_r": first["r"] if first else None,
                         "first_h_over_eps": first["h"] / e if first else None, "crossing_r": cross})
    return out


# ----------------------------------------------------------------------------
# absorbing layers

ABSORB_HEADER = ("kind", "cells", "R0", "delta", "metric", "final_physical_mass", "final_total_mass")


def absorb_sweep(cells=(4, 8, 16, 32, 64), kind: str = "pml", scheme: str = "CNFD", *, L: float = 10.0,
                 J: int = 800, k0: float = 10.0, horizon: float = 4.0, tau: float = 1e-3,
                 sigma0: float = 1.0, threads: int = 1) -> Table:
    """Reflection metric for a Gaussian packet exp(-x^2/2 + i k0 x) leaving [-L, L].

    The layer width is ``cells`` grid cells with delta = R0/4; ``cells is None``
    stands for the hard wall.
    """
    g = build_grid(-L, L, J)
    f = WaveField.sample(g, lambda x: np.exp(-x**2 / 2 + 1j * k0 * x))
    f = f.replace(values=enforce_bc(g, f.values.copy()))
    h = g.axes[0].h

    def work(c):
        if c is None:
            spec = None
        elif kind == "pml":
            spec = PmlSpec(R0=c * h)
        elif kind == "cap":
            spec = CapSpec(R0=c * h, sigma0=sigma0)
        else:
            raise ValueError(f"unknown layer kind {kind!r}")
        res = absorb_run(scheme, f, spec, horizon, tau, sample_every=10)
        return spec, res

    table = Table(ABSORB_HEADER)
    for c, (spec, res) in zip(cells, _map(work, list(cells), threads)):
        row = res.as_row()
        spec = spec.resolve(h) if spec is not None else None
        table.rows.append({"kind": kind if spec is not None else "wall", "cells": c,
                           "R0": spec.R0 if spec is not None else None,
                           "delta": spec.delta if spec is not None else None,
                           "metric": row["metric"], "final_physical_mass": row["final_physical_mass"],
                           "final_total_mass": row["final_total_mass"]})
    return table



# ----------------------------------------------------------------------------
# vortex-lattice demo


def vortex_config(box: float = 16.0, h: float = 1.0 / 16, tau: float = 1e-4, t_final: float = 1.0,
                  beta: float = 1000.0, omega: float = 0.9, gamma: float = 2.0, snapshot_every: int = 0,
                  initial_path: str | None = None) -> RunConfig:
    """Rotating-frame quench: lattice in the unit trap, evolved in the trap gamma (Lagrangian frame)."""
    J = int(round(2 * box / h))
    init = {"kind": "file", "path": initial_path} if initial_path else {"kind": "vortex-lattice"}
    return RunConfig.from_mapping({
        "model": {"kind": "rotating-lagrangian", "beta": beta, "omega": omega},
        "grid": {"a": [-box, -box], "b": [box, box], "J": [J, J], "bc": "dirichlet"},
        "potential": {"kind": "harmonic", "gammas": [gamma, gamma]},
        "scheme": {"name": "TSSP"},
        "time": {"tau": tau, "t_final": t_final, "snapshot_every": snapshot_every},
        "initial": init,
    })


def demo_vortex(cfg: RunConfig | None = None, out_dir=None):
    """Run the vortex demo; returns the :class:`RunResult` (mass drift in ``result.report``)."""
    from .runner import run_simulation

    return run_simulation(cfg if cfg is not None else vortex_config(), out_dir, keep_frames=False)


# ----------------------------------------------------------------------------
# scheme property matrix

TABLE_SCHEMES = ("TSSP", "CNFD", "SIFD-A", "ReFD", "TSFD")


def schemes_table(schemes=TABLE_SCHEMES, setup: ProbeSetup | None = None) -> Table:
    """Rows {mass, energy, gauge, reversible, dispersion} x schemes, entries pass/fail."""
    res = scheme_property_table(schemes, setup if setup is not None else ProbeSetup())
    tab = Table(("probe",) + tuple(schemes))
    for p in PROBES:
        tab.rows.append({"probe": p, **{s: "pass" if res[s][p][1] else "fail" for s in schemes}})
    tab.timings = res
    return tab
