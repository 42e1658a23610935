"""Command line: ``nlsgpe {run,converge,scalability,absorb-sweep,demo-vortex,schemes-table}``.

Exit codes: 0 ok, 1 validation or runtime failure (a JSON error record on
stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .runner import SimulationError, run_simulation

__all__ = ["main", "build_parser"]

SPACE_LADDER = (0.5, 0.25, 0.125, 0.0625, 0.03125)
TIME_LADDER = (0.1, 0.05, 0.025, 0.0125, 0.00625)


def _floats(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _cells(text: str):
    out = []
    for x in text.split(","):
        x = x.strip()
        if x:
            out.append(None if x == "wall" else int(x))
    return out


def _names(text: str):
    return [x.strip() for x in text.split(",") if x.strip()]


def _globals(p: argparse.ArgumentParser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", metavar="PATH", default=d, help="TOML configuration file")
    p.add_argument("--out", metavar="DIR", default=d, help="output directory")
    p.add_argument("--seed", type=int, default=d, help="reserved; runs are deterministic")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS if suppress else 1,
                   help="concurrent ladder rungs")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlsgpe", description="NLSE/GPE solvers and benchmark experiments.")
    _globals(ap, False)
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        _globals(p, True)
        return p

    cmd("run", "run one configured simulation")
    p = cmd("converge", "error ladder against the exact soliton")
    p.add_argument("--axis", choices=("space", "time"), required=True)
    p.add_argument("--schemes", type=_names, default=None, help="comma-separated scheme tags")
    p.add_argument("--ladder", type=_floats, default=None, help="comma-separated h or tau values")
    p.add_argument("--fixed", type=float, default=None, help="the step held fixed (tau or h)")
    p.add_argument("--budget", type=float, default=None, help="per-rung wall-time budget in seconds")
    p.add_argument("--sentinel", type=float, default=None, help="fixed step used over budget")
    p = cmd("scalability", "eps-scalability thresholds")
    p.add_argument("--schemes", type=_names, default=["TSSP", "CNFD"])
    p.add_argument("--epsilons", type=_floats, default=[0.25, 0.125, 0.0625])
    p.add_argument("--no-sanity", action="store_true", help="skip the eps = 1 row")
    p = cmd("absorb-sweep", "reflection metric against layer width")
    p.add_argument("--cells", type=_cells, default=[4, 8, 16, 32, 64], help="layer widths in cells ('wall' allowed)")
    p.add_argument("--kind", choices=("pml", "cap"), default="pml")
    p.add_argument("--scheme", default="CNFD")
    p = cmd("demo-vortex", "rotating vortex-lattice quench")
    p.add_argument("--box", type=float, default=16.0, help="half-width of the square box")
    p.add_argument("--t-final", type=float, default=1.0)
    p.add_argument("--snapshot-every", type=int, default=0)
    cmd("schemes-table", "live conservation and symmetry probes per scheme")
    return ap


def _fail(errors, status="invalid") -> int:
    sys.stderr.write(json.dumps({"status": status, "errors": list(errors)}, indent=2) + "\n")
    return 1


def _emit(text: str, out, name: str):
    sys.stdout.write(text)
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / name).write_text(text, encoding="utf-8")


def _run(args) -> int:
    if args.config is None:
        return _fail(["run needs --config PATH"])
    cfg = load_config(args.config)
    out = args.out if args.out is not None else cfg["output.dir"]
    res = run_simulation(cfg, out, keep_frames=False)
    summary = {"status": "ok", "config_hash": cfg.hash, "out": str(out), "snapshots": len(res.snapshots),
               "mass_drift": res.report.max_drift("mass")}
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return 0


def _converge(args) -> int:
    from .studies import convergence_study

    base = load_config(args.config) if args.config else None
    ladder = args.ladder or list(SPACE_LADDER if args.axis == "space" else TIME_LADDER)
    tab = convergence_study(base, args.axis, ladder, args.schemes, fixed=args.fixed, budget=args.budget,
                            sentinel=args.sentinel, threads=args.threads)
    _emit(tab.to_csv(), args.out, f"converge_{args.axis}.csv")
    return 0


def _scalability(args) -> int:
    from .studies import epsilon_scalability_study

    rungs, thresh = epsilon_scalability_study(args.schemes, args.epsilons, sanity=not args.no_sanity,
                                              threads=args.threads)
    _emit(thresh.to_csv(), args.out, "scalability_thresholds.csv")
    if args.out is not None:
        rungs.to_csv(Path(args.out) / "scalability_rungs.csv")
    return 0


def _absorb(args) -> int:
    from .studies import absorb_sweep

    tab = absorb_sweep(args.cells, args.kind, args.scheme, threads=args.threads)
    _emit(tab.to_csv(), args.out, f"absorb_{args.kind}.csv")
    return 0


def _vortex(args) -> int:
    from .studies import demo_vortex, vortex_config

    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = vortex_config(box=args.box, t_final=args.t_final, snapshot_every=args.snapshot_every)
    res = demo_vortex(cfg, args.out)
    summary = {"status": "ok", "config_hash": cfg.hash, "t_final": cfg["time.t_final"],
               "mass_drift": res.report.max_drift("mass"), "initial": "phase-imprinted lattice ansatz (non-stationary)"
               if cfg["initial.kind"] == "vortex-lattice" else cfg["initial.kind"]}
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return 0


def _table(args) -> int:
    from .studies import schemes_table

    _emit(schemes_table().to_csv(), args.out, "schemes_table.csv")
    return 0


COMMANDS = {"run": _run, "converge": _converge, "scalability": _scalability, "absorb-sweep": _absorb,
            "demo-vortex": _vortex, "schemes-table": _table}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        return _fail(["--threads must be >= 1"])
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        return _fail(exc.errors)
    except SimulationError as exc:
        sys.stderr.write(exc.as_json() + "\n")
        return 1
    except (ValueError, OSError) as exc:
        return _fail([str(exc)], "error")


if __name__ == "__main__":
    sys.exit(main())
