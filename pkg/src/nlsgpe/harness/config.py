"""Run configuration: dotted-key TOML files, defaults, validation and hashing.

A config is a flat mapping of dotted keys (``model.beta``, ``grid.J``,
``scheme.name`` ...). TOML tables and dotted keys flatten to the same thing, so
both spellings below are equivalent::

    [model]
    beta = -1.0

    model.beta = -1.0
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from ..schemes import SCHEMES

__all__ = ["ConfigError", "RunConfig", "DEFAULTS", "load_config", "flatten", "config_hash",
           "MODEL_KINDS", "INITIAL_KINDS"]

MODEL_KINDS = ("plain", "damped", "rotating-adi", "rotating-lagrangian", "coupled")
INITIAL_KINDS = ("soliton", "plane-wave", "gaussian", "wkb", "vortex-lattice", "file")
NONLINEARITIES = ("cubic", "cubic-quintic", "saturating", "zero")
POTENTIALS = ("zero", "constant", "harmonic", "attractive", "lattice")
BOUNDARIES = ("none", "pml", "cap")
BCS = ("dirichlet", "periodic", "neumann")

_NUM = (int, float)

DEFAULTS: dict = {
    "model.kind": "plain",
    "model.epsilon": 1.0,
    "model.nonlinearity": "cubic",
    "model.beta": 0.0,
    "model.beta1": 0.0,
    "model.beta2": 0.0,
    "model.beta0": 0.0,
    "model.c0": 0.0,
    "model.omega": 0.0,
    "model.damping": "none",
    "model.damping_coefficient": 0.0,
    "model.lambda": 0.0,
    "model.beta11": 0.0,
    "model.beta12": 0.0,
    "model.beta22": 0.0,
    "grid.a": None,
    "grid.b": None,
    "grid.J": None,
    "grid.bc": "dirichlet",
    "potential.kind": "zero",
    "potential.gammas": [1.0],
    "potential.value": 0.0,
    "potential.amplitudes": [],
    "potential.wavenumbers": [],
    "potential2.kind": None,
    "potential2.gammas": [1.0],
    "potential2.value": 0.0,
    "potential2.amplitudes": [],
    "potential2.wavenumbers": [],
    "scheme.name": "TSSP",
    "scheme.tol": 1e-12,
    "scheme.max_iter": 100,
    "scheme.mode": "fixed_point",
    "boundary.kind": "none",
    "boundary.R0": None,
    "boundary.delta": None,
    "boundary.sigma0": 1.0,
    "time.tau": None,
    "time.t_final": None,
    "time.snapshot_every": 0,
    "initial.kind": "soliton",
    "initial.A": 2.0,
    "initial.v": 1.0,
    "initial.x0": 0.0,
    "initial.theta0": 0.0,
    "initial.amplitude": 1.0,
    "initial.k": [0.0],
    "initial.center": [0.0],
    "initial.width": 1.0,
    "initial.K0": 0.0,
    "initial.focus": 5.0,
    "initial.path": None,
    "initial.spacing": None,
    "initial.core": None,
    "initial2.kind": None,
    "initial2.amplitude": 1.0,
    "initial2.k": [0.0],
    "initial2.center": [0.0],
    "initial2.width": 1.0,
    "output.dir": "out",
}

REQUIRED = ("grid.a", "grid.b", "grid.J", "time.tau", "time.t_final")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every violation found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))

    def as_json(self) -> str:
        return json.dumps({"status": "invalid-config", "errors": self.errors}, indent=2)


def flatten(data: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in data.items():
        full = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(flatten(value, full + "."))
        else:
            out[full] = value
    return out


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


@dataclass(frozen=True)
class RunConfig:
    """Validated flat configuration (defaults filled in)."""

    values: dict
    source: str | None = None

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    @property
    def dim(self) -> int:
        return len(_as_list(self.values["grid.J"]))

    @property
    def n_steps(self) -> int:
        return int(round(self.values["time.t_final"] / self.values["time.tau"]))

    @property
    def hash(self) -> str:
        return config_hash(self.values)

    @classmethod
    def from_mapping(cls, data: dict, source: str | None = None) -> "RunConfig":
        flat = flatten(data)
        errors = []
        unknown = sorted(k for k in flat if k not in DEFAULTS)
        errors += [f"unknown key {k!r}" for k in unknown]
        values = dict(DEFAULTS)
        values.update({k: v for k, v in flat.items() if k in DEFAULTS})
        errors += _validate(values)
        if errors:
            raise ConfigError(errors)
        return cls(values, source)

    def replace(self, **updates) -> "RunConfig":
        """Copy with dotted-key updates given as ``model__beta=...`` or a dict under ``values``."""
        new = dict(self.values)
        for k, v in updates.pop("values", {}).items():
            new[k] = v
        for k, v in updates.items():
            new[k.replace("__", ".")] = v
        return RunConfig.from_mapping(new, self.source)


def load_config(path) -> RunConfig:
    """Read and validate a TOML config file; missing or unparsable files raise ConfigError."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError([f"config file not found: {p}"])
    try:
        data = tomllib.loads(p.read_text(encoding="utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError([f"cannot parse {p}: {exc}"]) from None
    return RunConfig.from_mapping(data, str(p))


def config_hash(values: dict) -> str:
    """sha256 of the canonical JSON form of the resolved configuration."""
    canon = json.dumps(values, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# ----------------------------------------------------------------------------


def _validate(v: dict) -> list[str]:
    errors = []

    def need_num(key, positive=False, nonneg=False):
        x = v[key]
        if isinstance(x, bool) or not isinstance(x, _NUM) or not math.isfinite(x):
            errors.append(f"{key} must be a finite number, got {x!r}")
            return False
        if positive and not x > 0:
            errors.append(f"{key} must be positive, got {x!r}")
            return False
        if nonneg and x < 0:
            errors.append(f"{key} must be nonnegative, got {x!r}")
            return False
        return True

    def need_choice(key, choices):
        if v[key] not in choices:
            errors.append(f"{key} must be one of {list(choices)}, got {v[key]!r}")
            return False
        return True

    for key in REQUIRED:
        if v[key] is None:
            errors.append(f"missing required key {key!r}")

    kind_ok = need_choice("model.kind", MODEL_KINDS)
    need_choice("model.nonlinearity", NONLINEARITIES)
    need_choice("potential.kind", POTENTIALS)
    if v["potential2.kind"] is not None:
        need_choice("potential2.kind", POTENTIALS)
    need_choice("boundary.kind", BOUNDARIES)
    need_choice("initial.kind", INITIAL_KINDS)
    if v["initial2.kind"] is not None:
        need_choice("initial2.kind", ("plane-wave", "gaussian"))
    need_choice("model.damping", ("none", "linear", "cubic", "quintic"))
    need_choice("scheme.mode", ("fixed_point", "newton"))
    scheme_ok = True
    if str(v["scheme.name"]).upper() not in {s.upper() for s in SCHEMES} | {"SIFD"}:
        errors.append(f"scheme.name must be one of {list(SCHEMES)}, got {v['scheme.name']!r}")
        scheme_ok = False

    if need_num("model.epsilon", positive=True) and v["model.epsilon"] > 1:
        errors.append("model.epsilon must lie in (0, 1]")
    for key in ("model.beta", "model.beta1", "model.beta2", "model.beta0", "model.c0", "model.omega",
                "model.lambda", "model.beta11", "model.beta12", "model.beta22", "potential.value",
                "potential2.value", "initial.A", "initial.v", "initial.x0", "initial.theta0",
                "initial.amplitude", "initial.width", "initial.K0", "initial.focus",
                "initial2.amplitude", "initial2.width", "boundary.sigma0"):
        need_num(key)
    need_num("model.damping_coefficient", nonneg=True)
    need_num("scheme.tol", positive=True)
    if not isinstance(v["scheme.max_iter"], int) or v["scheme.max_iter"] < 1:
        errors.append("scheme.max_iter must be a positive integer")

    # grid
    dim = None
    if None not in (v["grid.a"], v["grid.b"], v["grid.J"]):
        a, b, J = (_as_list(v[k]) for k in ("grid.a", "grid.b", "grid.J"))
        if not (len(a) == len(b) == len(J)) or len(J) not in (1, 2):
            errors.append("grid.a, grid.b and grid.J must have the same length (1 or 2)")
        else:
            dim = len(J)
            for i, (ai, bi, Ji) in enumerate(zip(a, b, J)):
                if not all(isinstance(z, _NUM) and not isinstance(z, bool) for z in (ai, bi)):
                    errors.append(f"grid bounds on axis {i} must be numbers")
                elif not bi > ai:
                    errors.append(f"grid.b must exceed grid.a on axis {i}")
                if not isinstance(Ji, int) or isinstance(Ji, bool) or Ji < 4 or Ji % 2:
                    errors.append(f"grid.J on axis {i} must be an even integer >= 4, got {Ji!r}")
    bcs = _as_list(v["grid.bc"])
    for bc in bcs:
        if bc not in BCS:
            errors.append(f"grid.bc must be one of {list(BCS)}, got {bc!r}")

    # time
    if v["time.tau"] is not None and need_num("time.tau", positive=True) and \
            v["time.t_final"] is not None and need_num("time.t_final", nonneg=True):
        n = v["time.t_final"] / v["time.tau"]
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            errors.append(f"time.t_final / time.tau = {n:.12g} is not an integer step count")
    se = v["time.snapshot_every"]
    if not isinstance(se, int) or isinstance(se, bool) or se < 0:
        errors.append("time.snapshot_every must be a nonnegative integer (0: first and last only)")

    # cross-field rules
    if kind_ok and scheme_ok:
        kind = v["model.kind"]
        scheme = str(v["scheme.name"]).upper()
        if kind in ("damped", "rotating-adi", "rotating-lagrangian", "coupled"):
            if scheme != "TSSP":
                errors.append(f"model.kind={kind!r} is integrated by TSSP only")
            if v["model.epsilon"] != 1.0:
                errors.append(f"model.kind={kind!r} is posed with model.epsilon = 1")
            if v["boundary.kind"] != "none":
                errors.append(f"model.kind={kind!r} does not support absorbing layers")
        if kind == "damped" and v["model.damping"] == "none":
            errors.append("model.kind='damped' needs model.damping")
        if kind.startswith("rotating"):
            if dim not in (None, 2):
                errors.append("rotating models need a 2D grid")
            if kind == "rotating-adi" and any(bc != "periodic" for bc in bcs):
                errors.append("rotating-adi needs grid.bc = 'periodic'")
            if v["model.nonlinearity"] not in ("cubic", "zero"):
                errors.append("rotating models use a cubic nonlinearity")
        if kind == "coupled" and v["initial2.kind"] is None:
            errors.append("model.kind='coupled' needs initial2.kind")
        if v["boundary.kind"] != "none":
            if dim not in (None, 1) or any(bc != "dirichlet" for bc in bcs):
                errors.append("absorbing layers need a 1D Dirichlet grid")
            if v["boundary.kind"] == "pml" and scheme == "TSSP":
                errors.append("a PML needs a finite-difference scheme; use boundary.kind='cap' with TSSP")
        if dim == 2 and scheme not in ("TSSP",) and any(bc != "dirichlet" for bc in bcs):
            errors.append("2D finite-difference schemes need Dirichlet boundaries")
    ik = v["initial.kind"]
    if ik == "soliton":
        if dim not in (None, 1):
            errors.append("soliton initial data is 1D")
        if isinstance(v["model.beta"], _NUM) and not v["model.beta"] < 0:
            errors.append("soliton initial data needs model.beta < 0 (focusing)")
    if ik == "vortex-lattice" and dim not in (None, 2):
        errors.append("vortex-lattice initial data is 2D")
    if ik == "file" and not v["initial.path"]:
        errors.append("initial.kind='file' needs initial.path")
    if ik == "wkb" and dim not in (None, 1):
        errors.append("wkb initial data is 1D")
    return errors
