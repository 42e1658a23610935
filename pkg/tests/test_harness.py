"""Configuration, snapshots, the run driver, studies and the command line."""

import csv
import io
import json

import numpy as np
import pytest

from nlsgpe import WaveField, bright_soliton, build_grid
from nlsgpe.diagnostics import PROBES, TABLE_EXPECTED, discrete_mass
from nlsgpe.harness import (ConfigError, RunConfig, SimulationError, config_hash, load_config,
                            read_manifest, read_snapshot, run_simulation, write_snapshot)
from nlsgpe.harness.cli import main
from nlsgpe.harness.snapshots import decode_field, encode_field
from nlsgpe.harness.runner import vortex_lattice_ansatz
from nlsgpe.harness.studies import CONV_HEADER, convergence_study, observed_orders, vortex_config

SOLITON = {"grid": {"a": -15.0, "b": 20.0, "J": 700}, "time": {"tau": 1e-3, "t_final": 0.05},
           "model": {"beta": -1.0}, "scheme": {"name": "TSSP"}, "initial": {"kind": "soliton"}}


def _toml(path, cfg):
    lines = []
    for sec, body in cfg.items():
        lines.append(f"[{sec}]")
        for k, v in body.items():
            lines.append(f"{k} = {json.dumps(v)}")
    path.write_text("\n".join(lines) + "\n")
    return path


def _cfg(**over):
    data = {k: dict(v) for k, v in SOLITON.items()}
    for key, v in over.items():
        sec, name = key.split("__")
        data.setdefault(sec, {})[name] = v
    return data


# ---------------------------------------------------------------- config

def test_config_defaults_and_hash():
    cfg = RunConfig.from_mapping(_cfg())
    assert cfg["scheme.name"] == "TSSP" and cfg["boundary.kind"] == "none"
    assert cfg.n_steps == 50 and cfg.dim == 1
    assert cfg.hash == config_hash(dict(cfg.values))
    assert cfg.replace(model__beta=-2.0).hash != cfg.hash


def test_config_lists_every_error():
    bad = _cfg(scheme__name="RK4", model__epsilon=2.0, time__tau=-1.0, model__bogus=1)
    del bad["grid"]["a"]
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_mapping(bad)
    msg = " | ".join(exc.value.errors)
    for needle in ("bogus", "grid.a", "scheme.name", "epsilon", "time.tau"):
        assert needle in msg
    assert len(exc.value.errors) >= 5
    assert json.loads(exc.value.as_json())["errors"] == exc.value.errors


def test_load_config(tmp_path):
    p = _toml(tmp_path / "s.toml", SOLITON)
    assert load_config(p)["grid.J"] == 700
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.toml")
    (tmp_path / "broken.toml").write_text("[grid\n")
    with pytest.raises(ConfigError, match="cannot parse"):
        load_config(tmp_path / "broken.toml")


# ---------------------------------------------------------------- snapshots

@pytest.mark.parametrize("grid", [build_grid(-1.0, 2.0, 16), build_grid((0, -1), (1, 1), (8, 6), "periodic")],
                         ids=["1d", "2d"])
def test_snapshot_round_trip(tmp_path, rng, grid):
    v = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    f = WaveField(grid, v, 0.375)
    p = write_snapshot(tmp_path / "f.nlsf", f)
    g = read_snapshot(p, grid.bc)
    assert np.array_equal(g.values, f.values) and g.t == 0.375 and g.grid == grid
    raw = p.read_bytes()
    assert raw[:4] == b"NLSF"
    assert len(raw) == 12 + 24 * grid.dim + 8 + 16 * v.size


def test_snapshot_rejects_bad_input():
    f = WaveField(build_grid(0.0, 1.0, 4), np.zeros(5))
    buf = encode_field(f)
    with pytest.raises(ValueError, match="magic"):
        decode_field(b"XXXX" + buf[4:])
    with pytest.raises(ValueError, match="size"):
        decode_field(buf[:-16])
    with pytest.raises(ValueError, match="version"):
        decode_field(buf[:4] + (9).to_bytes(4, "little") + buf[8:])


# ---------------------------------------------------------------- run driver

def test_zero_time_run_gives_initial_snapshot(tmp_path):
    cfg = RunConfig.from_mapping(_cfg(time__t_final=0.0))
    res = run_simulation(cfg, tmp_path)
    assert len(res.snapshots) == 1
    snap = read_snapshot(res.snapshots[0].path)
    g = build_grid(-15.0, 20.0, 700)
    want = WaveField.sample(g, lambda x: bright_soliton(0.0, x))
    assert np.array_equal(snap.values, want.values)
    man = read_manifest(tmp_path)
    assert man["config_hash"] == cfg.hash and len(man["snapshots"]) == 1


def test_runs_are_bitwise_deterministic(tmp_path):
    cfg = RunConfig.from_mapping(_cfg(scheme__name="CNFD", time__snapshot_every=20))
    a = run_simulation(cfg, tmp_path / "a")
    b = run_simulation(cfg, tmp_path / "b")
    assert [s.step for s in a.snapshots] == [0, 20, 40, 50]  # last step forced
    for sa, sb in zip(a.snapshots, b.snapshots):
        assert sa.path.read_bytes() == sb.path.read_bytes()
    for name in ("conservation.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes().replace(b"/a/", b"/b/") == \
               (tmp_path / "b" / name).read_bytes().replace(b"/a/", b"/b/")
    rows = list(csv.DictReader(io.StringIO((tmp_path / "a" / "conservation.csv").read_text())))
    assert max(float(r["mass_drift"]) for r in rows) <= 1e-11


def test_blowup_reports_structured_error(tmp_path):
    cfg = RunConfig.from_mapping(_cfg(scheme__name="LPFD", time__tau=0.05, time__t_final=5.0))
    with pytest.warns(UserWarning):
        with pytest.raises(SimulationError) as exc:
            run_simulation(cfg, tmp_path)
    rep = json.loads((tmp_path / "error.json").read_text())
    assert rep["status"] == "failed" and rep["error"] == "InstabilityError"
    assert rep == exc.value.report


@pytest.mark.parametrize("over", [
    {"model__kind": "damped", "model__damping": "linear", "model__damping_coefficient": 0.1},
    {"boundary__kind": "pml", "scheme__name": "CNFD"},
    {"boundary__kind": "cap", "boundary__sigma0": 2.0},
    {"model__kind": "coupled", "model__beta11": -1.0, "model__lambda": 0.5, "initial2__kind": "gaussian"},
    {"scheme__name": "ReFD"},
], ids=["damped", "pml", "cap", "coupled", "refd"])
def test_model_kinds_run(tmp_path, over):
    res = run_simulation(RunConfig.from_mapping(_cfg(**over)), tmp_path)
    assert res.final.t == pytest.approx(0.05)
    assert np.isfinite(res.report.max_drift("mass"))


def test_rotating_run_conserves_mass(tmp_path):
    cfg = vortex_config(box=4.0, h=0.125, tau=1e-3, t_final=0.02, beta=100.0)
    res = run_simulation(cfg, tmp_path)
    assert res.report.max_drift("mass") <= 1e-12


def test_vortex_ansatz_unit_mass():
    g = build_grid((-8, -8), (8, 8), (128, 128))
    f = WaveField(g, vortex_lattice_ansatz(g, beta=1000.0, omega=0.9))
    assert discrete_mass(f) == pytest.approx(1.0, rel=1e-12)
    assert np.all(f.values[0] == 0) and np.all(f.values[:, -1] == 0)


# ---------------------------------------------------------------- studies

def test_observed_orders():
    o = observed_orders([0.1, 0.05, 0.025], [4e-2, 1e-2, 2.5e-3])
    assert o[0] is None
    assert o[1] == pytest.approx(2.0) and o[2] == pytest.approx(2.0)


def test_small_time_convergence_study():
    # the time axis holds h = 3.5e-3 whatever J the base config carries
    base = RunConfig.from_mapping(_cfg(time__t_final=0.5))
    tab = convergence_study(base, "time", [0.02, 0.01, 0.005])
    assert tab.header == CONV_HEADER and len(tab.rows) == 3
    assert {r["J"] for r in tab.rows} == {10000}
    assert tab.rows[-1]["order_p"] == pytest.approx(2.0, abs=0.02)
    assert tab.to_csv().splitlines()[0] == ",".join(CONV_HEADER)


def test_budget_switches_to_sentinel():
    base = RunConfig.from_mapping(_cfg(time__t_final=0.2))
    tab = convergence_study(base, "space", [0.5, 0.25], ["CNFD"], fixed=1e-5, budget=1e-6, sentinel=1e-3)
    assert {r["label"] for r in tab.rows} == {"sentinel"}
    assert {r["tau"] for r in tab.rows} == {1e-3}


# ---------------------------------------------------------------- command line

def test_cli_run_and_errors(tmp_path, capsys):
    p = _toml(tmp_path / "s.toml", SOLITON)
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "ok" and out["snapshots"] == 2
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 1
    err = json.loads(capsys.readouterr().err)
    assert any("not found" in e for e in err["errors"])
    bad = _toml(tmp_path / "bad.toml", _cfg(scheme__name="XX", model__epsilon=-1.0))
    assert main(["run", "--config", str(bad)]) == 1
    assert len(json.loads(capsys.readouterr().err)["errors"]) >= 2


@pytest.mark.parametrize("argv", [["frobnicate"], ["run", "--nope"], [], ["converge"]])
def test_cli_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_cli_converge_and_sweep(tmp_path, capsys):
    p = _toml(tmp_path / "s.toml", _cfg(grid__J=1000, time__t_final=0.2, scheme__name="CNFD"))
    assert main(["converge", "--config", str(p), "--axis", "time", "--ladder", "0.02,0.01",
                 "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0] == ",".join(CONV_HEADER)
    assert (tmp_path / "converge_time.csv").read_text() == text
    assert main(["absorb-sweep", "--cells", "wall,16"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert rows[0]["kind"] == "wall" and float(rows[1]["metric"]) < 1e-3


def test_cli_schemes_table(capsys):
    assert main(["schemes-table"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["probe"] for r in rows] == list(PROBES)
    for r in rows:
        for scheme, expect in TABLE_EXPECTED.items():
            assert r[scheme] == ("pass" if expect[r["probe"]] else "fail"), (scheme, r["probe"])
