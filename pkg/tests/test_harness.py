import json
from pathlib import Path

import pytest

import stochns.harness as h
from stochns import cli
from stochns.harness import (EXIT_BLOWUP, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK, REGISTRY,
                             ConfigError, execute, list_experiments, load_config, parse_config,
                             run_experiment, write_artifacts)
from stochns.experiments import Report
from stochns.solver import BlowUpError


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


SMOOTH = """
[experiment]
name = smoothing-grid
output = out
"""


def test_defaults_come_from_registry():
    cfg = parse_config("[experiment]\nname = ou-law\n")
    assert cfg.n == 16 and cfg.M == 10_000 and cfg.dt == 0.01


def test_every_section_parses():
    cfg = parse_config("""
[experiment]
name = derivative-flow
[model]
backend = synthetic
n = 24
cutoff_radius = 3
[noise]
kind = power
gamma = 0.45
amplitude = 0.5
[solver]
dt = 0.005
T = 2
integrator = etd2
[mc]
M = 50
burn_in = 0.5
seed = 11
""")
    assert (cfg.backend, cfg.n, cfg.cutoff_radius) == ("synthetic", 24, 3.0)
    assert cfg.coloring == {"kind": "power", "gamma": 0.45, "amplitude": 0.5}
    assert (cfg.dt, cfg.T, cfg.integrator, cfg.M, cfg.seed) == (0.005, 2.0, "etd2", 50, 11)


def test_sigma_rule_noise():
    cfg = parse_config("""
[experiment]
name = ou-law
[noise]
kind = sigma
sigma_exponent = 0.5
eps = 0.25
""")
    assert cfg.coloring["kind"] == "sigma"


@pytest.mark.parametrize("text, field", [
    ("[experiment]\nname = smoothing-grid\n[solver]\ndt = -0.1\n", "solver.dt"),
    ("[experiment]\nname = smoothing-grid\n[solver]\ndt = fast\n", "solver.dt"),
    ("[experiment]\nname = smoothing-grid\n[solver]\nstep = 1\n", "solver.step"),
    ("[experiment]\nname = smoothing-grid\n[plot]\ncolor = red\n", "plot"),
    ("[experiment]\nname = nope\n", "experiment.name"),
    ("[model]\nn = 8\n", "experiment.name"),
    ("[experiment]\nname = smoothing-grid\n[model]\nn = 4\n", "model.n"),
    ("[experiment]\nname = smoothing-grid\n[model]\nbackend = sphere\n", "model.backend"),
    ("[experiment]\nname = smoothing-grid\n[noise]\nkind = power\ngamma = 0.2\n", "noise"),
    ("[experiment]\nname = smoothing-grid\n[noise]\nshape = 1\n", "noise.shape"),
    ("[experiment]\nname = smoothing-grid\n[mc]\nm = 1\n", "mc"),
    ("[experiment]\nname = smoothing-grid\n[solver]\nintegrator = rk4\n", "solver"),
    ("not an ini file", "config"),
])
def test_invalid_configs_name_the_field(text, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == field
    assert str(info.value).startswith(field + ":")


def test_negative_dt_exits_2_with_field_message(tmp_path, capsys):
    p = write(tmp_path, SMOOTH + "[solver]\ndt = -0.001\n")
    assert run_experiment(p) == EXIT_CONFIG
    assert "solver.dt: must be positive" in capsys.readouterr().out


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_output_relative_to_config(tmp_path):
    cfg = load_config(write(tmp_path, SMOOTH))
    assert cfg.output == str(tmp_path / "out")


def test_config_hash_ignores_output():
    a = parse_config(SMOOTH)
    b = a.with_(output="elsewhere")
    assert a.hash() == b.hash() and a.hash() != a.with_(seed=1).hash()


def test_list_is_stable_and_anchored():
    first = list_experiments()
    assert first == list_experiments()
    names = [e[0] for e in first]
    assert names == list(REGISTRY)
    assert len(names) == 12
    anchors = dict((n, a) for n, a, _ in first)
    assert "Bismut" in anchors["bismut-vs-fd"]
    assert "controllability" in anchors["control-reachability"]
    assert all(a for a in anchors.values())


def test_smoothing_run_writes_artifacts(tmp_path, capsys):
    p = write(tmp_path, SMOOTH)
    assert run_experiment(p) == EXIT_OK
    out = tmp_path / "out"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"] and summary["anchor"] == REGISTRY["smoothing-grid"].anchor
    assert all(c["anchor"] for c in summary["checks"])
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["files"]) == {f.name for f in out.iterdir()} - {"manifest.json"}
    assert "PASS" in capsys.readouterr().out


def test_failed_check_exits_1(tmp_path, monkeypatch):
    def failing(cfg):
        rep = Report("smoothing-grid")
        rep.check("always fails", "anchor", False, value=1.0, threshold=0.0)
        return rep
    monkeypatch.setitem(h.REGISTRY, "smoothing-grid",
                        h.Experiment("smoothing-grid", "anchor", "seconds", failing,
                                     h.REGISTRY["smoothing-grid"].defaults))
    assert run_experiment(write(tmp_path, SMOOTH)) == EXIT_CHECK_FAILED


def test_blowup_exits_3(tmp_path, monkeypatch):
    def exploding(cfg):
        raise BlowUpError(7, {"norm": 1e300})
    monkeypatch.setitem(h.REGISTRY, "smoothing-grid",
                        h.Experiment("smoothing-grid", "anchor", "seconds", exploding,
                                     h.REGISTRY["smoothing-grid"].defaults))
    assert run_experiment(write(tmp_path, SMOOTH)) == EXIT_BLOWUP
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["blowup"]["step"] == 7 and not summary["passed"]


def test_artifacts_byte_identical(tmp_path):
    cfg = parse_config("[experiment]\nname = trilinear-algebra\n[model]\nn = 16\n")
    for d in ("a", "b"):
        write_artifacts(execute(cfg), cfg, tmp_path / d)
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_cli_commands(tmp_path, capsys):
    assert cli.main(["list"]) == EXIT_OK
    assert "bismut-vs-fd" in capsys.readouterr().out
    p = write(tmp_path, SMOOTH)
    assert cli.main(["validate", str(p)]) == EXIT_OK
    assert "ok: smoothing-grid" in capsys.readouterr().out
    bad = write(tmp_path, SMOOTH + "[solver]\ndt = 0\n", "bad.ini")
    assert cli.main(["validate", str(bad)]) == EXIT_CONFIG
    assert cli.main(["run", str(p), "--out", str(tmp_path / "cli")]) == EXIT_OK
    assert (tmp_path / "cli" / "manifest.json").exists()
    with pytest.raises(SystemExit):
        cli.main([])


def test_shipped_configs_cover_registry_and_validate():
    configs = sorted((Path(__file__).parent.parent / "demos" / "configs").glob("*.ini"))
    assert {p.stem for p in configs} == set(REGISTRY)
    for p in configs:
        assert load_config(p).name == p.stem
