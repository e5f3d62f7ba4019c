import json
import subprocess
import sys

import pytest

from sctransport import harness
from sctransport.cli import main
from sctransport.harness import (
    DEFAULTS,
    KINDS,
    ConfigError,
    ExperimentConfig,
    ExperimentError,
    run,
    validate,
    verify_manifest,
)
from sctransport.io import fmt, read_csv

SMALL = {
    "trajectory": {"nx": "8", "ny": "4", "gamma": "0.01", "kappa0": "0.1", "n_steps": "30", "snapshots": "2,6,12"},
    "escape-scan": {"nx": "6", "ny": "6", "max_iters": "2000", "delta_kappa": "0.3,0.1"},
    "horn": {"kappa1": "0.0,0.5", "nx": "4", "ny": "4", "max_iters": "2000", "tol": "0.05", "prescan": "3"},
    "circles": {"J": "32", "kappa1": "0.3", "kappa2": "0.35", "nx": "64", "witness_iters": "200"},
    "spo-branch": {"kappa0": "0.05,0.1", "nf_order": "4"},
    "normal-form": {"q": "2", "order": "4"},
}


def cfg(kind, tmp_path, workers=1, **extra):
    params = dict(SMALL[kind], **extra)
    return ExperimentConfig(kind, params, tmp_path / f"{kind}-{workers}", workers)


def test_defaults_validate():
    for kind in KINDS:
        assert validate(ExperimentConfig(kind)) == []


def test_violations():
    assert validate(ExperimentConfig("spo-branch", {"q": "0"}))
    assert validate(ExperimentConfig("escape-scan", {"max_iters": "-5"}))
    assert validate(ExperimentConfig("horn", {"max_iters": "-1"}))
    assert validate(ExperimentConfig("normal-form", {"q": "5"}))
    assert validate(ExperimentConfig("trajectory", {"n_steps": "0"}))


def test_config_errors():
    with pytest.raises(ConfigError):
        ExperimentConfig("nope")
    with pytest.raises(ConfigError):
        ExperimentConfig("horn", {"bogus": "1"})
    with pytest.raises(ConfigError):
        ExperimentConfig("horn", {"nx": "1.5"})


def test_defaults_follow_figure_setups():
    t = DEFAULTS["trajectory"]
    assert t["nx"] * t["ny"] == 13440 and t["snapshots"] == [2, 6, 12, 20, 66]
    h = DEFAULTS["horn"]
    assert h["nx"] * h["ny"] == 10_000 and h["max_iters"] == 500_000 and h["ell"] == 1


def test_file_then_flags(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[horn]\nnx = 7\nell = 2\n\n[run]\nout = somewhere\nworkers = 3\n")
    c = ExperimentConfig.from_sources("horn", ini, {"nx": "9"})
    assert c.params["nx"] == 9 and c.params["ell"] == 2
    assert c.workers == 3 and str(c.out_dir) == "somewhere"
    c = ExperimentConfig.from_sources("horn", ini, {}, tmp_path / "o", 1)
    assert c.workers == 1 and c.out_dir == tmp_path / "o"
    # echo round-trips
    ini2 = tmp_path / "echo.ini"
    ini2.write_text(c.to_ini())
    assert ExperimentConfig.from_sources("horn", ini2).params == c.params


def test_fmt():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(True) == "1" and fmt(3) == "3"


@pytest.mark.parametrize("kind", KINDS)
def test_run_and_manifest(kind, tmp_path):
    man = run(cfg(kind, tmp_path))
    out = tmp_path / f"{kind}-1"
    assert verify_manifest(out) == []
    assert "config.ini" in man.files
    assert any(f.startswith("plot_") or f.startswith("normal_form") for f in man.files)
    for f in man.files:
        if f.endswith(".csv"):
            raw = (out / f).read_bytes()
            assert b"\r\n" not in raw
    m = json.loads((out / "manifest.json").read_text())
    assert m["status"] == "ok" and m["config"]["kind"] == kind


def test_manifest_detects_tampering(tmp_path):
    run(cfg("normal-form", tmp_path))
    out = tmp_path / "normal-form-1"
    (out / "normal_form.txt").write_text("changed\n")
    (out / "extra.csv").write_text("a\n")
    probs = verify_manifest(out)
    assert any("mismatch" in p for p in probs) and any("unlisted" in p for p in probs)


@pytest.mark.parametrize("kind", ["escape-scan", "spo-branch", "horn"])
def test_determinism_across_workers(kind, tmp_path):
    run(cfg(kind, tmp_path, 1))
    run(cfg(kind, tmp_path, 2))
    a, b = tmp_path / f"{kind}-1", tmp_path / f"{kind}-2"
    for f in sorted(a.glob("*.csv")):
        assert f.read_bytes() == (b / f.name).read_bytes()


def test_trajectory_outputs(tmp_path):
    run(cfg("trajectory", tmp_path))
    h, rows = read_csv(tmp_path / "trajectory-1" / "trace.csv")
    assert h == ["n", "kappa", "dtheta"] and len(rows) == 31
    h, rows = read_csv(tmp_path / "trajectory-1" / "snapshots.csv")
    assert sorted({int(r[0]) for r in rows}) == [2, 6, 12]
    assert len(rows) == 3 * 32


def test_failure_marker(tmp_path, monkeypatch):
    def boom(c, out):
        (out / "partial.csv").write_text("x\n1\n")
        raise RuntimeError("exploded")

    monkeypatch.setitem(harness._RUNNERS, "normal-form", boom)
    with pytest.raises(ExperimentError) as ei:
        run(cfg("normal-form", tmp_path))
    out = tmp_path / "normal-form-1"
    assert (out / "FAILED").exists() and (out / "partial.csv").exists()
    assert json.loads((out / "manifest.json").read_text())["status"] == "failed"
    assert isinstance(ei.value.cause, RuntimeError)


def test_cli_validate(capsys):
    assert main(["validate", "spo-branch"]) == 0
    assert main(["validate", "spo-branch", "--set", "q=0"]) == 1
    assert "violation" in capsys.readouterr().out


def test_cli_run(tmp_path, capsys):
    assert main(["nform", "--out", str(tmp_path / "nf"), "--set", "q=3", "--set", "order=3"]) == 0
    assert "-1/24" in (tmp_path / "nf" / "normal_form.txt").read_text()


def test_cli_error_line(tmp_path, capsys):
    code = main(["spo", "--out", str(tmp_path / "x"), "--set", "q=0"])
    err = capsys.readouterr().err
    assert code == 2
    assert err.startswith("error kind=spo-branch type=ConfigError message=")
    assert main(["horn", "--set", "novalue"]) == 2


def test_console_script_entry(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "sctransport.cli", "validate", "horn", "--set", "tol=-1"],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 1 and "tol must be > 0" in r.stdout
