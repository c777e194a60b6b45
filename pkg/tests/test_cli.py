import json
import subprocess
import sys
from pathlib import Path

import pytest

from unbounded_gibbs import cli, tasks
from unbounded_gibbs.config import (ConfigError, DisorderConfig, EngineConfig, ModelConfig, RunConfig,
                                    load_config, save_config, validate_dict)

ROOT = Path(__file__).resolve().parents[1]
QUICK = ROOT / "configs" / "quick.toml"


def write(tmp_path, text, name="c.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


# ---------------------------------------------------------------- configuration

def test_round_trip(tmp_path):
    cfg = RunConfig(ModelConfig(d=2, q=1.5, alpha=0.7, potential=[0, 0, 1, 0, 0, 0, 0, 0, 2]),
                    DisorderConfig(scale=0.3, n_realizations=7, master_seed=11),
                    EngineConfig(ti_points=5),
                    [{"kind": "dlr", "n_cases": 2, "region": {"shape": "chain", "length": 3}}],
                    "out")
    assert RunConfig.loads(cfg.dumps()) == cfg
    save_config(cfg, tmp_path / "x.toml")
    assert load_config(tmp_path / "x.toml") == cfg
    assert load_config(tmp_path / "x.toml").digest() == cfg.digest()


def test_default_config_is_valid():
    assert validate_dict(RunConfig().to_dict()) == []
    assert validate_dict({}) == []


@pytest.mark.parametrize("raw,message", [
    ({"model": {"q": 1.0}}, "q must exceed 1"),
    ({"model": {"potential": [0, 0, 0, 0, 1]}}, "deg V = 4 not > p = 4"),
    ({"model": {"potential": [0, 1, 0, 0, 0, 0, 1]}}, "odd coefficients"),
    ({"model": {"alpha": 0}}, "alpha"),
    ({"model": {"colour": 1}}, "unknown field"),
    ({"disorder": {"scale": -1}}, "disorder.scale"),
    ({"disorder": {"n_realizations": 0}}, "n_realizations"),
    ({"engines": {"ti_points": 4}}, "odd integer"),
    ({"tasks": [{"kind": "teleport"}]}, "unknown task kind"),
    ({"tasks": [{"kind": "gks", "n_realizations": -3}]}, "positive integer"),
    ({"extra": {}}, "unknown section"),
])
def test_validation_messages(raw, message):
    diags = validate_dict(raw)
    assert any(message in d for d in diags), diags
    with pytest.raises(ConfigError):
        RunConfig.from_dict(raw)


def test_every_violation_is_listed():
    diags = validate_dict({"model": {"q": 0.5, "alpha": -1}, "disorder": {"scale": -2}})
    assert len(diags) >= 3


# ---------------------------------------------------------------- CLI

def test_validate_command(tmp_path, capsys):
    good = write(tmp_path, "[model]\nq = 2.0\n")
    assert cli.main(["validate", "--config", str(good)]) == 0
    assert capsys.readouterr().out.strip() == "ok"
    bad = write(tmp_path, "[model]\nq = 1.0\npotential = [0, 0, 0, 0, 1]\n", "bad.toml")
    assert cli.main(["validate", "--config", str(bad)]) == 1
    assert "q must exceed 1" in capsys.readouterr().out
    broken = write(tmp_path, "[model\n", "broken.toml")
    assert cli.main(["validate", "--config", str(broken)]) == 1
    assert cli.main(["validate", "--config", str(tmp_path / "missing.toml")]) == 1


def test_empty_task_list(tmp_path):
    cfg = write(tmp_path, "tasks = []\n")
    out = tmp_path / "res"
    assert cli.main(["run", "--config", str(cfg), "--output", str(out)]) == 0
    manifest = cli.RunManifest.from_json((out / "manifest.json").read_text())
    assert manifest.tasks == [] and manifest.exit_code == 0
    assert cli.main(["report", "--output", str(out)]) == 0


def test_invalid_config_exits_with_one(tmp_path):
    cfg = write(tmp_path, "[model]\nq = 1.0\n")
    assert cli.main(["run", "--config", str(cfg), "--output", str(tmp_path / "o")]) == 1


def _fake_runner(checks):
    def runner(ctx):
        return tasks.TaskOutcome({"t": [{"a": 1}]}, checks)
    return runner


@pytest.mark.parametrize("checks,code", [
    ([tasks.Check("x", True, True)], 0),
    ([tasks.Check("x", True, True), tasks.Check("y", False, False)], 3),
    ([tasks.Check("x", False, True), tasks.Check("y", False, False)], 2),
])
def test_exit_code_contract(tmp_path, monkeypatch, checks, code):
    monkeypatch.setitem(tasks.RUNNERS, "one_point", _fake_runner(checks))
    cfg = write(tmp_path, '[[tasks]]\nkind = "one_point"\nname = "fake"\n')
    assert cli.main(["run", "--config", str(cfg), "--output", str(tmp_path / "o")]) == code
    assert (tmp_path / "o" / "fake__t.csv").read_text().splitlines() == ["a", "1"]


def test_task_error_exits_with_one(tmp_path, monkeypatch):
    def boom(ctx):
        raise RuntimeError("no")
    monkeypatch.setitem(tasks.RUNNERS, "one_point", boom)
    cfg = write(tmp_path, '[[tasks]]\nkind = "one_point"\n')
    assert cli.main(["run", "--config", str(cfg), "--output", str(tmp_path / "o")]) == 1
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["tasks"][0]["status"] == "error" and "no" in manifest["tasks"][0]["error"]


def test_output_directory_precedence(tmp_path, monkeypatch):
    cfg = write(tmp_path, f'output_dir = "{tmp_path / "from_config"}"\ntasks = []\n')
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "from_env"))
    assert cli.main(["run", "--config", str(cfg)]) == 0
    assert (tmp_path / "from_env" / "manifest.json").exists()
    assert cli.main(["run", "--config", str(cfg), "--output", str(tmp_path / "from_flag")]) == 0
    assert (tmp_path / "from_flag" / "manifest.json").exists()
    monkeypatch.delenv(cli.OUTPUT_ENV)
    assert cli.main(["run", "--config", str(cfg)]) == 0
    assert (tmp_path / "from_config" / "manifest.json").exists()


def _payload(directory: Path) -> dict[str, str]:
    return {p.name: p.read_text() for p in sorted(directory.glob("*.csv"))}


def test_quick_config_is_deterministic_across_threads_and_seeds(tmp_path):
    config = load_config(QUICK)
    first = cli.run(config, tmp_path / "a", threads=1)
    second = cli.run(config, tmp_path / "b", threads=3)
    assert first.exit_code == 0, first.summary
    assert _payload(tmp_path / "a") == _payload(tmp_path / "b")
    assert len(_payload(tmp_path / "a")) >= len(config.tasks)
    assert first.config_hash == second.config_hash
    assert {t.kind for t in first.tasks} == set(tasks.RUNNERS)


def test_seed_override_changes_results(tmp_path):
    text = QUICK.read_text().split("[[tasks]]")[0] + '[[tasks]]\nkind = "superadditivity"\nn_realizations = 5\n'
    cfg = write(tmp_path, text)
    assert cli.main(["run", "--config", str(cfg), "--output", str(tmp_path / "a")]) == 0
    assert cli.main(["run", "--config", str(cfg), "--output", str(tmp_path / "b"), "--seed", "99"]) == 0
    assert _payload(tmp_path / "a") != _payload(tmp_path / "b")


def test_console_entry_point(tmp_path):
    cfg = write(tmp_path, "tasks = []\n")
    done = subprocess.run([sys.executable, "-m", "unbounded_gibbs.cli", "run", "--config", str(cfg),
                           "--output", str(tmp_path / "o")], capture_output=True, text=True)
    assert done.returncode == 0, done.stderr
    assert "exit 0" in done.stdout
