import json

import pytest

from optomod.cli import main

SMALL = {"modulation": {"epsilon": 0.2, "omega1_over_omega_m": 2.0}, "run": {"n_samples": 32}}


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(SMALL))
    return str(path)


def test_constants(capsys):
    assert main(["--constants"]) == 0
    assert "hbar" in capsys.readouterr().out


def test_no_command():
    assert main([]) == 2


def test_steady(small_config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["steady", "--config", small_config, "--out", str(out)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["metrics"]["qvar_min"] < 0.5
    assert (out / "orbit.csv").exists() and (out / "covariance.csv").exists()


def test_stability(small_config, capsys):
    assert main(["stability", "--config", small_config]) == 0
    assert json.loads(capsys.readouterr().out)["stable"] is True


def test_invalid_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"system": {"mass_kg": -1}}')
    assert main(["steady", "--config", str(bad)]) == 2
    assert main(["steady", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["steady", "--samples", "3"]) == 2


def test_numerical_failure(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"modulation": {"epsilon": 0.5, "omega1_over_omega_m": 2.0},
                                "run": {"n_samples": 32}}))
    assert main(["steady", "--config", str(path)]) == 3


def test_io_error(small_config, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["steady", "--config", small_config, "--out", str(blocker / "d")]) == 4


def test_perturb(capsys):
    assert main(["perturb", "--order", "2"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["classical"]["q"]["a0"] > 0
    assert main(["perturb", "--paper-table"]) == 0
    assert "two modulations" in capsys.readouterr().out


def test_sweep2d_small(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"run": {"n_samples": 32, "grid_shape": [3, 2],
                                        "omega_range": [1.9, 2.1],
                                        "epsilon_range": [0.0, 0.2]}}))
    out = tmp_path / "o"
    assert main(["sweep2d", "--config", str(path), "--out", str(out), "--format", "csv"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["cells"] == 6 and summary["ok"] == 6
    assert [p.name for p in out.iterdir()] == ["sweep2d.csv"]


def test_phase_small(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"run": {"n_samples": 32, "phase_points": 4}}))
    assert main(["phase", "--config", str(path), "--out", str(tmp_path)]) == 0
    assert json.loads(capsys.readouterr().out)["points"] == 4
    assert (tmp_path / "phase.csv").exists()


def test_flags_before_subcommand():
    from optomod.cli import build_parser
    p = build_parser()
    assert p.parse_args(["--samples", "32", "stability"]).samples == 32
    assert p.parse_args(["stability", "--samples", "16"]).samples == 16
    assert p.parse_args(["stability"]).samples is None
