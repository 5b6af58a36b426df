import json
import subprocess
import sys

import pytest

from filament_lab.cli import FLAG_HELP, main, run_directory


def _run(tmp_path, *args):
    return main([*args, "--output-dir", str(tmp_path)])


def test_out_of_range_gamma_exits_with_usage_error(tmp_path, capsys):
    assert _run(tmp_path, "waveop", "--gamma", "1.5") == 2
    assert "gamma:" in capsys.readouterr().err


def test_unknown_config_key_is_rejected(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"gama": 0.5}))
    assert _run(tmp_path, "profile", "--config", str(cfg)) == 2


def test_shoot_is_deterministic(tmp_path):
    outputs = []
    for sub in ("first", "second"):
        root = tmp_path / sub
        assert _run(root, "shoot", "--a", "0.5") == 0
        (run_dir,) = root.iterdir()
        report = json.loads((run_dir / "report.json").read_text())
        assert report["passed"]
        data = {p.name: p.read_bytes() for p in sorted(run_dir.iterdir())
                if p.name not in ("report.json", "config.json")}
        assert data
        outputs.append(data)
    assert outputs[0] == outputs[1]


def test_run_directory_depends_only_on_config(tmp_path):
    cfg = {"experiment": "shoot", "a": 0.5, "output_dir": str(tmp_path)}
    assert run_directory(cfg) == run_directory(dict(reversed(list(cfg.items()))))
    assert run_directory(cfg) != run_directory({**cfg, "a": 0.6})


def test_empty_suite_passes(tmp_path):
    assert _run(tmp_path, "suite", "--bundle", "empty") == 0


def test_quick_checks_from_the_suite(tmp_path, capsys):
    assert _run(tmp_path, "suite", "--criteria", "2", "12") == 0
    out = capsys.readouterr().out
    assert "PASS criterion  2" in out and "PASS criterion 12" in out
    (run_dir,) = tmp_path.iterdir()
    results = json.loads((run_dir / "acceptance.json").read_text())
    assert len(results) == 2


def test_spiral_writes_curves(tmp_path):
    assert _run(tmp_path, "spiral", "--a", "1.0", "--lam", "0.3") == 0
    (run_dir,) = tmp_path.iterdir()
    names = {p.name for p in run_dir.iterdir()}
    assert {"spiral.json", "config.json", "report.json"} <= names
    assert any(n.startswith("curve_t") for n in names)


def test_help_lists_every_flag():
    out = subprocess.run([sys.executable, "-m", "filament_lab.cli", "waveop", "--help"],
                         capture_output=True, text=True, check=True).stdout
    for key in FLAG_HELP:
        assert f"--{key.replace('_', '-')}" in out


@pytest.mark.parametrize("experiment", ["profile", "pvtest", "reconstruct"])
def test_light_experiments_pass(tmp_path, experiment):
    assert _run(tmp_path, experiment) == 0
