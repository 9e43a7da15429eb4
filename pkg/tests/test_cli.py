import json
import subprocess
import sys

import pytest

from coherent_rx.cli import main


@pytest.fixture
def mary_cfg(tmp_path):
    path = tmp_path / "mary.yaml"
    path.write_text("amplitudes: [5, -6, 3]\npriors: [0.8, 0.1, 0.1]\nT: [0.2]\nslices: 2\ntrials: 500\n")
    return path


def test_capacity_without_energies_is_config_error(capsys):
    assert main(["capacity", "--seed", "0", "--config", "/dev/null"]) == 2
    capsys.readouterr()


def test_binary_json_file(tmp_path):
    out = tmp_path / "r.json"
    rc = main(["binary-sim", "--seed", "4", "--trials", "200", "--slices", "100", "--out", str(out)])
    assert rc == 2  # no amplitudes given
    cfg = tmp_path / "b.yaml"
    cfg.write_text("amplitudes: [0, 1]\npriors: [0.6, 0.4]\n")
    rc = main(["binary-sim", "--config", str(cfg), "--seed", "4", "--trials", "200", "--delta", "0.01",
               "--lmax", "500", "--out", str(out)])
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["config"]["l_max"] == 500 and rep["points"][0]["n_slices"] == 100


def test_alpha_schedule_file(tmp_path, mary_cfg):
    sched = tmp_path / "alpha.yaml"
    sched.write_text("values: [100, 1]\nbreaks: [1]\n")
    out = tmp_path / "m.csv"
    rc = main(["mary-sim", "--config", str(mary_cfg), "--seed", "1", "--alpha", str(sched),
               "--format", "csv", "--out", str(out)])
    assert rc == 0
    assert out.read_text().startswith("T,n_slices,estimate")


def test_config_error_exit_codes(tmp_path, mary_cfg, capsys):
    assert main(["mary-sim", "--config", str(mary_cfg)]) == 2
    assert main(["mary-sim", "--config", str(mary_cfg), "--seed", "1", "--trials", "0"]) == 2
    assert main(["mary-sim", "--config", str(tmp_path / "missing.yaml"), "--seed", "1"]) == 2
    assert main(["mary-sim", "--config", str(mary_cfg), "--seed", "1", "--workers", "0"]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("kind: capacity\nseed: 1\nenergies: [0.001]\n")
    assert main(["mary-sim", "--config", str(bad)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["mary-sim", "--delta", "0.1", "--slices", "3"])
    assert exc.value.code == 2
    assert "config error" in capsys.readouterr().err


def test_runtime_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("energies: [0.001]\nM: 8\np: 0.01\n")
    assert main(["coded-sim", "--config", str(cfg), "--seed", "1"]) == 3
    assert "runtime error" in capsys.readouterr().err


def test_console_script_workers_identical(tmp_path, mary_cfg):
    outs = []
    for w in ("1", "2"):
        out = tmp_path / f"w{w}.json"
        subprocess.run([sys.executable, "-m", "coherent_rx.cli", "mary-sim", "--config", str(mary_cfg),
                        "--seed", "9", "--workers", w, "--out", str(out)], check=True)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
