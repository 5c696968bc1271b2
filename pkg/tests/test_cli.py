import json
import subprocess
import sys

import pytest

from internal_bores.cli import main

SMALL = """[fluids]
rho1 = 4
rho2 = 1
[grid]
nq = 81
np1 = 9
np2 = 9
[branch]
directions = elev, depr
max_steps = 6
checkpoint_every = 2
[diagnostics]
functionals = acf_phi, energy_bound
"""


def _cfg(tmp_path, text=SMALL):
    p = tmp_path / "run.cfg"
    p.write_text(text)
    return str(p)


def _tree(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_dump_defaults_parses(tmp_path, capsys):
    assert main(["dump-defaults"]) == 0
    text = capsys.readouterr().out
    assert "[fluids]" in text and "rho1 = 4.0" in text


def test_missing_config_is_usage_error(tmp_path):
    assert main(["run"]) == 2
    assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["run", "--config", _cfg(tmp_path, "[fluids]\nrho1 = 4\n")]) == 2
    assert "fluids.rho2" in capsys.readouterr().err


def test_unknown_subcommand():
    assert main(["frobnicate"]) == 2


def test_sanity_run(tmp_path):
    text = "[fluids]\nrho1 = 4\nrho2 = 1\n[branch]\ndirections = none\n[run]\nsanity = true\n"
    out = tmp_path / "o"
    assert main(["run", "--config", _cfg(tmp_path, text), "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["sanity"]["residual_max_ok"] and man["sanity"]["residual_max"] <= 1e-12


def test_run_deterministic_across_threads(tmp_path):
    c = _cfg(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", c, "--out", str(a), "--threads", "1"]) == 0
    assert main(["run", "--config", c, "--out", str(b), "--threads", "2"]) == 0
    assert _tree(a) == _tree(b)
    man = json.loads((a / "manifest.json").read_text())
    assert set(man["branches"]) == {"elev", "depr"}
    assert man["branches"]["depr"]["diagnostics"]["energy_bound"]["passed"]
    assert (a / "branch_depr.csv").exists() and (a / "interface_elev_0000.csv").exists()


def test_seed_state_must_match_direction(tmp_path):
    a = tmp_path / "a"
    text = SMALL.replace("directions = elev, depr", "directions = elev").replace(
        "functionals = acf_phi, energy_bound", "functionals = none")
    assert main(["run", "--config", _cfg(tmp_path, text), "--out", str(a)]) == 0
    branch = json.loads((a / "branch_elev.json").read_text())
    st = tmp_path / "state.json"
    st.write_text(json.dumps(branch["checkpoints"]["2"]))
    text_d = text.replace("directions = elev", "directions = depr")
    assert main(["run", "--config", _cfg(tmp_path, text_d), "--out", str(tmp_path / "b"),
                 "--seed-state", str(st)]) == 2
    assert main(["run", "--config", _cfg(tmp_path, text), "--out", str(tmp_path / "c"),
                 "--seed-state", str(st)]) == 0
    assert main(["diagnose", str(st), "--functional", "energy_bound,acf_phi",
                 "--radius", "0.1", "--n-radii", "4", "--out", str(tmp_path / "d")]) == 0


def test_diagnose_oracle(tmp_path, capsys):
    assert main(["diagnose", "oracle:stokes_corner", "--functional", "weiss_M,functional_AB",
                 "--radius", "1.0", "--n-radii", "5", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "diagnose.json").read_text())["summary"]
    assert summary["weiss_M"]["min"] == pytest.approx(0.5773502691896257, abs=1e-12)
    assert main(["diagnose", "oracle:nope", "--out", str(tmp_path)]) == 2


def test_diagnose_precondition_exit_code(tmp_path):
    assert main(["diagnose", "oracle:stokes_corner", "--functional", "energy_bound",
                 "--radius", "1.0", "--out", str(tmp_path)]) == 3


def test_verify_passes():
    r = subprocess.run([sys.executable, "-m", "internal_bores", "verify"],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stdout + r.stderr
    assert "FAIL" not in r.stdout
