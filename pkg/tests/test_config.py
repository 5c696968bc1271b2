import pytest

from internal_bores.config import REQUIRED, ConfigError, RunConfig, load, loads


def test_defaults_round_trip():
    cfg = RunConfig()
    assert loads(cfg.dumps()) == cfg
    assert loads(cfg.dumps(comments=True)) == cfg


def test_floats_round_trip_exactly():
    cfg = RunConfig()
    cfg.grid.newton_tol = 0.1 + 0.2
    cfg.branch.min_step = 1 / 3
    assert loads(cfg.dumps()) == cfg


def test_digest_tracks_content():
    a, b = RunConfig(), RunConfig()
    assert a.digest() == b.digest()
    b.grid.nq = 101
    assert a.digest() != b.digest()


def test_partial_file_keeps_defaults():
    cfg = loads("[fluids]\nrho1 = 9\nrho2 = 1\n[grid]\nnq = 101  # coarse\n", REQUIRED)
    assert cfg.fluids.rho1 == 9.0 and cfg.grid.nq == 101 and cfg.grid.np1 == 21


def test_missing_required_field_names_it():
    with pytest.raises(ConfigError) as ei:
        loads("[fluids]\nrho1 = 4\n", REQUIRED)
    assert ei.value.field_name == "fluids.rho2" and ei.value.line == 1


@pytest.mark.parametrize("text,field,line", [
    ("[fluids]\nrho1 = 4\nrho2 = 1\n[grid]\nnq = many\n", "grid.nq", 5),
    ("[fluids]\nrho1 = 4\nrho2 = 1\nrho3 = 1\n", "fluids.rho3", 4),
    ("[fluids]\nrho1 = 4\nrho2 = 1\n[extra]\nx = 1\n", "extra", 4),
    ("[run]\nsanity = maybe\n", "run.sanity", 2),
])
def test_bad_values_report_field_and_line(text, field, line):
    with pytest.raises(ConfigError) as ei:
        loads(text)
    assert ei.value.field_name == field and ei.value.line == line
    assert f"line {line}" in str(ei.value)


def test_validate_catches_semantic_errors():
    cfg = loads("[fluids]\nrho1 = 1\nrho2 = 4\n")
    with pytest.raises(ConfigError):
        cfg.validate()
    cfg = loads("[branch]\ndirections = elev, up\n")
    with pytest.raises(ConfigError):
        cfg.validate()
    cfg = loads("[diagnostics]\nfunctionals = weiss_M, nope\n")
    with pytest.raises(ConfigError):
        cfg.validate()
    cfg = loads("[contact]\nband_lo = 0.05\nband_hi = 0.01\n")
    with pytest.raises(ConfigError):
        cfg.validate()


def test_derived_objects():
    cfg = loads("[branch]\ndirections = elev,depr\nmax_step = 0.01\n")
    assert cfg.direction_list() == ["elev", "depr"]
    assert cfg.step_policy().max_step == 0.01
    assert cfg.front_config(0.6).lam == 0.6
    assert loads("[branch]\ndirections = none\n").direction_list() == []


def test_load_from_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("[fluids]\nrho1 = 4\nrho2 = 1\n")
    assert load(p).fluids.rho2 == 1.0
