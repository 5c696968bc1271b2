import json
import math

import numpy as np
import pytest

from internal_bores.continuation import (Branch, InconclusiveError, MonitorRecord, StepPolicy,
                                         Thresholds, classify_limit, contact_angle_estimate,
                                         seed_bore, sign_violations, trace_branch)
from internal_bores.djsolver import BoreState
from internal_bores.djsolver.grid import q_nodes
from internal_bores.params import FluidPair, FrontConfig, ParameterError

NB = FluidPair(4.0, 1.0)


def rec(lam, slope=0.1, gap_up=0.3, gap_bed=0.3, stag=1.0, ups=0.5):
    return MonitorRecord(lam, slope, -slope, gap_up, gap_bed, stag, ups)


def synthetic(direction, n=15, **series):
    b = Branch(direction, NB)
    for i in range(n):
        kw = {k: v[i] for k, v in series.items()}
        b.records.append(rec(0.7 + 0.01 * i, **kw))
    return b


def test_overturning_synthetic():
    b = synthetic("elev", slope=0.1 * 2.0 ** np.arange(15))
    v = classify_limit(b)
    assert v.trend == "overturning_trend"
    assert v.rates["max_slope"] == pytest.approx(math.log(2))


def test_gravity_current_synthetic():
    b = synthetic("depr", gap_up=0.5 * 0.5 ** np.arange(15), ups=0.5 ** np.arange(15))
    assert classify_limit(b).trend == "gravity_current_trend"


def test_double_stagnation_synthetic():
    b = synthetic("depr", stag=0.5 * 0.7 ** np.arange(15))
    assert classify_limit(b).trend == "double_stagnation_trend"


def test_flat_branch_inconclusive():
    assert classify_limit(synthetic("depr")).trend == "inconclusive"


def test_thresholds_are_overridable():
    b = synthetic("elev", slope=0.01 * 1.2 ** np.arange(15))
    assert classify_limit(b).trend == "inconclusive"
    assert classify_limit(b, Thresholds(slope=0.05)).trend == "overturning_trend"


def test_classify_needs_ten_records():
    with pytest.raises(ValueError):
        classify_limit(synthetic("elev", n=9))


def _wedge_branch(slope, direction="depr", gaps=(0.02, 0.01, 0.005, 0.0025)):
    """Interfaces meeting a wall with constant slope, at shrinking gaps."""
    L, nq = 1.0, 801
    q = q_nodes(L, nq)[0]
    b = Branch(direction, NB)
    for k, g in enumerate(gaps):
        lam = 0.6
        if direction == "depr":
            wall = 1 - lam
            eta = np.minimum(wall - g + slope * q, wall - g)
        else:
            wall = -lam
            eta = np.maximum(wall + g - slope * q, wall + g)
        H1 = np.column_stack([eta, np.full(nq, -lam)])
        H2 = np.column_stack([np.full(nq, 1 - lam), eta])
        b.states[k] = BoreState(H1, H2, lam, NB, L)
        b.records.append(rec(lam, gap_up=g if direction == "depr" else 0.5,
                             gap_bed=g if direction == "elev" else 0.5))
    return b


@pytest.mark.parametrize("direction", ["depr", "elev"])
def test_contact_angle_sixty_degrees(direction):
    out = contact_angle_estimate(_wedge_branch(np.sqrt(3), direction))
    assert out["angle_deg"] == pytest.approx(60.0, abs=1e-6)


def test_contact_angle_needs_states():
    b = _wedge_branch(1.0, gaps=(0.01,))
    with pytest.raises(InconclusiveError):
        contact_angle_estimate(b, order=1)


def test_bad_direction():
    with pytest.raises(ParameterError):
        trace_branch("sideways", NB, FrontConfig(0.6, NB))


@pytest.fixture(scope="module")
def short_branch():
    cfg = FrontConfig(0.6, NB, nq=81, np1=9, np2=9)
    return trace_branch("depr", NB, cfg, StepPolicy(max_steps=6, checkpoint_every=2))


def test_short_branch_properties(short_branch):
    b = short_branch
    assert b.termination == "max_steps"
    lams = b.lams
    assert np.all(np.diff(lams) > 0)
    gaps = b.column("wall_gap")
    assert np.all(np.diff(gaps) < 0)
    assert all(r.is_finite() for r in b.records)
    assert all(r.wall_gap_upper > 0 and r.wall_gap_bed > 0 for r in b.records)
    for st in b.states.values():
        assert sign_violations(st, "depr") == []


def test_branch_export_round_trip(tmp_path, short_branch):
    b = short_branch
    b.write_json(tmp_path / "b.json")
    back = Branch.from_dict(json.loads((tmp_path / "b.json").read_text()))
    assert back.records == b.records and sorted(back.states) == sorted(b.states)
    b.write_csv(tmp_path / "b.csv")
    rows = (tmp_path / "b.csv").read_text().splitlines()
    assert rows[0].startswith("# branch csv v1")
    assert len(rows) == 2 + len(b.records)


def test_seed_from_state(short_branch):
    k = max(short_branch.states)
    st = short_branch.states[k]
    cfg = FrontConfig(0.6, NB, nq=81, np1=9, np2=9)
    b = trace_branch("depr", NB, cfg, StepPolicy(max_steps=1), seed=st)
    assert b.records[0].lam == pytest.approx(st.lam)


def test_sign_violation_detected():
    st = seed_bore("elev", FrontConfig(0.6, NB, nq=61, np1=7, np2=7))
    assert sign_violations(st, "elev") == []
    assert sign_violations(st, "depr")
