"""Natural-parameter continuation of bores in the upstream depth lambda.

Two branches leave the trivial solution lambda = H_d:

* ``elev``: lambda decreasing, the interface rises downstream;
* ``depr``: lambda increasing, the interface drops downstream.

Each accepted state is summarized by a MonitorRecord.  ``classify_limit``
reads the late-branch trends and ``contact_angle_estimate`` extrapolates the
interface slope near the approached wall.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .params import FluidPair, FrontConfig, ParameterError, conjugate_downstream
from .djsolver import (BoreField, BoreState, DegeneracyError, NonConvergenceError,
                       newton_solve, rescale_state, tanh_seed)

log = logging.getLogger(__name__)

DIRECTIONS = ("elev", "depr")
TRENDS = ("overturning_trend", "gravity_current_trend", "double_stagnation_trend",
          "inconclusive")
CSV_VERSION = 1


class SetupError(RuntimeError):
    """The initial small-amplitude bore could not be computed."""


class InconclusiveError(RuntimeError):
    pass


@dataclass
class MonitorRecord:
    lam: float
    max_slope: float
    min_slope_signed: float
    wall_gap_upper: float
    wall_gap_bed: float
    stagnation_indicator: float
    upper_interface_speed: float
    delta: float = 0.0
    newton_iterations: int = 0
    residual_norm: float = float("nan")

    def wall_gap(self, direction: str) -> float:
        """Gap to the wall the branch approaches."""
        return self.wall_gap_upper if direction == "depr" else self.wall_gap_bed

    def is_finite(self) -> bool:
        return all(math.isfinite(getattr(self, f.name)) for f in fields(self))


def interface_slope(state: BoreState) -> tuple[np.ndarray, np.ndarray]:
    """(q, d eta/dq) on the grid: central differences, one-sided at the ends."""
    q = state.q
    return q, np.gradient(state.eta, q, edge_order=2)


def monitor(state: BoreState, cfg: FrontConfig | None = None, nx: int = 2001) -> MonitorRecord:
    """Monitors of one converged state.

    ``upper_interface_speed`` is min over the interface of |psi_{2,y}|, i.e.
    minus the sup of psi_{2,y} (which is negative everywhere).
    """
    cfg = cfg or state.config()
    bf = BoreField(state, cfg)
    _, slope = interface_slope(state)
    x = np.linspace(-cfg.L, cfg.L, nx)
    x = np.union1d(x, state.q)
    eta = state.eta
    s1, s2 = bf.interface_speeds(state.q)
    H2p = bf._l2.H(state.q, np.zeros_like(state.q), dy=1)
    return MonitorRecord(
        lam=float(cfg.lam),
        max_slope=float(np.max(np.abs(slope))),
        min_slope_signed=float(np.min(bf.eta_x(x))),
        wall_gap_upper=float(np.min(cfg.h2 - eta)),
        wall_gap_bed=float(np.min(eta + cfg.lam)),
        stagnation_indicator=float(np.min(np.sqrt(s1) + np.sqrt(s2))),
        upper_interface_speed=float(np.min(np.abs(1.0 / H2p))),
        delta=float(state.delta),
        newton_iterations=int(state.newton_iterations),
        residual_norm=float(state.residual_norm),
    )


def far_field_zone(state: BoreState, factor: float = 10.0) -> np.ndarray:
    """Columns whose interface is within ``factor * |delta|`` of a clamped end value.

    There the discrete downstream level implied by the interface row differs
    from the clamp by O(delta), which leaves a tiny wrong-signed ramp against
    the Dirichlet column.
    """
    eta = state.eta
    tol = max(1e-10, factor * abs(state.delta))
    return (np.abs(eta - eta[0]) <= tol) | (np.abs(eta - eta[-1]) <= tol)


def sign_violations(state: BoreState, direction: str, tol: float = 1e-10) -> list[str]:
    """Strict-sign conditions of a monotone bore at interior grid points.

    eta_q has the branch sign (>= 0 on elev, <= 0 on depr), H_p < 0 in both
    layers (psi_y < 0), and psi_x = -H_q/H_p has the branch sign.  Columns
    in the far-field zone (see ``far_field_zone``) are exempt from the slope
    sign tests.
    """
    s = 1.0 if direction == "elev" else -1.0
    out = []
    _, slope = interface_slope(state)
    check = ~far_field_zone(state)
    check[[0, -1]] = False
    bad = np.nonzero(check & (s * slope < -tol))[0]
    if bad.size:
        out.append(f"eta_q has the wrong sign at {bad.size} nodes (first j={bad[0]})")
    for name, H in (("lower", state.H1), ("upper", state.H2)):
        if np.any(np.diff(H, axis=1) >= 0):
            out.append(f"H_p >= 0 in {name} layer")
        Hq = np.gradient(H, state.q, axis=0)
        if np.any(s * Hq[check] < -tol):
            out.append(f"psi_x has the wrong sign in {name} layer")
    return out


# ---------------------------------------------------------------------------
# branches

@dataclass
class StepPolicy:
    """Step control for lambda continuation.

    Steps are capped at ``wall_fraction`` of the remaining distance to the
    limiting value (0 for elev, 1 for depr), so the branch approaches the
    wall geometrically.
    """

    initial: float = 0.02
    max_step: float = 0.02
    min_step: float = 1e-5
    grow: float = 1.5
    wall_fraction: float = 0.25
    wall_gap_floor: float = 2e-4
    delta_max: float = 0.1
    max_steps: int = 400
    seed_offset: float = 0.02
    seed_width: float = 3.0
    checkpoint_every: int = 5
    keep_last: int = 12


@dataclass
class Branch:
    direction: str
    fluids: FluidPair
    records: list = field(default_factory=list)
    states: dict = field(default_factory=dict)
    termination: str = ""
    config: FrontConfig | None = None

    @property
    def lams(self) -> np.ndarray:
        return np.array([r.lam for r in self.records])

    def column(self, name: str) -> np.ndarray:
        if name == "wall_gap":
            return np.array([r.wall_gap(self.direction) for r in self.records])
        return np.array([getattr(r, name) for r in self.records])

    # -- export ------------------------------------------------------------
    def write_csv(self, path) -> None:
        names = [f.name for f in fields(MonitorRecord)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"# branch csv v{CSV_VERSION}", self.direction])
            w.writerow(["index"] + names)
            for i, r in enumerate(self.records):
                w.writerow([i] + [_fmt(getattr(r, n)) for n in names])

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "fluids": asdict(self.fluids),
            "termination": self.termination,
            "records": [asdict(r) for r in self.records],
            "checkpoints": {str(k): s.to_dict() for k, s in sorted(self.states.items())},
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, allow_nan=True)
            fh.write("\n")

    @classmethod
    def from_dict(cls, d: dict) -> "Branch":
        b = cls(d["direction"], FluidPair(**d["fluids"]), termination=d.get("termination", ""))
        b.records = [MonitorRecord(**r) for r in d["records"]]
        b.states = {int(k): BoreState.from_dict(v) for k, v in d.get("checkpoints", {}).items()}
        return b


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v)) if not math.isfinite(v) else f"{float(v):.17g}"


def seed_bore(direction: str, cfg: FrontConfig, offset: float = 0.02,
              width: float = 3.0) -> BoreState:
    """Small-amplitude bore next to the trivial depth, from a tanh seed."""
    if direction not in DIRECTIONS:
        raise ParameterError(f"direction must be one of {DIRECTIONS}")
    Hd = conjugate_downstream(cfg.fluids)
    lam = Hd - offset if direction == "elev" else Hd + offset
    c = cfg.with_lambda(lam)
    try:
        return newton_solve(tanh_seed(c, width), c)
    except (NonConvergenceError, DegeneracyError) as exc:
        raise SetupError(f"seed bore at lambda={lam:.6g} did not converge: {exc}") from exc


def trace_branch(direction: str, fluids: FluidPair, cfg: FrontConfig,
                 policy: StepPolicy | None = None, seed: BoreState | None = None,
                 callback=None, state_callback=None) -> Branch:
    """Continue a bore branch in lambda from a small-amplitude seed.

    ``cfg.lam`` is ignored except through ``seed``.  Terminates on step
    underflow, a degeneracy error, the wall-gap floor, ``|delta| > delta_max``
    or ``max_steps``;
    the reason is stored in ``Branch.termination``.  ``callback(record)`` and
    ``state_callback(index, state)`` see every accepted state.
    """
    if direction not in DIRECTIONS:
        raise ParameterError(f"direction must be one of {DIRECTIONS}")
    if fluids != cfg.fluids:
        cfg = replace(cfg, fluids=fluids)
    pol = policy or StepPolicy()
    sgn = -1.0 if direction == "elev" else 1.0
    limit = 0.0 if direction == "elev" else 1.0
    state = seed if seed is not None else seed_bore(direction, cfg, pol.seed_offset,
                                                    pol.seed_width)
    if seed is not None:
        state = _solve_at(state, cfg.with_lambda(seed.lam))
    br = Branch(direction, fluids, config=cfg)
    tail: list[tuple[int, BoreState]] = []

    def accept(st):
        rec = monitor(st)
        viol = sign_violations(st, direction)
        if viol:
            return rec, viol
        br.records.append(rec)
        k = len(br.records) - 1
        if k % pol.checkpoint_every == 0:
            br.states[k] = st
        tail.append((k, st))
        del tail[:-pol.keep_last]
        if callback is not None:
            callback(rec)
        if state_callback is not None:
            state_callback(k, st)
        return rec, None

    rec, viol = accept(state)
    if viol:
        raise SetupError("seed bore fails the sign conditions: " + "; ".join(viol))
    step = pol.initial
    easy = 0
    reason = ""
    while True:
        if len(br.records) > pol.max_steps:
            reason = "max_steps"
            break
        if rec.wall_gap(direction) < pol.wall_gap_floor:
            reason = "wall_gap_floor"
            break
        if abs(rec.delta) > pol.delta_max:
            # the Bernoulli correction is the discretisation error; past this
            # the grid no longer resolves the state
            reason = "resolution_limit"
            break
        lam = state.lam
        h = min(step, pol.max_step, pol.wall_fraction * abs(limit - lam))
        if h < pol.min_step:
            reason = "min_step"
            break
        new_lam = lam + sgn * h
        c = cfg.with_lambda(new_lam)
        try:
            cand = newton_solve(rescale_state(state, c), c)
            new_rec, viol = accept(cand)
            if viol:
                raise NonConvergenceError("sign conditions violated: " + "; ".join(viol),
                                          float("nan"), cand)
        except NonConvergenceError as exc:
            log.info("step %.3g from lambda=%.6g failed: %s", h, lam, exc)
            step = 0.5 * h
            easy = 0
            if step < pol.min_step:
                reason = f"min_step ({exc})"
                break
            continue
        except DegeneracyError as exc:
            # shrink first; a persistent degeneracy ends the branch
            log.info("degeneracy from lambda=%.6g step %.3g: %s", lam, h, exc)
            step = 0.5 * h
            easy = 0
            if step < pol.min_step:
                reason = f"degeneracy ({exc})"
                break
            continue
        state, rec = cand, new_rec
        easy = easy + 1 if cand.newton_iterations <= 4 else 0
        if easy >= 3:
            step = min(pol.max_step, step * pol.grow)
            easy = 0
    for k, st in tail:
        br.states[k] = st
    br.termination = reason
    return br


def _solve_at(state: BoreState, cfg: FrontConfig) -> BoreState:
    try:
        return newton_solve(rescale_state(state, cfg), cfg)
    except (NonConvergenceError, DegeneracyError) as exc:
        raise SetupError(f"seed state did not converge: {exc}") from exc


# ---------------------------------------------------------------------------
# classification

@dataclass
class Thresholds:
    slope: float = 2.0
    wall_gap: float = 0.05
    stagnation: float = 0.05
    flat_rate: float = 0.05


@dataclass
class Verdict:
    trend: str
    rates: dict

    def __str__(self):
        return self.trend


def _log_rate(values: np.ndarray) -> float:
    """Least-squares slope of log(values) against record index."""
    v = np.asarray(values, float)
    if v.size < 2 or np.any(v <= 0):
        return float("nan")
    return float(np.polyfit(np.arange(v.size), np.log(v), 1)[0])


def classify_limit(branch: Branch, thresholds: Thresholds | None = None) -> Verdict:
    """Dominant limiting trend over the final third of the branch.

    Rates are least-squares slopes of log(monitor) per record.  Gravity
    current wins over overturning when both fire, since a vanishing gap is
    the sharper statement; double stagnation requires the other two flat.
    """
    th = thresholds or Thresholds()
    n = len(branch.records)
    if n < 10:
        raise ValueError("classify_limit needs at least 10 records")
    tail = slice(n - max(3, n // 3), n)
    slope = branch.column("max_slope")[tail]
    gap = branch.column("wall_gap")[tail]
    stag = branch.column("stagnation_indicator")[tail]
    rates = {"max_slope": _log_rate(slope), "wall_gap": _log_rate(gap),
             "stagnation_indicator": _log_rate(stag)}
    gc = gap[-1] < th.wall_gap and rates["wall_gap"] < 0
    ot = slope[-1] > th.slope and rates["max_slope"] > 0
    flat = (abs(rates["max_slope"]) < th.flat_rate and abs(rates["wall_gap"]) < th.flat_rate)
    ds = stag[-1] < th.stagnation and rates["stagnation_indicator"] < 0 and flat
    if gc:
        trend = "gravity_current_trend"
    elif ot:
        trend = "overturning_trend"
    elif ds:
        trend = "double_stagnation_trend"
    else:
        trend = "inconclusive"
    return Verdict(trend, rates)


# ---------------------------------------------------------------------------
# contact angle

def band_slope(q, eta, wall: float, side: str, band) -> float:
    """Mean |eta_q| where the distance to the wall lies in ``band``.

    ``side`` is "upper" (distance = wall - eta) or "bed" (eta - wall).
    Fitted as the least-squares line of q against distance on that band,
    which is stable where the interface is steep.
    """
    d = (wall - eta) if side == "upper" else (eta - wall)
    lo, hi = band
    m = (d >= lo) & (d <= hi)
    if np.count_nonzero(m) < 3:
        # interpolate q(d) on a fine band when the grid is coarse there
        order = np.argsort(d)
        ds, qs = d[order], q[order]
        if ds[0] > lo or ds[-1] < hi:
            return float("nan")
        dd = np.linspace(lo, hi, 9)
        qq = np.interp(dd, ds, qs)
        return float(1.0 / abs(np.polyfit(dd, qq, 1)[0]))
    return float(1.0 / abs(np.polyfit(d[m], q[m], 1)[0]))


def contact_angle_estimate(branch: Branch, band=(0.01, 0.03), relative: bool = True,
                           n_states: int = 6, order: int = 1) -> dict:
    """Contact angle (degrees) of the interface with the approached wall.

    For each of the last ``n_states`` stored states with gap g, the slope is
    fitted over wall distances ``g + band`` (``relative``) or ``band``; the
    slope sequence is extrapolated to g -> 0 by a polynomial of ``order`` in
    g (Richardson).  Returns the angle plus the raw sequence.
    """
    side = "upper" if branch.direction == "depr" else "bed"
    keys = sorted(branch.states)[-n_states:]
    gaps, slopes = [], []
    for k in keys:
        st = branch.states[k]
        wall = (1.0 - st.lam) if side == "upper" else -st.lam
        g = branch.records[k].wall_gap(branch.direction)
        b = (g + band[0], g + band[1]) if relative else band
        s = band_slope(st.q, st.eta, wall, side, b)
        if math.isfinite(s):
            gaps.append(g)
            slopes.append(s)
    if len(gaps) < order + 1:
        raise InconclusiveError(f"only {len(gaps)} states with a usable band")
    gaps = np.asarray(gaps)
    slopes = np.asarray(slopes)
    coef = np.polyfit(gaps, slopes, order)
    s0 = float(coef[-1])
    return {"angle_deg": float(np.degrees(np.arctan(abs(s0)))), "slope": s0,
            "gaps": gaps.tolist(), "slopes": slopes.tolist()}
