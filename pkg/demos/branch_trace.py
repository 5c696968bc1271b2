"""Trace a bore branch and read its limiting trend.

Usage: python demos/branch_trace.py [elev|depr] [nb|bq] [--coarse]

The coarse grid runs in seconds and shows the qualitative trend; without
--coarse the production grids of the acceptance suite are used (about a
minute per branch).
"""
import sys

from internal_bores.continuation import (InconclusiveError, StepPolicy, classify_limit,
                                         contact_angle_estimate, trace_branch)
from internal_bores.params import FluidPair, FrontConfig

args = [a for a in sys.argv[1:] if not a.startswith("--")]
direction = args[0] if args else "depr"
kind = args[1] if len(args) > 1 else "nb"
coarse = "--coarse" in sys.argv

fl = FluidPair(4.0, 1.0) if kind == "nb" else FluidPair.boussinesq_pair(1.0)
if coarse:
    grid, step = dict(nq=161, np1=15, np2=15), 0.02
elif kind == "nb":
    grid = dict(nq=321, np1=41, np2=41) if direction == "elev" else dict(nq=321, np1=31, np2=31)
    step = 0.01 if direction == "elev" else 0.02
else:
    grid, step = dict(nq=481, np1=31, np2=31, stretch=5.0), 0.02
cfg = FrontConfig(0.5, fl, **grid)

print(f"{'lambda':>9} {'max_slope':>10} {'gap_lid':>10} {'gap_bed':>10} {'stagn':>8} {'upper':>8}")
br = trace_branch(direction, fl, cfg, StepPolicy(max_step=step, initial=step),
                  callback=lambda r: print(f"{r.lam:9.6f} {r.max_slope:10.4f} "
                                           f"{r.wall_gap_upper:10.3e} {r.wall_gap_bed:10.3e} "
                                           f"{r.stagnation_indicator:8.4f} "
                                           f"{r.upper_interface_speed:8.4f}"))
print(f"terminated: {br.termination} after {len(br.records)} states")
if len(br.records) >= 10:
    v = classify_limit(br)
    print(f"trend: {v.trend}  rates: " + ", ".join(f"{k}={x:.3g}" for k, x in v.rates.items()))
    if v.trend == "gravity_current_trend":
        try:
            print(f"contact angle: {contact_angle_estimate(br)['angle_deg']:.2f} deg")
        except InconclusiveError as exc:
            print(f"contact angle: {exc}")
