"""Command line: run branches and diagnostics, evaluate functionals, self-check.

Exit status: 0 success, 1 verification failure, 2 configuration or usage
error, 3 solver setup or domain error, 4 internal invariant breach.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, oracles
from .config import ConfigError, RunConfig, load
from .continuation import (InconclusiveError, SetupError, classify_limit,
                           contact_angle_estimate, sign_violations, trace_branch)
from .diagnostics import (PreconditionError, SampledField, acf_phi, energy_bound_check,
                          fitted_orders, functional_AB, geometric_radii, phase_parts,
                          random_bumps, residual_convergence, variational_residual, weiss_M)
from .djsolver import (BoreField, BoreState, DomainError, assemble_residual,
                       trivial_state)
from .params import ParameterError, conjugate_downstream

log = logging.getLogger("internal_bores")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SETUP, EXIT_INTERNAL = 0, 1, 2, 3, 4


class InvariantError(RuntimeError):
    """A result violates a property the pipeline guarantees."""


def _g(v) -> str:
    return f"{float(v):.17g}"


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_g(v) for v in r])


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _load_state(path) -> BoreState:
    try:
        return BoreState.load(path)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"not a valid state file: {exc}", str(path)) from exc


# ---------------------------------------------------------------------------
# run

def _sanity(cfg: RunConfig) -> dict:
    """Residual of the trivial laminar state on the configured grid and two coarser ones."""
    fl = cfg.fluid_pair()
    base = cfg.front_config(conjugate_downstream(fl))
    out = []
    for k in (2, 1, 0):
        c = base.__class__(base.lam, fl, base.L, (base.nq - 1) // 2**k + 1,
                           (base.np1 - 1) // 2**k + 1, (base.np2 - 1) // 2**k + 1,
                           stretch=base.stretch, pstretch=base.pstretch)
        res = assemble_residual(trivial_state(c), c)
        out.append({"nq": c.nq, "np1": c.np1, "np2": c.np2,
                    "residual_max": float(np.max(np.abs(res)))})
    worst = max(o["residual_max"] for o in out)
    return {"grids": out, "residual_max": worst, "residual_max_ok": worst <= 1e-12}


def _branch_task(direction: str, cfg: RunConfig, seed: BoreState | None, out: Path) -> dict:
    fl = cfg.fluid_pair()
    fc = cfg.front_config(conjugate_downstream(fl))
    br = trace_branch(direction, fl, fc, cfg.step_policy(), seed=seed)
    for rec in br.records:
        if not rec.is_finite():
            raise InvariantError(f"non-finite monitor record on {direction} at lambda={rec.lam}")
    for k, st in br.states.items():
        bad = sign_violations(st, direction)
        if bad:
            raise InvariantError(f"stored {direction} state {k} fails sign checks: {bad[0]}")
    br.write_csv(out / f"branch_{direction}.csv")
    br.write_json(out / f"branch_{direction}.json")
    for k, st in sorted(br.states.items()):
        _write_rows(out / f"interface_{direction}_{k:04d}.csv", ["q", "eta"],
                    zip(st.q, st.eta))
    info = {"termination": br.termination, "records": len(br.records),
            "lambda_final": br.records[-1].lam,
            "checkpoints": sorted(br.states)}
    try:
        v = classify_limit(br, cfg.limit_thresholds())
        info["verdict"] = v.trend
        info["rates"] = v.rates
    except ValueError as exc:
        info["verdict"] = "inconclusive"
        info["verdict_note"] = str(exc)
    if info["verdict"] == "gravity_current_trend":
        c = cfg.contact
        try:
            est = contact_angle_estimate(br, (c.band_lo, c.band_hi), c.relative,
                                         c.n_states, c.order)
            info["contact_angle_deg"] = est["angle_deg"]
        except InconclusiveError as exc:
            info["contact_angle_note"] = str(exc)
    names = cfg.functional_list()
    if names:
        k = max(br.states)
        info["diagnostics"] = _diagnose_state(br.states[k], names, cfg, out,
                                              prefix=f"{direction}_{k:04d}_")
    return info


def _diagnose_state(state: BoreState, names, cfg: RunConfig, out: Path, prefix: str) -> dict:
    d = cfg.diagnostics
    bf = BoreField(state)
    center = (d.center_x, float(bf.eta(d.center_x)))
    f = SampledField.from_bore(bf, center, d.radius)
    radii = geometric_radii(d.radius, d.n_radii)
    return _run_functionals(f, names, radii, d.tol, out, prefix, M_lip=d.M_lip)


def _run_functionals(f, names, radii, tol, out: Path, prefix: str = "", M_lip: float = 2.0,
                     level=None) -> dict:
    summary = {}
    for name in names:
        if name == "weiss_M":
            rr = radii / (1.0 + 0.03)
            tr = weiss_M(f, rr, tol=tol, level=level)
            tr.to_csv(out / f"{prefix}weiss_M.csv")
            summary[name] = {"min": float(tr.values.min()), "max": float(tr.values.max())}
        elif name == "functional_AB":
            A, B = functional_AB(f, radii, tol=tol, level=level)
            A.to_csv(out / f"{prefix}A.csv")
            B.to_csv(out / f"{prefix}B.csv")
            summary[name] = {"A_last": float(A.values[-1]), "B_last": float(B.values[-1])}
        elif name == "acf_phi":
            u1, u2 = phase_parts(f)
            tr = acf_phi(u1, u2, radii, tol=tol, level=level, check=False)
            tr.to_csv(out / f"{prefix}acf_phi.csv")
            summary[name] = {"violations": tr.meta["violations"]}
        elif name == "energy_bound":
            res = energy_bound_check(f, radii, M_lip, tol=tol, level=level)
            _write_rows(out / f"{prefix}energy_bound.csv", ["r", "lhs", "rhs", "margin"],
                        zip(res.radii, res.lhs, res.rhs, res.margins))
            summary[name] = {"passed": res.passed, "min_margin": res.min_margin}
        elif name == "variational_residual":
            bumps = random_bumps(5, R=f.R, seed=0, half=f.half)
            res = variational_residual(f, bumps, tol=tol, level=level)
            _write_rows(out / f"{prefix}variational_residual.csv", ["test_field", "residual"],
                        enumerate(res))
            summary[name] = {"max_abs": float(np.max(np.abs(res)))}
        else:
            raise ConfigError(f"unknown functional {name!r}", "functional")
    return summary


def cmd_run(args) -> int:
    if not args.config:
        raise ConfigError("run needs --config PATH", "--config")
    cfg = load(args.config).validate()
    out = Path(args.out or cfg.run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = _load_state(args.seed_state) if args.seed_state else None
    manifest = {"config_sha256": cfg.digest(), "version": __version__,
                "config": cfg.dumps(), "branches": {}}
    if cfg.run.sanity:
        manifest["sanity"] = _sanity(cfg)
        if not manifest["sanity"]["residual_max_ok"]:
            raise InvariantError("laminar state residual exceeds 1e-12")
    dirs = cfg.direction_list()
    if seed is not None:
        hd = conjugate_downstream(cfg.fluid_pair())
        seed_dir = "elev" if seed.lam < hd else "depr"
        if seed_dir not in dirs:
            raise ConfigError(f"seed state lies on the {seed_dir} branch, not requested",
                              "--seed-state")
    threads = max(1, int(args.threads or 1))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futs = {d: pool.submit(_branch_task, d, cfg,
                               seed if seed is not None and d == seed_dir else None, out)
                for d in dirs}
        for d in dirs:
            manifest["branches"][d] = futs[d].result()
    files = sorted(p.name for p in out.iterdir() if p.name != "manifest.json")
    manifest["files"] = files
    _write_json(out / "manifest.json", manifest)
    print(f"wrote {len(files) + 1} files to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# diagnose

ORACLES = {
    "stokes_corner": lambda: oracles.stokes_corner(),
    "stokes_corner_rot30": lambda: oracles.stokes_corner(Fraction(1, 6)),
    "linear_y": lambda: oracles.linear(0.0, 1.0),
    "shifted_stokes_corner": lambda: oracles.shifted(oracles.stokes_corner(), 0.1),
}


def cmd_diagnose(args) -> int:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    names = [s.strip() for s in args.functional.split(",") if s.strip()]
    radius = args.radius
    if args.source.startswith("oracle:"):
        key = args.source.split(":", 1)[1]
        if key not in ORACLES:
            raise ConfigError(f"unknown oracle {key!r}; choose from {sorted(ORACLES)}",
                              "source")
        cx, cy = args.center if args.center else (0.0, 0.0)
        f = SampledField.from_exact(ORACLES[key](), R=radius, center=(cx, cy))
        tol = args.tol if args.tol is not None else 1e-9
    else:
        st = _load_state(args.source)
        bf = BoreField(st)
        if args.center:
            cx, cy = args.center
        else:
            cx = 0.0
            cy = float(bf.eta(0.0))
        f = SampledField.from_bore(bf, (cx, cy), radius)
        tol = args.tol if args.tol is not None else 1e-6
    radii = geometric_radii(radius, args.n_radii)
    summary = _run_functionals(f, names, radii, tol, out, M_lip=args.M_lip, level=args.level)
    _write_json(out / "diagnose.json", {"source": args.source, "center": [cx, cy],
                                        "radius": radius, "summary": summary})
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify

def _verify_checks():
    from .params import FluidPair, front_froude, conjugate_roots
    from .diagnostics import gc_M, oddson_check
    ub = oracles.stokes_corner()
    r = geometric_radii(0.95, 9)
    checks = []

    def add(name, ok, detail):
        checks.append((name, bool(ok), detail))

    fl = FluidPair(4.0, 1.0)
    add("front_froude", abs(front_froude(fl) - 1 / 3) < 1e-14, f"{front_froude(fl):.17g}")
    roots = conjugate_roots(fl, 0.4)
    add("conjugate_roots", np.allclose(sorted(roots), [0.4, 2 / 3], atol=1e-10), str(roots))
    from .params import FrontConfig
    c = FrontConfig(2 / 3, fl, nq=41, np1=7, np2=7)
    res = float(np.max(np.abs(assemble_residual(trivial_state(c), c))))
    add("laminar_residual", res <= 1e-12, f"{res:.3e}")
    M = weiss_M(ub, r)
    spread = float(np.ptp(M.values))
    add("weiss_M(stokes) constant", spread <= 1e-8, f"M={M.values[0]:.15f} spread={spread:.1e}")
    add("weiss_M(stokes) identity", float(np.max(M.identity_residual)) <= 1e-4,
        f"{np.max(M.identity_residual):.1e}")
    s3 = 1 / np.sqrt(3)
    cases = [(oracles.zero_field(False), 4 / 3), (oracles.zero_field(True), 2 / 3),
             (ub, 2 / 3 - s3 + 2 * s3), (oracles.stokes_corner(Fraction(1, 6)), 1 / 6 + 1)]
    for fld, want in cases:
        sf = SampledField.from_exact(fld, half=True).with_densities(1.0, 2.0)
        got = gc_M(sf, r[:3]).values[-1]
        add(f"gc density {fld.name}", abs(got - want) <= 1e-8, f"{got:.15f} vs {want:.15f}")
    y = oracles.linear(0.0, 1.0)
    phi = acf_phi(oracles.positive_part(y, 1), oracles.positive_part(y, -1), r)
    add("acf_phi(y+, y-)", np.allclose(phi.values, np.pi**2 / 4, atol=1e-10), f"{phi.values[0]:.12f}")
    try:
        energy_bound_check(ub, r, np.sqrt(3))
        add("energy_bound rejects stokes corner", False, "accepted")
    except PreconditionError as exc:
        add("energy_bound rejects stokes corner", True, str(exc)[:60])
    eb = energy_bound_check(y, r, 0.0)
    add("energy_bound(y) equality", abs(eb.min_margin) <= 1e-10, f"{eb.min_margin:.1e}")
    C = oddson_check(oracles.cone_harmonic(1.25), 1.25, 1.0)
    add("oddson C(cone harmonic)", abs(C - 1) <= 1e-10, f"{C:.15f}")
    rc = residual_convergence(ub, random_bumps(5, seed=0))
    order = fitted_orders(rc)
    add("variational_residual(stokes) order >= 2", float(order.min()) >= 2.0,
        f"min fitted order {order.min():.2f}, last max {np.max(np.abs(rc['residuals'][-1])):.1e}")
    return checks


def cmd_verify(args) -> int:
    checks = _verify_checks()
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    failed = sum(1 for _, ok, _ in checks if not ok)
    print(f"{len(checks) - failed}/{len(checks)} passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def cmd_dump_defaults(args) -> int:
    text = RunConfig().dumps(comments=True)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="internal-bores", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="trace branches and run diagnostics from a config file")
    r.add_argument("--config", required=False)
    r.add_argument("--out", help="output directory (overrides run.out_dir)")
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--seed-state", help="BoreState JSON to start its branch from")
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("diagnose", help="functionals of a stored state or a built-in oracle")
    d.add_argument("source", help="BoreState JSON path or oracle:NAME")
    d.add_argument("--functional", default="weiss_M",
                   help="comma list: weiss_M, functional_AB, acf_phi, energy_bound, "
                        "variational_residual")
    d.add_argument("--center", type=float, nargs=2, metavar=("X", "Y"))
    d.add_argument("--radius", type=float, default=0.1)
    d.add_argument("--n-radii", type=int, default=9)
    d.add_argument("--tol", type=float)
    d.add_argument("--level", type=int, help="fixed quadrature level (no adaptivity)")
    d.add_argument("--M-lip", type=float, default=2.0)
    d.add_argument("--out")
    d.set_defaults(func=cmd_diagnose)

    v = sub.add_parser("verify", help="run the built-in oracle checks")
    v.set_defaults(func=cmd_verify)

    dd = sub.add_parser("dump-defaults", help="print the default config with comments")
    dd.add_argument("--out")
    dd.set_defaults(func=cmd_dump_defaults)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SetupError, PreconditionError, DomainError, ParameterError) as exc:
        print(f"setup error: {exc}", file=sys.stderr)
        return EXIT_SETUP
    except InvariantError as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        log.exception("unexpected failure")
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
