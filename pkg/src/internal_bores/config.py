"""Run configuration: a sectioned ``key = value`` text file.

Every field has a default, so an empty file is a valid configuration.
Floats are written with ``repr`` so ``load(dump(cfg)) == cfg`` exactly.
"""
from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field, fields

from .continuation import DIRECTIONS, StepPolicy, Thresholds
from .params import FluidPair, FrontConfig, ParameterError


class ConfigError(ValueError):
    """Malformed or invalid configuration; carries the offending field and line."""

    def __init__(self, msg, field_name: str = "", line: int | None = None):
        where = f" (line {line})" if line else ""
        super().__init__(f"{field_name}{where}: {msg}" if field_name else msg)
        self.field_name = field_name
        self.line = line


@dataclass
class FluidsSection:
    rho1: float = 4.0
    rho2: float = 1.0
    boussinesq: bool = False


@dataclass
class GridSection:
    L: float = 16.0
    nq: int = 321
    np1: int = 21
    np2: int = 21
    stretch: float = 3.5
    pstretch: float = 0.0
    newton_tol: float = 1e-10
    max_newton_iters: int = 25


@dataclass
class BranchSection:
    directions: str = "depr"   # comma separated subset of elev, depr; "none" skips
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
class ThresholdSection:
    slope: float = 2.0
    wall_gap: float = 0.05
    stagnation: float = 0.05
    flat_rate: float = 0.05


@dataclass
class ContactSection:
    band_lo: float = 0.01
    band_hi: float = 0.03
    relative: bool = True
    n_states: int = 6
    order: int = 1


@dataclass
class DiagnosticsSection:
    functionals: str = "none"   # comma list from DIAGNOSTIC_NAMES
    radius: float = 0.1
    n_radii: int = 9
    tol: float = 1e-6
    center_x: float = 0.0
    M_lip: float = 2.0


@dataclass
class RunSection:
    sanity: bool = False        # laminar-exactness suite instead of branches
    out_dir: str = "out"


SECTIONS = {
    "fluids": FluidsSection, "grid": GridSection, "branch": BranchSection,
    "thresholds": ThresholdSection, "contact": ContactSection,
    "diagnostics": DiagnosticsSection, "run": RunSection,
}

HELP = {
    "fluids": "densities (lower rho1 > upper rho2, or equal with boussinesq = true)",
    "grid": "truncated strip and Newton controls",
    "branch": "continuation in lambda and its step policy",
    "thresholds": "classify_limit trend thresholds",
    "contact": "contact-angle band (wall distance) and extrapolation order",
    "diagnostics": "functionals on bore checkpoints, centred on the interface at x = center_x",
    "run": "orchestration",
}


@dataclass
class RunConfig:
    fluids: FluidsSection = field(default_factory=FluidsSection)
    grid: GridSection = field(default_factory=GridSection)
    branch: BranchSection = field(default_factory=BranchSection)
    thresholds: ThresholdSection = field(default_factory=ThresholdSection)
    contact: ContactSection = field(default_factory=ContactSection)
    diagnostics: DiagnosticsSection = field(default_factory=DiagnosticsSection)
    run: RunSection = field(default_factory=RunSection)

    # -- derived objects ------------------------------------------------------
    def fluid_pair(self) -> FluidPair:
        f = self.fluids
        try:
            return FluidPair(f.rho1, f.rho2, f.boussinesq)
        except ParameterError as exc:
            raise ConfigError(str(exc), "fluids") from exc

    def front_config(self, lam: float = 0.5) -> FrontConfig:
        g = self.grid
        try:
            return FrontConfig(lam, self.fluid_pair(), g.L, g.nq, g.np1, g.np2,
                               g.newton_tol, g.max_newton_iters, g.stretch, g.pstretch)
        except ParameterError as exc:
            raise ConfigError(str(exc), "grid") from exc

    def step_policy(self) -> StepPolicy:
        b = self.branch
        return StepPolicy(**{f.name: getattr(b, f.name) for f in fields(StepPolicy)})

    def limit_thresholds(self) -> Thresholds:
        return Thresholds(**{f.name: getattr(self.thresholds, f.name)
                             for f in fields(Thresholds)})

    def direction_list(self) -> list[str]:
        s = self.branch.directions.strip()
        if s.lower() in ("", "none"):
            return []
        out = [d.strip() for d in s.split(",") if d.strip()]
        for d in out:
            if d not in DIRECTIONS:
                raise ConfigError(f"unknown direction {d!r}", "branch.directions")
        return out

    def functional_list(self) -> list[str]:
        s = self.diagnostics.functionals.strip()
        if s.lower() in ("", "none"):
            return []
        out = [x.strip() for x in s.split(",") if x.strip()]
        for x in out:
            if x not in DIAGNOSTIC_NAMES:
                raise ConfigError(f"unknown functional {x!r}", "diagnostics.functionals")
        return out

    def validate(self) -> "RunConfig":
        self.front_config()
        self.direction_list()
        self.functional_list()
        b = self.branch
        if not (0 < b.min_step <= b.max_step and b.initial > 0):
            raise ConfigError("need 0 < min_step <= max_step and initial > 0", "branch")
        if not 0 < self.contact.band_lo < self.contact.band_hi:
            raise ConfigError("need 0 < band_lo < band_hi", "contact")
        return self

    # -- text form ------------------------------------------------------------
    def dumps(self, comments: bool = False) -> str:
        out = io.StringIO()
        for name, cls in SECTIONS.items():
            if comments:
                out.write(f"# {HELP[name]}\n")
            out.write(f"[{name}]\n")
            sec = getattr(self, name)
            for f in fields(cls):
                out.write(f"{f.name} = {_format(getattr(sec, f.name))}\n")
            out.write("\n")
        return out.getvalue()

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()


DIAGNOSTIC_NAMES = ("weiss_M", "functional_AB", "acf_phi", "energy_bound",
                    "variational_residual")


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _line_of(text: str, section: str, key: str | None) -> int | None:
    cur = None
    for i, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            cur = s[1:-1].strip()
            if key is None and cur == section:
                return i
            continue
        if cur == section and key is not None and "=" in s:
            if s.split("=", 1)[0].strip() == key:
                return i
    return None


def _coerce(raw: str, typ, where: str, line):
    raw = raw.strip()
    try:
        if typ in (bool, "bool"):
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if typ in (int, "int"):
            return int(raw)
        if typ in (float, "float"):
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(str(exc), where, line) from exc


def loads(text: str, require=()) -> RunConfig:
    """Parse config text.  ``require`` lists ``section.key`` names that must be present."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], "", line) from exc
    cfg = RunConfig()
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError("unknown section", sec, _line_of(text, sec, None))
        cls = SECTIONS[sec]
        known = {f.name: f.type for f in fields(cls)}
        target = getattr(cfg, sec)
        for key, raw in cp.items(sec):
            where = f"{sec}.{key}"
            line = _line_of(text, sec, key)
            if key not in known:
                raise ConfigError("unknown key", where, line)
            setattr(target, key, _coerce(raw, known[key], where, line))
    for req in require:
        sec, key = req.split(".", 1)
        if not cp.has_option(sec, key):
            raise ConfigError("missing required field", req, _line_of(text, sec, None))
    return cfg


# an explicit run config must name the fluids
REQUIRED = ("fluids.rho1", "fluids.rho2")


def load(path, require=REQUIRED) -> RunConfig:
    with open(path) as fh:
        return loads(fh.read(), require)
