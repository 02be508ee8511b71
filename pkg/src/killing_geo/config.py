"""Strict TOML run configuration.

Example::

    [domain]
    kind = "torus"            # "disk" | "rectangle" | "torus"
    bounds = [0, 1, 0, 1]     # rectangle and torus; disks use radius

    [grid]
    nx = 128
    ny = 128

    [fields]
    lambda = "1"
    tau = "sin(2*pi*x)*sin(2*pi*y)"
    mu = "1"

    [solver]
    tol = 1e-8
    max_iter = 500

    [run]
    seed = 7

Subcommand blocks (``[lift]``, ``[holonomy]``, ``[mc]``, ``[dirichlet]``,
``[calabi]``, ``[cylinder]``, ``[stability]``, ``[homogeneous]``) hold the
same options as the corresponding command-line flags.  Unknown sections and
keys are rejected.
"""

import re
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import NonPositiveField, NotPeriodic, OutOfDomain, ParseError, ValidationError
from .fields import DISK, RECTANGLE, TORUS, Domain2D, ScalarField2D
from .minimal import SolverConfig

_NUMBER = (int, float)

SCHEMA = {
    "domain": {"kind": str, "radius": _NUMBER, "bounds": list},
    "grid": {"nx": int, "ny": int},
    "fields": {"lambda": (str,) + _NUMBER, "tau": (str,) + _NUMBER, "mu": (str,) + _NUMBER},
    "solver": {
        "tol": _NUMBER, "max_iter": int, "armijo": _NUMBER, "backtrack": _NUMBER,
        "min_step": _NUMBER, "linear_tol": _NUMBER,
    },
    "run": {"seed": int, "out": str},
    "lift": {"curve": str, "t0": _NUMBER},
    "holonomy": {"curve": str, "radius": _NUMBER, "center": list},
    "mc": {"graph": str},
    "dirichlet": {"boundary": str, "H": _NUMBER},
    "calabi": {"v": str, "manufacture": bool, "basepoint": list},
    "cylinder": {"H": _NUMBER, "start": list, "dir": list, "length": _NUMBER},
    "stability": {"graph": str},
    "homogeneous": {"matrix": list, "z_range": list},
}

DEFAULT_BOUNDS = (0.0, 1.0, 0.0, 1.0)
DEFAULT_GRID = 64


@dataclass(frozen=True)
class RunConfig:
    domain: Domain2D
    fields: dict
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: int = 0
    out: str = None
    sections: dict = field(default_factory=dict)

    def model(self):
        from .model import KillingModel

        return KillingModel(
            self.domain,
            lam=ScalarField2D.parse(self.fields["lambda"]),
            tau=ScalarField2D.parse(self.fields["tau"]),
            mu=ScalarField2D.parse(self.fields["mu"]),
        )

    def section(self, name):
        return dict(self.sections.get(name, {}))


def _position(exc, text):
    line = getattr(exc, "lineno", None)
    col = getattr(exc, "colno", None)
    if line is None:
        m = re.search(r"line (\d+), column (\d+)", str(exc))
        if m:
            line, col = int(m.group(1)), int(m.group(2))
    return line, col


def _check_types(data):
    for sec, body in data.items():
        if sec not in SCHEMA:
            raise ValidationError(sec, "unknown section")
        if not isinstance(body, dict):
            raise ValidationError(sec, "must be a table")
        for key, value in body.items():
            if key not in SCHEMA[sec]:
                raise ValidationError(f"{sec}.{key}", "unknown key")
            want = SCHEMA[sec][key]
            if isinstance(value, bool) and want is not bool and bool not in (want if isinstance(want, tuple) else (want,)):
                raise ValidationError(f"{sec}.{key}", "wrong type bool")
            if not isinstance(value, want):
                raise ValidationError(f"{sec}.{key}", f"wrong type {type(value).__name__}")


def _domain(data):
    dom = data.get("domain", {})
    grid = data.get("grid", {})
    kind = dom.get("kind", TORUS)
    if kind not in (DISK, RECTANGLE, TORUS):
        raise ValidationError("domain.kind", f"must be one of disk, rectangle, torus (got {kind!r})")
    nx = grid.get("nx", DEFAULT_GRID)
    ny = grid.get("ny", nx)
    for key, n in (("grid.nx", nx), ("grid.ny", ny)):
        if n < 3:
            raise ValidationError(key, "must be at least 3")
    if kind == DISK:
        if "bounds" in dom:
            raise ValidationError("domain.bounds", "not used by disk domains (give radius)")
        r = float(dom.get("radius", 1.0))
        if not r > 0:
            raise ValidationError("domain.radius", "must be positive")
        if ny != nx:
            raise ValidationError("grid.ny", "disk grids are square")
        return Domain2D.disk(r, nx)
    if "radius" in dom:
        raise ValidationError("domain.radius", f"not used by {kind} domains (give bounds)")
    bounds = dom.get("bounds", list(DEFAULT_BOUNDS))
    if len(bounds) != 4 or not all(isinstance(b, _NUMBER) and not isinstance(b, bool) for b in bounds):
        raise ValidationError("domain.bounds", "must be [x0, x1, y0, y1]")
    x0, x1, y0, y1 = map(float, bounds)
    if not (x1 > x0 and y1 > y0):
        raise ValidationError("domain.bounds", "needs x1 > x0 and y1 > y0")
    if kind == TORUS:
        return Domain2D.torus((x0, x1, y0, y1), nx, ny)
    return Domain2D.rectangle((x0, x1, y0, y1), nx, ny)


def parse_config(text, check_model=True):
    """Parse and validate TOML text into a RunConfig.

    Raises ParseError (with line and column) for malformed TOML and
    ValidationError naming the offending key otherwise.  With
    ``check_model`` the model is built once so that positivity and
    periodicity failures surface here.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line, col = _position(exc, text)
        msg = str(exc).split(" (at ")[0]
        raise ParseError(msg, line=line, column=col) from None
    _check_types(data)
    domain = _domain(data)
    fields = {"lambda": "1", "tau": "0", "mu": "1"}
    for key, value in data.get("fields", {}).items():
        fields[key] = str(value)
    for key, text_ in fields.items():
        try:
            ScalarField2D.parse(text_)
        except ParseError as exc:
            raise ValidationError(f"fields.{key}", f"cannot parse expression: {exc}") from None
    try:
        solver = SolverConfig(**data.get("solver", {}))
    except ValueError as exc:
        raise ValidationError("solver", str(exc)) from None
    run = data.get("run", {})
    seed = run.get("seed", 0)
    if seed < 0:
        raise ValidationError("run.seed", "must be non-negative")
    sections = {k: v for k, v in data.items() if k not in ("domain", "grid", "fields", "solver", "run")}
    cfg = RunConfig(domain, fields, solver, seed, run.get("out"), sections)
    if check_model:
        try:
            cfg.model()
        except NonPositiveField as exc:
            name = "lambda" if str(exc).startswith("lambda") else "mu"
            raise ValidationError(f"fields.{name}", str(exc)) from None
        except NotPeriodic as exc:
            raise ValidationError("fields", str(exc)) from None
        except OutOfDomain as exc:
            raise ValidationError("domain", str(exc)) from None
    return cfg


def load_config(path, check_model=True):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ValidationError("--config", f"cannot read {path}: {exc.strerror}") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"config is not UTF-8: {exc.reason}", position=exc.start) from None
    return parse_config(text, check_model)
