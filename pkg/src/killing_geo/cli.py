"""Command-line entry point: ``killing-geo <subcommand> [options]``.

Exit status: 0 success, 1 solver did not converge, 2 obstruction (no global
section), 3 invalid input.  CSV goes to ``--out`` when given and to stdout
otherwise; the short report then moves to stderr.
"""

import argparse
import json
import os
import sys

import numpy as np
from threadpoolctl import threadpool_limits

from . import io
from .config import load_config
from .errors import KillingGeoError, MaxIterationsExceeded, ObstructionNonzero, ValidationError

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_OBSTRUCTION, EXIT_INVALID = 0, 1, 2, 3
THREADS_ENV = "KILLING_GEO_THREADS"


# -- argument helpers -------------------------------------------------------

def _floats(text, count=None, name="value"):
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise ValidationError(name, f"expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise ValidationError(name, f"expected {count} numbers, got {len(vals)}")
    return vals


def _is_file(text):
    return text is not None and os.path.isfile(text)


def _read_csv(path, needed, name):
    try:
        cols = io.read_csv(path)
    except (OSError, ValueError) as exc:
        raise ValidationError(name, f"cannot read {path}: {exc}") from None
    missing = [c for c in needed if c not in cols]
    if missing:
        raise ValidationError(name, f"{path} lacks column(s) {', '.join(missing)}")
    return cols


def _grid_values(domain, path, column, name):
    cols = _read_csv(path, ("x", "y", column), name)
    try:
        vals = io.grid_from_columns(domain, cols["x"], cols["y"], cols[column])
    except ValueError as exc:
        raise ValidationError(name, f"{path}: {exc}") from None
    need = domain.mask
    if np.any(np.isnan(vals[need])):
        raise ValidationError(name, f"{path} does not cover every node of the domain")
    return vals


def _graph(model, source, name):
    from .graphs import GraphFunction

    if source is None:
        raise ValidationError(name, "required")
    d = model.domain
    if _is_file(source):
        return GraphFunction(_grid_values(d, source, "u", name), d)
    try:
        return GraphFunction.from_expr(source, d, everywhere=True)
    except KillingGeoError as exc:
        raise ValidationError(name, f"neither a file nor a valid expression: {exc}") from None


def _check_out(path):
    if path is None:
        return
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise ValidationError("--out", f"directory {parent} does not exist")
    if os.path.isdir(path):
        raise ValidationError("--out", f"{path} is a directory")


def _check_inputs(*paths):
    for name, path in paths:
        if path is not None and path.endswith(".csv") and not os.path.isfile(path):
            raise ValidationError(name, f"file {path} not found")


class _Run:
    """Per-invocation state: config, output routing and report lines."""

    def __init__(self, args):
        self.args = args
        self.cfg = None
        if getattr(args, "config", None):
            self.cfg = load_config(args.config)
        self.out = args.out or (self.cfg.out if self.cfg else None)
        _check_out(self.out)
        self.report_stream = sys.stdout if self.out else sys.stderr

    def need_config(self):
        if self.cfg is None:
            raise ValidationError("--config", "this subcommand needs a model config")
        return self.cfg

    def option(self, section, key, flag_value, default=None):
        if flag_value is not None:
            return flag_value
        if self.cfg is not None:
            return self.cfg.section(section).get(key, default)
        return default

    @property
    def seed(self):
        if self.args.seed is not None:
            return self.args.seed
        return self.cfg.seed if self.cfg else 0

    def solver(self):
        from dataclasses import replace

        from .minimal import SolverConfig

        base = self.cfg.solver if self.cfg else SolverConfig()
        if self.args.tol is not None:
            if not self.args.tol > 0:
                raise ValidationError("--tol", "must be positive")
            base = replace(base, tol=self.args.tol)
        return base

    def report(self, **items):
        for k, v in items.items():
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = io.FLOAT_FORMAT % v
            print(f"{k}: {v}", file=self.report_stream)

    def emit_csv(self, header, columns):
        if self.out:
            io.write_csv(self.out, header, columns)
        else:
            sys.stdout.write(io.format_csv(header, columns))

    def emit_json(self, obj):
        if self.out:
            io.write_json(self.out, obj)
        print(json.dumps(obj, indent=2, sort_keys=True))


def _node_columns(domain, *fields):
    X, Y = domain.mesh()
    m = domain.mask
    return [X[m], Y[m]] + [np.asarray(f)[m] for f in fields]


# -- subcommands -------------------------------------------------------------

def cmd_model_info(run):
    from .model import scalar_curvature, sectional_curvatures

    cfg = run.need_config()
    model = cfg.model()
    d = model.domain
    cx, cy = 0.5 * (d.bounds[0] + d.bounds[1]), 0.5 * (d.bounds[2] + d.bounds[3])
    sec = sectional_curvatures(model, (cx, cy), check=False)
    info = {
        "domain": {"kind": d.kind, "bounds": list(d.bounds), "nx": d.nx, "ny": d.ny},
        "fields": dict(cfg.fields),
        "z_source": model.z_source,
        "curvature_method": model.curvature_method,
        "center": [cx, cy],
        "sectional_curvatures_at_center": [float(v) for v in np.ravel(sec)],
        "scalar_curvature_at_center": float(scalar_curvature(model, (cx, cy), check=False)),
    }
    if d.radius is not None:
        info["domain"]["radius"] = d.radius
    if d.periodic:
        info["obstruction_integral"] = float(model.obstruction_integral)
    run.emit_json(info)
    return EXIT_OK


def cmd_check_jz(run):
    from .graphs import div_jz_residual

    model = run.need_config().model()
    res = div_jz_residual(model)
    run.report(max_residual=float(np.nanmax(np.abs(res))), z_source=model.z_source)
    run.emit_csv(["x", "y", "residual"], _node_columns(model.domain, res))
    return EXIT_OK


def _curve_from_csv(path, name):
    from .lifts import BaseCurve

    cols = _read_csv(path, ("x", "y"), name)
    try:
        return BaseCurve.from_samples(cols["x"], cols["y"], cols.get("s"))
    except ValueError as exc:
        raise ValidationError(name, str(exc)) from None


def cmd_lift(run):
    from .lifts import horizontal_lift

    a = run.args
    curve_path = run.option("lift", "curve", a.curve)
    if curve_path is None:
        raise ValidationError("--curve", "required")
    _check_inputs(("--curve", curve_path))
    t0 = float(run.option("lift", "t0", a.t0, 0.0))
    model = run.need_config().model()
    curve = _curve_from_csv(curve_path, "--curve")
    lift = horizontal_lift(model, curve, t0)
    run.report(
        t_end=float(lift.t[-1]),
        horizontality_residual=float(np.max(lift.horizontality_residual(model, curve))),
        samples=lift.s.size,
    )
    run.emit_csv(["s", "x", "y", "t"], [lift.s, lift.x, lift.y, lift.t])
    return EXIT_OK


def cmd_holonomy(run):
    from .lifts import BaseCurve, flux_inside_curve, flux_integral, holonomy_displacement

    a = run.args
    curve_path = run.option("holonomy", "curve", a.curve)
    radius = run.option("holonomy", "radius", a.radius)
    center = a.center or run.option("holonomy", "center", None)
    if isinstance(center, str):
        center = _floats(center, 2, "--center")
    center = tuple(center) if center is not None else (0.0, 0.0)
    if (curve_path is None) == (radius is None):
        raise ValidationError("--curve/--radius", "give exactly one of a curve file or a circle radius")
    _check_inputs(("--curve", curve_path))
    model = run.need_config().model()
    if radius is not None:
        if not radius > 0:
            raise ValidationError("--radius", "must be positive")
        curve = BaseCurve.circle(radius, center)
        flux = flux_integral(model, center=center, radius=radius)
        flux_rule = "gauss_disk"
    else:
        curve = _curve_from_csv(curve_path, "--curve")
        flux = flux_inside_curve(model, curve)
        flux_rule = "green_line_integral"
    d = holonomy_displacement(model, curve)
    run.emit_json({
        "displacement": d,
        "flux": flux,
        "abs_difference": abs(abs(d) - abs(flux)),
        "flux_rule": flux_rule,
    })
    return EXIT_OK


def cmd_mc(run):
    from .graphs import area_element_grid, mean_curvature

    model = run.need_config().model()
    u = _graph(model, run.option("mc", "graph", run.args.graph), "--graph")
    H = mean_curvature(model, u)
    W = area_element_grid(model, u)
    run.report(max_abs_H=float(np.nanmax(np.abs(H))))
    run.emit_csv(["x", "y", "H", "W"], _node_columns(model.domain, H, W))
    return EXIT_OK


def _finish_solve(run, report):
    run.report(**report.summary())
    run.emit_csv(["x", "y", "u", "H"], _node_columns(report.solution.domain, report.solution.values, report.H))
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_solve_minimal(run):
    from .minimal import solve_minimal_torus

    cfg = run.need_config()
    if not cfg.domain.periodic:
        raise ValidationError("domain.kind", "solve-minimal needs a torus")
    report = solve_minimal_torus(cfg.model(), run.solver(), seed=run.seed)
    return _finish_solve(run, report)


def cmd_solve_dirichlet(run):
    from .minimal import solve_dirichlet

    a = run.args
    cfg = run.need_config()
    if cfg.domain.periodic:
        raise ValidationError("domain.kind", "solve-dirichlet needs a disk or rectangle")
    source = run.option("dirichlet", "boundary", a.boundary)
    H = float(run.option("dirichlet", "H", a.H, 0.0))
    model = cfg.model()
    boundary = _graph(model, source, "--boundary")
    report = solve_dirichlet(model, boundary, H_target=H, config=run.solver())
    return _finish_solve(run, report)


def cmd_calabi(run):
    from .calabi import SpacelikeFunction, calabi_dual, manufactured_model

    a = run.args
    cfg = run.need_config()
    source = run.option("calabi", "v", a.v)
    if source is None:
        raise ValidationError("--v", "required")
    manufacture = a.manufacture or run.option("calabi", "manufacture", None, False)
    basepoint = run.option("calabi", "basepoint", None, [0.0, 0.0])
    model = cfg.model()
    if _is_file(source):
        if manufacture:
            raise ValidationError("--manufacture", "needs v as an expression")
        v = SpacelikeFunction(_grid_values(model.domain, source, "v", "--v"), model.domain)
    else:
        v = source
        if manufacture:
            model = manufactured_model(model.domain, v, model.lam, model.mu)
    res = calabi_dual(model, v, run.solver(), basepoint=tuple(basepoint))
    run.report(
        max_H=res.max_H,
        max_identity_residual=res.max_identity_residual,
        lorentz_residual=res.lorentz_residual,
        curl_residual=res.curl_residual,
        path_discrepancy=res.path_discrepancy,
    )
    run.emit_csv(
        ["x", "y", "u", "H", "identity_residual"],
        _node_columns(model.domain, res.u.values, res.H, res.identity_residual),
    )
    return EXIT_OK


def cmd_cylinder(run):
    from .cylinders import cmc_cylinder_curve, cylinder_second_fundamental, geodesic_curvature

    a = run.args
    opt = lambda key, flag, default=None: run.option("cylinder", key, flag, default)  # noqa: E731
    H = opt("H", a.H)
    start = opt("start", a.start)
    direction = opt("dir", a.dir)
    length = opt("length", a.length)
    for key, val in (("--H", H), ("--start", start), ("--dir", direction), ("--length", length)):
        if val is None:
            raise ValidationError(key, "required")
    start = _floats(start, 2, "--start") if isinstance(start, str) else list(start)
    direction = _floats(direction, 2, "--dir") if isinstance(direction, str) else list(direction)
    if not float(length) > 0:
        raise ValidationError("--length", "must be positive")
    model = run.need_config().model()
    try:
        curve = cmc_cylinder_curve(model, float(H), tuple(start), tuple(direction), float(length))
    except ValueError as exc:
        raise ValidationError("--dir", str(exc)) from None
    s = curve.s
    sig = cylinder_second_fundamental(model, curve, s)
    kg = geodesic_curvature(model, curve, s)
    trace_err = np.max(np.abs(sig[:, 0, 0] + sig[:, 1, 1] - 2 * float(H)))
    run.report(length=float(curve.length), complete=bool(curve.complete), max_trace_error=float(trace_err))
    if not curve.complete:
        print("warning: curve left the domain before reaching the requested length", file=sys.stderr)
    run.emit_csv(
        ["s", "x", "y", "kappa_g", "sigma11", "sigma12", "sigma22"],
        [s, curve.x, curve.y, kg, sig[:, 0, 0], sig[:, 0, 1], sig[:, 1, 1]],
    )
    return EXIT_OK


def cmd_stability(run):
    from .cylinders import angle_function, stability_apply
    from .minimal import solve_minimal_torus

    cfg = run.need_config()
    source = run.option("stability", "graph", run.args.graph)
    model = cfg.model()
    if source is None:
        if not cfg.domain.periodic:
            raise ValidationError("--graph", "required on non-periodic domains")
        rep = solve_minimal_torus(model, run.solver(), seed=run.seed)
        if not rep.converged:
            raise MaxIterationsExceeded(rep)
        u = rep.solution
    else:
        u = _graph(model, source, "--graph")
    nu = angle_function(model, u)
    Lnu = stability_apply(model, u, nu)
    run.report(max_abs_L_nu=float(np.nanmax(np.abs(Lnu))))
    run.emit_csv(["x", "y", "nu", "L_nu"], _node_columns(model.domain, nu, Lnu))
    return EXIT_OK


def cmd_homogeneous(run):
    from .homogeneous import semidirect_bundle_curvature

    a = run.args
    matrix = a.matrix or run.option("homogeneous", "matrix", None)
    zr = a.z_range or run.option("homogeneous", "z_range", None)
    if matrix is None or zr is None:
        raise ValidationError("--matrix/--z-range", "both are required")
    m = _floats(matrix, 4, "--matrix") if isinstance(matrix, str) else [float(v) for v in matrix]
    z0, z1, n = _floats(zr, 3, "--z-range") if isinstance(zr, str) else zr
    if n != int(n) or n < 1:
        raise ValidationError("--z-range", "the sample count must be a positive integer")
    A = np.array(m, float).reshape(2, 2)
    z = np.linspace(z0, z1, int(n))
    tm = np.array([semidirect_bundle_curvature(A, zi) for zi in z])
    tau, mu = tm[:, 0], tm[:, 1]
    run.emit_csv(["z", "mu", "two_tau_over_mu", "tau"], [z, mu, 2 * tau / mu, tau])
    return EXIT_OK


COMMANDS = {
    "model-info": (cmd_model_info, "describe a model config"),
    "lift": (cmd_lift, "horizontal lift of a base curve"),
    "holonomy": (cmd_holonomy, "vertical displacement of a closed lift versus the curvature flux"),
    "mc": (cmd_mc, "mean curvature and area element of a graph"),
    "solve-minimal": (cmd_solve_minimal, "entire minimal section over a torus"),
    "solve-dirichlet": (cmd_solve_dirichlet, "prescribed mean curvature graph with boundary values"),
    "calabi": (cmd_calabi, "minimal section dual to a spacelike solution"),
    "cylinder": (cmd_cylinder, "base curve of a constant mean curvature vertical cylinder"),
    "stability": (cmd_stability, "Jacobi operator applied to the angle function"),
    "homogeneous": (cmd_homogeneous, "bundle curvature and Killing length of a semidirect product"),
    "check-jz": (cmd_check_jz, "residual of div(JZ) + 2 tau/mu on the grid"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", "--model", dest="config", metavar="PATH", help="TOML model config")
    common.add_argument("--out", metavar="PATH", help="output file (CSV or JSON)")
    common.add_argument("--seed", type=int, metavar="N", help="random seed (non-negative)")
    common.add_argument("--tol", type=float, metavar="T", help="solver tolerance")

    parser = _Parser(prog="killing-geo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")
    p = {}
    for name, (_, help_) in COMMANDS.items():
        p[name] = sub.add_parser(name, parents=[common], help=help_, description=help_)

    p["lift"].add_argument("--curve", metavar="CSV", help="base curve samples with columns x,y[,s]")
    p["lift"].add_argument("--t0", type=float, help="fibre coordinate of the start point")
    p["holonomy"].add_argument("--curve", metavar="CSV", help="closed base curve samples")
    p["holonomy"].add_argument("--radius", type=float, help="use a circle of this radius instead")
    p["holonomy"].add_argument("--center", metavar="X,Y", help="circle centre (default 0,0)")
    p["mc"].add_argument("--graph", metavar="CSV|EXPR", help="graph as x,y,u samples or an expression")
    p["solve-dirichlet"].add_argument("--boundary", metavar="CSV|EXPR", help="boundary values")
    p["solve-dirichlet"].add_argument("--H", type=float, help="prescribed mean curvature (default 0)")
    p["calabi"].add_argument("--v", metavar="CSV|EXPR", help="spacelike solution, x,y,v samples or expression")
    p["calabi"].add_argument(
        "--manufacture", action="store_true", help="replace tau by the one for which v solves the equation"
    )
    p["cylinder"].add_argument("--H", type=float, help="mean curvature")
    p["cylinder"].add_argument("--start", metavar="X,Y")
    p["cylinder"].add_argument("--dir", metavar="DX,DY")
    p["cylinder"].add_argument("--length", type=float)
    p["stability"].add_argument("--graph", metavar="CSV|EXPR", help="graph (default: solve on the torus)")
    p["homogeneous"].add_argument("--matrix", metavar="A11,A12,A21,A22")
    p["homogeneous"].add_argument("--z-range", dest="z_range", metavar="Z0,Z1,N")
    return parser


def _threads():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(THREADS_ENV, f"expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError(THREADS_ENV, "must be at least 1")
    return n


VALUE_OPTIONS = (
    "--z-range", "--matrix", "--start", "--dir", "--center", "--boundary", "--graph", "--v",
)


def _glue_lists(argv):
    """Attach values that start with a minus sign (``--start -1,0`` or
    ``--boundary "-sqrt(4-x^2-y^2)"``) to their option, which argparse
    would otherwise read as a flag."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in VALUE_OPTIONS:
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-") and not nxt.startswith("--"):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(tok)
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_glue_lists(argv))
    handler = COMMANDS[args.command][0]
    try:
        if args.seed is not None and args.seed < 0:
            raise ValidationError("--seed", "must be non-negative")
        with threadpool_limits(limits=_threads()):
            run = _Run(args)
            return handler(run)
    except ObstructionNonzero as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OBSTRUCTION
    except MaxIterationsExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except KillingGeoError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
