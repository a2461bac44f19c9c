"""Command-line front end.

Subcommands: ``bands``, ``sigma21-zero``, ``verdet``, ``finite``,
``faraday`` and ``selftest``.  Exit status is 0 on success, 2 on invalid
input and 3 on numerical failure; failures also write one JSON error record
to stderr.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .bloch import band_path, graphene_waypoints
from .config import FORMAT_VERSION, RunConfig, dumps17
from .errors import NumericalError, TBVerdetError, ValidationError
from .lattice import LatticeModel, graphene_model, load_model

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3

PRESETS = {"graphene": graphene_model}

# flag dest -> config key
_FLAG_KEYS = {
    "preset": "model.preset",
    "model": "model.file",
    "a": "model.a",
    "beta": "params.beta",
    "mu": "params.mu",
    "omega0": "params.omega0",
    "eta": "params.eta",
    "grid": "grid.n1",
    "grid2": "grid.n2",
    "nodes_per_edge": "contour.nodes_per_edge",
    "delta": "contour.delta",
    "half_height_factor": "contour.half_height_factor",
    "workers": "run.workers",
    "output": "output.path",
    "format": "output.format",
    "N": "finite.N",
    "b": "finite.b",
    "b_step": "finite.b_step",
    "eta_list": "finite.eta_list",
    "max_sites": "finite.max_sites",
    "finite_method": "finite.method",
    "field": "params.b",
    "d": "optics.d",
    "eps": "optics.eps_r",
    "mu_r": "optics.mu_r",
    "c": "optics.c",
    "omega": "optics.omega",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _emit_error(ValidationError(message), EXIT_VALIDATION)
        raise SystemExit(EXIT_VALIDATION)


def _common(parser: argparse.ArgumentParser):
    g = parser.add_argument_group("model and physics")
    g.add_argument("--config", help="YAML or JSON file with config keys")
    g.add_argument("--preset", help="built-in model name (graphene)")
    g.add_argument("--model", help="model file (YAML/JSON), overrides --preset")
    g.add_argument("--a", type=float, help="graphene bond length")
    g.add_argument("--beta", type=float, help="inverse temperature")
    g.add_argument("--mu", type=float, help="chemical potential")
    g.add_argument("--omega0", type=float, help="light frequency (real part)")
    g.add_argument("--eta", type=float, help="adiabatic parameter, Im omega = -eta")
    n = parser.add_argument_group("numerics and output")
    n.add_argument("--grid", type=int, help="Brillouin-zone nodes along b1")
    n.add_argument("--grid2", type=int, help="nodes along b2 (default: same as --grid)")
    n.add_argument("--nodes-per-edge", type=int, help="Gauss-Legendre nodes per contour panel")
    n.add_argument("--delta", type=float, help="horizontal contour clearance")
    n.add_argument("--half-height-factor", type=float, help="contour half-height in units of pi/beta")
    n.add_argument("--workers", type=int, help="threads for k-point chunks (default: all cores)")
    n.add_argument("--output", help="write the result here instead of stdout")
    n.add_argument("--format", choices=("json", "text"), help="record format")
    n.add_argument("--print-config", action="store_true", help="print the resolved config and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tbverdet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("bands", help="band energies along a path (CSV)")
    _common(p)
    p.add_argument("--path", default="G,X1,M,K",
                   help="comma separated waypoint names or k1:k2 pairs (default G,X1,M,K)")
    p.add_argument("--samples", type=int, default=100, help="intervals per segment")

    p = sub.add_parser("sigma21-zero", help="zero-field conductivity sigma_ab(0)")
    _common(p)
    p.add_argument("--pair", default="12", choices=("11", "12", "21", "22"), help="direction pair ab")
    p.add_argument("--method", default="quadrature", choices=("quadrature", "residue"))

    p = sub.add_parser("verdet", help="Verdet coefficient sigma21^(1)")
    _common(p)
    p.add_argument("--sweep", help="NAME=START:STOP:STEP with NAME in mu, beta, omega0 (CSV output)")
    p.add_argument("--check-convergence", action="store_true",
                   help="rerun with grid and contour nodes doubled and report the change")

    p = sub.add_parser("finite", help="finite-lattice oracle and numerical b-derivative")
    _common(p)
    p.add_argument("--N", type=int, help="box half-width in cells")
    p.add_argument("--b", type=float, help="extra field strength to evaluate sigma21(b, N) at")
    p.add_argument("--eta-list", help="comma separated eta values")
    p.add_argument("--b-step", type=float, help="central-difference step in b")
    p.add_argument("--no-richardson", action="store_true", help="single step size, no extrapolation")
    p.add_argument("--max-sites", type=int, help="refuse lattices larger than this")
    p.add_argument("--method", dest="finite_method", choices=("residue", "quadrature"))

    p = sub.add_parser("faraday", help="Verdet constant and Faraday angle of a slab")
    _common(p)
    p.add_argument("--sigma21-1", type=float, help="Verdet coefficient sigma21^(1) (sheet units)")
    p.add_argument("--sigma11-0", type=float, help="zero-field sigma11^(0) (sheet units)")
    p.add_argument("--compute", action="store_true", help="compute both coefficients from the model")
    p.add_argument("--b", dest="field", type=float, help="magnetic field strength for the angle")
    p.add_argument("--d", type=float, help="slab thickness")
    p.add_argument("--eps", type=float, help="relative permittivity")
    p.add_argument("--mu-r", type=float, help="relative permeability")
    p.add_argument("--omega", type=float, help="light frequency (default: omega0)")
    p.add_argument("--c", type=float, help="speed of light in the chosen units")

    p = sub.add_parser("selftest", help="run quick oracle-equivalence and parity checks")
    _common(p)
    return parser


def _emit_error(exc: BaseException, code: int):
    record = {"error": type(exc).__name__, "exit_code": code, "message": str(exc)}
    print(json.dumps(record), file=sys.stderr)


def resolve_config(args) -> RunConfig:
    overrides = {}
    for dest, key in _FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value
    return RunConfig.resolve(overrides, config_file=getattr(args, "config", None))


def make_model(cfg: RunConfig) -> LatticeModel:
    if cfg["model.file"]:
        path = Path(cfg["model.file"])
        if not path.is_file():
            raise ValidationError(f"model file {path} does not exist")
        return load_model(path)
    name = cfg["model.preset"]
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name](cfg["model.a"])


def _waypoints(model: LatticeModel, cfg: RunConfig) -> dict:
    b1, b2 = model.reciprocal_vectors
    points = {"G": np.zeros(2), "X1": b1 / 2, "X2": b2 / 2, "M": (b1 + b2) / 2}
    if model.name == "graphene" and not cfg["model.file"]:
        points.update(graphene_waypoints(cfg["model.a"]))
    return points


def _parse_path(text: str, points: dict):
    out, labels = [], []
    for item in (t.strip() for t in text.split(",")):
        if item in points:
            out.append(points[item])
        elif ":" in item:
            try:
                out.append(np.array([float(v) for v in item.split(":")]))
            except ValueError as exc:
                raise ValidationError(f"bad waypoint {item!r}") from exc
            if out[-1].size != 2:
                raise ValidationError(f"bad waypoint {item!r}")
        else:
            raise ValidationError(f"unknown waypoint {item!r}; known: {sorted(points)}")
        labels.append(item)
    return out, labels


def _fmt_num(x) -> str:
    return f"{float(x):.17g}"


def _csv(header, rows, comment: str) -> str:
    buf = io.StringIO()
    buf.write(f"# format_version={FORMAT_VERSION} {comment}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else _fmt_num(v) for v in row) + "\n")
    return buf.getvalue()


def _record(command: str, result: dict, cfg: RunConfig) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "command": command,
        "result": result,
        "config": cfg.as_dict(),
    }


def _flatten_text(obj, prefix=""):
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            lines += _flatten_text(v, f"{prefix}{k}.")
    else:
        lines.append(f"{prefix[:-1]} = {dumps17(obj)}")
    return lines


def _render(record: dict, cfg: RunConfig) -> str:
    if cfg["output.format"] == "text":
        return "\n".join(_flatten_text(record)) + "\n"
    return dumps17(record) + "\n"


def _write(text: str, cfg: RunConfig, stdout):
    if cfg["output.path"]:
        Path(cfg["output.path"]).write_text(text)
    else:
        stdout.write(text)


def cmd_bands(args, cfg, stdout):
    model = make_model(cfg)
    if args.samples < 1:
        raise ValidationError("--samples must be at least 1")
    pts, labels = _parse_path(args.path, _waypoints(model, cfg))
    path = band_path(model, pts, args.samples)
    header = ["s", "k1", "k2"] + [f"e{i + 1}" for i in range(model.nu)]
    comment = f"command=bands model={model.name} path={'-'.join(labels)} samples={args.samples}"
    _write(_csv(header, path.rows(), comment), cfg, stdout)


def _kubo_kwargs(cfg):
    return dict(grid=cfg.grid(), settings=cfg.contour_settings(), workers=cfg["run.workers"])


def cmd_sigma_zero(args, cfg, stdout):
    from .kubo import sigma_zero

    model = make_model(cfg)
    pair = (int(args.pair[0]), int(args.pair[1]))
    res = sigma_zero(model, cfg.params(), pair, method=args.method, **_kubo_kwargs(cfg))
    _write(_render(_record("sigma21-zero", res.to_record(), cfg), cfg), cfg, stdout)


def _parse_sweep(text: str):
    try:
        name, spec = text.split("=", 1)
        start, stop, step = (float(v) for v in spec.split(":"))
    except ValueError as exc:
        raise ValidationError(f"bad --sweep {text!r}; expected NAME=START:STOP:STEP") from exc
    name = name.strip()
    if name not in ("mu", "beta", "omega0"):
        raise ValidationError("--sweep name must be mu, beta or omega0")
    if not step > 0 or stop < start:
        raise ValidationError("--sweep needs START <= STOP and STEP > 0")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return name, [start + i * step for i in range(count)]


def cmd_verdet(args, cfg, stdout):
    from .kubo import sigma21_first_derivative, with_convergence

    model = make_model(cfg)
    kw = _kubo_kwargs(cfg)
    if args.sweep:
        name, values = _parse_sweep(args.sweep)
        params = [cfg.params(**{name: v}) for v in values]  # validate every point first
        rows = []
        for v, p in zip(values, params):
            res = sigma21_first_derivative(model, p, **kw)
            rows.append((v, res.value, res.imag_residue))
        comment = f"command=verdet model={model.name} sweep={name}"
        _write(_csv([name, "sigma21_1", "imag_residue"], rows, comment), cfg, stdout)
        return
    if args.check_convergence:
        res = with_convergence(sigma21_first_derivative, model, cfg.params(), grid=kw["grid"],
                               settings=kw["settings"], workers=kw["workers"])
    else:
        res = sigma21_first_derivative(model, cfg.params(), **kw)
    _write(_render(_record("verdet", res.to_record(), cfg), cfg), cfg, stdout)


def cmd_finite(args, cfg, stdout):
    from .finite import build_finite, numeric_b_derivative, sigma21_finite

    model = make_model(cfg)
    params = cfg.params()
    etas = cfg["finite.eta_list"]
    settings = cfg.contour_settings()
    deriv = numeric_b_derivative(model, cfg["finite.N"], params, cfg["finite.b_step"], etas,
                                 richardson=not args.no_richardson, settings=settings,
                                 max_sites=cfg["finite.max_sites"])
    points = list(deriv.points)
    if cfg["finite.b"] != 0.0:
        lat = build_finite(model, cfg["finite.N"], cfg["finite.b"], max_sites=cfg["finite.max_sites"])
        points += sigma21_finite(lat, params, etas, method=cfg["finite.method"], settings=settings)
    points.sort(key=lambda p: (p.b, -p.eta))
    comment = f"command=finite model={model.name}"
    csv_text = _csv(["N", "b", "eta", "sigma21", "eta_term"], (p.row() for p in points), comment)
    record = _record("finite", deriv.to_record(), cfg)
    if cfg["output.path"]:
        Path(cfg["output.path"]).write_text(csv_text)
        stdout.write(_render(record, cfg))
    else:
        stdout.write(csv_text)
        stdout.write("# record: " + dumps17(record) + "\n")


def cmd_faraday(args, cfg, stdout):
    from .faraday import SlabOptics, verdet_and_angle
    from .kubo import sigma21_first_derivative, sigma_zero

    params = cfg.params()
    omega = cfg["optics.omega"] if cfg["optics.omega"] is not None else params.omega0
    optics = SlabOptics(d=cfg["optics.d"], eps_r=cfg["optics.eps_r"], mu_r=cfg["optics.mu_r"],
                        c=cfg["optics.c"], omega=omega)
    if args.compute:
        model = make_model(cfg)
        kw = _kubo_kwargs(cfg)
        s21 = sigma21_first_derivative(model, params, **kw).value
        s11 = sigma_zero(model, params, (1, 1), **kw).value
    else:
        if args.sigma21_1 is None or args.sigma11_0 is None:
            raise ValidationError("give --sigma21-1 and --sigma11-0, or --compute")
        s21, s11 = args.sigma21_1, args.sigma11_0
    res = verdet_and_angle(s21, s11, params.b, optics)
    result = {"sigma21_1": s21, "sigma11_0": s11, "b": params.b, **res.to_record()}
    _write(_render(_record("faraday", result, cfg), cfg), cfg, stdout)


def cmd_selftest(args, cfg, stdout):
    from .selftest import run_selftest

    ok = run_selftest(stdout)
    if not ok:
        raise NumericalError("selftest failed")


COMMANDS = {
    "bands": cmd_bands,
    "sigma21-zero": cmd_sigma_zero,
    "verdet": cmd_verdet,
    "finite": cmd_finite,
    "faraday": cmd_faraday,
    "selftest": cmd_selftest,
}


def dispatch(argv=None, stdout=None) -> int:
    """Run one subcommand and return its exit status."""
    stdout = sys.stdout if stdout is None else stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        if args.print_config:
            stdout.write(dumps17({"format_version": FORMAT_VERSION, "config": cfg.as_dict(),
                                  "backend": kernels.BACKEND}) + "\n")
            return EXIT_OK
        COMMANDS[args.command](args, cfg, stdout)
    except ValidationError as exc:
        _emit_error(exc, EXIT_VALIDATION)
        return EXIT_VALIDATION
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        _emit_error(exc, EXIT_NUMERICAL)
        return EXIT_NUMERICAL
    except TBVerdetError as exc:  # pragma: no cover - every subclass is handled above
        _emit_error(exc, EXIT_NUMERICAL)
        return EXIT_NUMERICAL
    except OSError as exc:
        _emit_error(exc, EXIT_VALIDATION)
        return EXIT_VALIDATION
    return EXIT_OK


def main(argv=None):
    sys.exit(dispatch(argv))
