"""Command-line entry point.

Exit codes: 0 success, 2 bad input (parse errors, invalid parameters),
3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any

import numpy as np

from . import design, roots, sumrules
from .string_model import Constraints, StringError, StringSpec, reduce

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3

# used for strings whose reduction still carries density pieces
DEFAULT_BOX = roots.Box(-10.0, 10.0, 0.05, 10.0)


class InputError(Exception):
    pass


def fmt_number(x: float) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if float(x).is_integer() and abs(x) < 2**53:
        return str(int(x))
    return "%.17g" % x


def to_json(obj: Any) -> str:
    """Compact JSON with every float written to 17 significant digits."""
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, float, np.floating, np.integer)):
        x = float(obj)
        if not math.isfinite(x):
            return json.dumps(str(x))
        return fmt_number(x)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv(header: list[str], rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_number(v) if isinstance(v, (int, float)) else v for v in row])
    return buf.getvalue().rstrip("\n")


def load_string(path: str) -> StringSpec:
    """Read a string from JSON; a design result (with a ``string`` key) also works."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if isinstance(data, dict) and isinstance(data.get("string"), dict):
        data = data["string"]
    try:
        return StringSpec.from_dict(data)
    except StringError as exc:
        raise InputError(str(exc)) from exc


def _parse_box(text: str | None) -> roots.Box | None:
    if text is None:
        return None
    try:
        return roots.Box.parse(text)
    except ValueError as exc:
        raise InputError(f"bad --box: {exc}") from exc


def _constraints(mass: float | None, moment: float) -> Constraints:
    try:
        return Constraints(math.inf if mass is None else mass, moment)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def compute_spectrum(spec: StringSpec, box: roots.Box | None, tol: float,
                     cluster_tol: float) -> roots.Spectrum:
    if box is not None:
        return roots.spectrum_in_box(spec, box, tol=tol, cluster_tol=cluster_tol)
    reduced = reduce(spec)
    if reduced.is_atomic:
        # removing the density-1 tail keeps the resonances and makes F a polynomial
        return roots.spectrum(reduced, cluster_tol=cluster_tol)
    return roots.spectrum_in_box(spec, DEFAULT_BOX, tol=tol, cluster_tol=cluster_tol)


def cmd_spectrum(args) -> str:
    spec = load_string(args.file)
    sp = compute_spectrum(spec, _parse_box(args.box), args.tol, args.cluster_tol)
    note = f"method={sp.method} residual={sp.residual:.3e}"
    if sp.box is not None:
        b = sp.box
        note += f" box={b.re_min},{b.re_max},{b.im_min},{b.im_max} (complete only inside the box)"
    print(note, file=sys.stderr)
    if args.format == "csv":
        return _csv(["re", "im", "mult"], [[k.real, k.imag, r] for k, r in sp.entries])
    return to_json(sp.to_records())


def cmd_validate(args) -> str:
    spec = load_string(args.file)
    sp = compute_spectrum(spec, _parse_box(args.box), args.tol, args.cluster_tol)
    return to_json(sumrules.report(spec, sp).to_dict())


def cmd_design(args) -> str:
    c = _constraints(args.mass, args.moment)
    if math.isinf(c.m) and abs(args.alpha) < 1.0 / math.sqrt(c.S):
        raise InputError("--mass is required when |alpha| < 1/sqrt(moment)")
    return to_json(design.optimal_string(args.alpha, c).to_dict())


def cmd_sweep(args) -> str:
    c = _constraints(args.mass, args.moment)
    if args.steps < 2:
        raise InputError("--steps must be at least 2")
    if not args.alpha_max > args.alpha_min:
        raise InputError("--alpha-max must exceed --alpha-min")
    if math.isinf(c.m) and min(abs(args.alpha_min), abs(args.alpha_max)) < 1.0 / math.sqrt(c.S):
        raise InputError("--mass is required for frequencies below 1/sqrt(moment)")
    rows = []
    for a in np.linspace(args.alpha_min, args.alpha_max, args.steps):
        res = design.optimal_string(float(a), c)
        rows.append([float(a), res.I, "true" if res.attained else "false", res.branch])
    if args.format == "json":
        return to_json([dict(zip(("alpha", "I", "attained", "branch"), r)) for r in rows])
    return _csv(["alpha", "I", "attained", "branch"], rows)


def cmd_feasible(args) -> str:
    if not args.im > 0:
        raise InputError("--im must be positive")
    c = _constraints(args.mass, args.moment)
    return to_json({"feasible": design.feasible(complex(args.re, args.im), c)})


def cmd_sequence(args) -> str:
    c = _constraints(args.mass, args.moment)
    try:
        betas = [float(b) for b in args.betas.split(",")]
        strings = design.optimizing_sequence(args.alpha, c, betas)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return to_json([s.to_dict() for s in strings])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="krein-resonance",
        description="Resonances of Krein strings and their optimal design under mass/moment bounds.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def solver_opts(sp):
        sp.add_argument("file", help="JSON string description")
        sp.add_argument("--box", help="search rectangle re0,re1,im0,im1 (forces the contour path)")
        sp.add_argument("--tol", type=float, default=1e-8, help="root residual tolerance")
        sp.add_argument("--cluster-tol", type=float, default=1e-6,
                        help="relative distance under which roots merge into one multiple root")

    sp = sub.add_parser("spectrum", help="resonances of a string")
    solver_opts(sp)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("validate", help="sum-rule residuals for a string")
    solver_opts(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("design", help="optimal string for one frequency")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--mass", type=float)
    sp.add_argument("--moment", type=float, required=True)
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("sweep", help="I(alpha) on a uniform frequency grid")
    sp.add_argument("--mass", type=float)
    sp.add_argument("--moment", type=float, required=True)
    sp.add_argument("--alpha-min", type=float, required=True)
    sp.add_argument("--alpha-max", type=float, required=True)
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("feasible", help="is a point a possible resonance of an admissible string")
    sp.add_argument("--re", type=float, required=True)
    sp.add_argument("--im", type=float, required=True)
    sp.add_argument("--mass", type=float, required=True)
    sp.add_argument("--moment", type=float, required=True)
    sp.set_defaults(func=cmd_feasible)

    sp = sub.add_parser("sequence", help="optimizing sequence where the optimum is not attained")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--mass", type=float)
    sp.add_argument("--moment", type=float, required=True)
    sp.add_argument("--betas", required=True, help="comma-separated decay rates")
    sp.set_defaults(func=cmd_sequence)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse has already printed usage; --help exits 0
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    try:
        out = args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (roots.SolverError, design.DesignError) as exc:
        diag = getattr(exc, "diagnostics", {})
        print(f"solver failure: {exc} {diag if diag else ''}".rstrip(), file=sys.stderr)
        return EXIT_SOLVER
    sys.stdout.write(out + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
