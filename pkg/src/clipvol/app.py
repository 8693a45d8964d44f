"""Command-line front end and the YAML problem-file format.

Problem file::

    dimension: 4
    constraints:
      - type: ball
        center: [-1.5, 0.5, 0.5, 0.5]
        radius: 2.2
      - type: halfspace
        normal: [1, 1, 0, 0]
        offset: 1
      - type: generic          # sum_q coefficients[q](x_q) <= offset
        coefficients:          # one list per coordinate, lowest power first
          - [0, 0, 1]
          - ["1/2", 1]
          - [0]
          - [0]
        offset: 1

Numbers are read from the raw YAML text, so 0.1 means 1/10 exactly, and
"p/q" strings are accepted. At most two constraints; an empty list is the
bare cube.

Exit codes: 0 ok, 1 usage or parse error, 2 precondition failure,
3 inconclusive solver.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from typing import Sequence

import yaml

from .constraint import (
    BallShape,
    ClippedCubeProblem,
    HalfspaceShape,
    SeparableConstraint,
    from_ball,
    from_halfspace,
    normalize,
)
from .errors import BoundNotApplicable, InconclusiveError, PreconditionError
from .heaviside import h_k, logistic, phi_g, phi_l
from .moments import MomentFamily, block_moments
from .oracle import mc_volume
from .polynomial import UnivariatePolynomial
from .solver import McOracle, TkOracle, max_distance
from .volume import DEFAULT_MAX_ORDER, smoothing_bound, t_of_k

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class ProblemParseError(ValueError):
    pass


def _where(node, field: str) -> str:
    return f"line {node.start_mark.line + 1}, {field}"


def _fail(node, field: str, message: str):
    raise ProblemParseError(f"{_where(node, field)}: {message}")


def _mapping(node, field: str) -> dict:
    if not isinstance(node, yaml.MappingNode):
        _fail(node, field, "expected a mapping")
    out = {}
    for k, v in node.value:
        if not isinstance(k, yaml.ScalarNode):
            _fail(k, field, "keys must be plain names")
        out[k.value] = v
    return out


def _sequence(node, field: str) -> list:
    if not isinstance(node, yaml.SequenceNode):
        _fail(node, field, "expected a list")
    return list(node.value)


def _number(node, field: str) -> Fraction:
    if not isinstance(node, yaml.ScalarNode):
        _fail(node, field, "expected a number")
    try:
        return Fraction(node.value.strip())
    except (ValueError, ZeroDivisionError):
        _fail(node, field, f"malformed number {node.value!r}")


def _vector(node, field: str, n: int) -> list[Fraction]:
    items = _sequence(node, field)
    if len(items) != n:
        _fail(node, field, f"expected {n} entries, got {len(items)}")
    return [_number(v, f"{field}[{i}]") for i, v in enumerate(items)]


def _require(fields: dict, node, field: str, names: Sequence[str]) -> None:
    missing = [k for k in names if k not in fields]
    if missing:
        _fail(node, field, f"missing {', '.join(missing)}")
    extra = sorted(set(fields) - set(names) - {"type"})
    if extra:
        _fail(node, field, f"unknown field {extra[0]}")


def _constraint(node, field: str, n: int) -> SeparableConstraint:
    fields = _mapping(node, field)
    kind_node = fields.get("type")
    if kind_node is None:
        _fail(node, field, "missing type")
    kind = kind_node.value
    try:
        if kind == "ball":
            _require(fields, node, field, ("center", "radius"))
            return from_ball(
                _vector(fields["center"], f"{field}.center", n),
                _number(fields["radius"], f"{field}.radius"),
            )
        if kind == "halfspace":
            _require(fields, node, field, ("normal", "offset"))
            return from_halfspace(
                _vector(fields["normal"], f"{field}.normal", n),
                _number(fields["offset"], f"{field}.offset"),
            )
        if kind == "generic":
            _require(fields, node, field, ("coefficients", "offset"))
            rows = _sequence(fields["coefficients"], f"{field}.coefficients")
            if len(rows) != n:
                _fail(fields["coefficients"], f"{field}.coefficients", f"expected {n} coordinate lists, got {len(rows)}")
            polys = []
            for q, row in enumerate(rows):
                coeffs = [_number(c, f"{field}.coefficients[{q}][{j}]") for j, c in enumerate(_sequence(row, f"{field}.coefficients[{q}]"))]
                if not coeffs:
                    _fail(row, f"{field}.coefficients[{q}]", "empty coefficient list")
                polys.append(UnivariatePolynomial(tuple(coeffs)))
            return SeparableConstraint(tuple(polys), _number(fields["offset"], f"{field}.offset"))
    except ProblemParseError:
        raise
    except ValueError as exc:
        _fail(node, field, str(exc))
    _fail(kind_node, f"{field}.type", f"unknown constraint type {kind!r}")


def parse_problem(text: str) -> ClippedCubeProblem:
    """Parse a problem file; constraints come back normalized (offset 0)."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else "input"
        raise ProblemParseError(f"{where}: {getattr(exc, 'problem', None) or exc}") from None
    if root is None:
        raise ProblemParseError("input: empty problem file")
    top = _mapping(root, "problem")
    _require(top, root, "problem", ("dimension", "constraints"))
    dim_node = top["dimension"]
    try:
        n = int(dim_node.value)
    except (AttributeError, ValueError):
        _fail(dim_node, "dimension", "expected a positive integer")
    if n < 1:
        _fail(dim_node, "dimension", "expected a positive integer")
    cons_node = top["constraints"]
    if isinstance(cons_node, yaml.ScalarNode) and cons_node.value in ("", "null", "~"):
        items = []
    else:
        items = _sequence(cons_node, "constraints")
    if len(items) > 2:
        _fail(cons_node, "constraints", f"at most two constraints are supported, got {len(items)}")
    cons = tuple(normalize(_constraint(c, f"constraints[{i}]", n)) for i, c in enumerate(items))
    return ClippedCubeProblem(n, cons)


def _q(x: Fraction) -> str:
    return f'"{x}"'


def _qlist(xs) -> str:
    return "[" + ", ".join(_q(x) for x in xs) + "]"


def serialize_problem(problem: ClippedCubeProblem) -> str:
    lines = [f"dimension: {problem.dimension}"]
    if not problem.constraints:
        lines.append("constraints: []")
    else:
        lines.append("constraints:")
    for c in problem.constraints:
        if isinstance(c.shape, BallShape):
            lines += ["  - type: ball", f"    center: {_qlist(c.shape.center)}", f"    radius: {_q(c.shape.radius)}"]
        elif isinstance(c.shape, HalfspaceShape):
            lines += ["  - type: halfspace", f"    normal: {_qlist(c.shape.normal)}", f"    offset: {_q(c.shape.offset)}"]
        else:
            lines += ["  - type: generic", "    coefficients:"]
            lines += [f"      - {_qlist(p.coefficients)}" for p in c.per_coordinate]
            lines.append(f"    offset: {_q(c.offset)}")
    return "\n".join(lines) + "\n"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load(path: str) -> ClippedCubeProblem:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ProblemParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_problem(text)


def _kv(rows) -> str:
    return "".join(f"{k}: {v!r}\n" if isinstance(v, float) else f"{k}: {v}\n" for k, v in rows)


def _cmd_volume(args, out) -> int:
    problem = _load(args.problem)
    report = t_of_k(
        problem, args.K, args.delta, args.tau,
        precision_bits=args.precision_bits,
        rule="midpoint" if args.midpoint else "left",
        route=args.route,
        workers=args.threads,
        max_order=args.max_order,
    )
    out.write(report.to_text(timing=args.timing))
    return EXIT_OK


def _cmd_bound(args, out) -> int:
    problem = _load(args.problem)
    try:
        value = smoothing_bound(problem, args.K)
    except BoundNotApplicable as exc:
        out.write(f"bound: not applicable\nreason: {exc}\n")
        return EXIT_PRECONDITION
    out.write(_kv([("bound", value), ("K", float(args.K))]))
    return EXIT_OK


def _cmd_mc(args, out) -> int:
    problem = _load(args.problem)
    est = mc_volume(problem, args.samples, args.seed, args.threads)
    out.write(_kv([("mean", est.mean), ("std_error", est.std_error), ("samples", est.samples),
                   ("seed", est.seed), ("hits", est.hits)]))
    return EXIT_OK


def _parse_vector(text: str) -> list[Fraction]:
    try:
        return [Fraction(v.strip()) for v in text.split(",")]
    except (ValueError, ZeroDivisionError):
        raise ProblemParseError(f"malformed vector {text!r}") from None


def _cmd_maxdist(args, out) -> int:
    problem = _load(args.problem)
    center = _parse_vector(args.center)
    if args.oracle == "mc":
        oracle = McOracle(args.samples, args.seed, workers=args.threads)
    else:
        oracle = TkOracle(args.K, args.delta, args.tau, workers=args.threads)
    _, trace = max_distance(problem, center, args.tol, oracle)
    out.write(f"oracle: {args.oracle}\n")
    out.write(trace.to_text())
    return EXIT_OK


PLOT_FUNCTIONS = {
    "hk": lambda t, K: h_k(t, K),
    "logistic": lambda t, K: logistic(t, K),
    "phil": lambda t, K: phi_l(K * t),
    "phig": lambda t, K: phi_g(K * t),
}


def plot_grid(text: str) -> list[float]:
    """'lo:hi:step' -> lo, lo+step, ... up to hi inclusive (exact arithmetic)."""
    try:
        lo, hi, step = (Fraction(p) for p in text.split(":"))
    except (ValueError, ZeroDivisionError):
        raise ProblemParseError(f"malformed range {text!r}, expected lo:hi:step") from None
    if step <= 0 or hi < lo:
        raise ProblemParseError(f"range {text!r} needs step > 0 and lo <= hi")
    count = int((hi - lo) // step) + 1
    return [float(lo + i * step) for i in range(count)]


def plot_rows(function: str, ks: Sequence[float], grid: Sequence[float]) -> list[str]:
    fn = PLOT_FUNCTIONS[function]
    rows = ["t,value,K"]
    for K in ks:
        for t in grid:
            rows.append(f"{t!r},{fn(t, K)!r},{K!r}")
    return rows


def _cmd_plot(args, out) -> int:
    try:
        ks = [float(Fraction(k)) for k in args.K.split(",")]
    except (ValueError, ZeroDivisionError):
        raise ProblemParseError(f"malformed K list {args.K!r}") from None
    if any(k <= 0 for k in ks):
        raise PreconditionError("every K must be positive")
    rows = plot_rows(args.function, ks, plot_grid(args.range))
    text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        out.write(f"rows: {len(rows) - 1}\nout: {args.out}\n")
    else:
        out.write(text)
    return EXIT_OK


def _cmd_moments(args, out) -> int:
    problem = _load(args.problem)
    if not problem.constraints:
        raise PreconditionError("the bare cube has no residual to take moments of")
    g = problem.constraints[0].residual_terms()
    h = problem.constraints[1].residual_terms() if len(problem.constraints) == 2 else None
    Q = args.max_power if h is not None else 0
    table = block_moments(MomentFamily.plain(g, h), args.max_power, Q)
    out.write("m,r,value\n")
    for r in range(Q + 1):
        for m in range(args.max_power + 1):
            out.write(f"{m},{r},{table.value(m, r)}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="clipvol", description="Volumes of clipped unit cubes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("volume", help="smoothed volume T(K) with certified error")
    p.add_argument("--problem", required=True)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--delta", type=float, default=1e-4, help="quadrature error budget")
    p.add_argument("--tau", type=float, default=1e-8, help="series truncation tolerance")
    p.add_argument("--precision-bits", type=int, default=None)
    p.add_argument("--midpoint", action="store_true")
    p.add_argument("--route", choices=("collapsed", "terms"), default="collapsed")
    p.add_argument("--max-order", type=int, default=DEFAULT_MAX_ORDER)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="also print wall_time_ms")
    p.set_defaults(run=_cmd_volume)

    p = sub.add_parser("bound", help="a-priori |vol - T(K)| bound for balls")
    p.add_argument("--problem", required=True)
    p.add_argument("--K", type=float, required=True)
    p.set_defaults(run=_cmd_bound)

    p = sub.add_parser("mc", help="Monte Carlo volume")
    p.add_argument("--problem", required=True)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(run=_cmd_mc)

    p = sub.add_parser("maxdist", help="farthest feasible point from a center")
    p.add_argument("--problem", required=True)
    p.add_argument("--center", required=True, help="comma-separated coordinates")
    p.add_argument("--tol", type=float, default=1e-2)
    p.add_argument("--oracle", choices=("tk", "mc"), default="mc")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--K", type=float, default=4.0)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--tau", type=float, default=1e-8)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(run=_cmd_maxdist)

    p = sub.add_parser("plot", help="CSV data for the step-function figures")
    p.add_argument("--function", choices=sorted(PLOT_FUNCTIONS), required=True)
    p.add_argument("--K", required=True, help="comma-separated sharpness values")
    p.add_argument("--range", default="-3:3:0.01", help="lo:hi:step")
    p.add_argument("--out", default=None)
    p.set_defaults(run=_cmd_plot)

    p = sub.add_parser("moments", help="dump exact residual moments")
    p.add_argument("--problem", required=True)
    p.add_argument("--max-power", type=int, required=True)
    p.set_defaults(run=_cmd_moments)
    return parser


def _glue_negative_values(argv: list[str]) -> list[str]:
    # "--range -3:3:0.01" would otherwise be read as an unknown option
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in ("--range", "--center") and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def run_subcommand(argv: Sequence[str], out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(_glue_negative_values(list(argv)))
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.run(args, out)
    except ProblemParseError as exc:
        err.write(f"parse error: {exc}\n")
        return EXIT_USAGE
    except InconclusiveError as exc:
        err.write(f"inconclusive: {exc}\n")
        return EXIT_INCONCLUSIVE
    except (PreconditionError, ValueError) as exc:
        err.write(f"precondition failed: {exc}\n")
        return EXIT_PRECONDITION


def main(argv: Sequence[str] | None = None) -> int:
    return run_subcommand(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
