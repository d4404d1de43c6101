"""Command-line entry point: ``sortnet <subcommand> ...``.

Exit codes: 0 SAT / verified / optimum, 20 UNSAT / refuted, 1 usage error,
2 runtime or solver error, 3 unknown (budget exhausted).
"""

from __future__ import annotations

import argparse
import json
import logging
import shlex
import sys
from pathlib import Path

from . import figures
from .cnf import SAT, UNSAT, write_dimacs, write_varmap
from .encodings import ENCODINGS, ProblemSpec, SpecError, build
from .network import CLASSES, LayeredNetwork, NetworkError, certify, parse_ascii, parse_eps, render_ascii
from .search import (Budget, default_encoding, known_size_bounds, optimal_depth, optimal_size, render_cells,
                     reproduce_tables)
from .solver import IntegrityError, SolverConfig, SolverError, solve_spec

EXIT_OK, EXIT_USAGE, EXIT_ERROR, EXIT_UNKNOWN, EXIT_UNSAT = 0, 1, 2, 3, 20

log = logging.getLogger("sortnet")


class UsageError(Exception):
    pass


def _spec_flags(p: argparse.ArgumentParser, bound_required: bool = True) -> None:
    p.add_argument("--n", type=int, required=True, help="number of channels")
    p.add_argument("--class", dest="cls", choices=CLASSES, default="sorting")
    if bound_required:
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--size", type=int, help="exact comparator count")
        g.add_argument("--depth", type=int, help="maximum number of layers")
    p.add_argument("--eps", help="halver tolerance as an exact rational, e.g. 1/4")
    p.add_argument("--encoding", choices=ENCODINGS, help="defaults by class and shape")
    p.add_argument("--size-cap", type=int, help="at most this many comparators (depth problems)")
    p.add_argument("--cross-half", action="store_true", help="halvers: only comparators across the halves")


def _solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--solver", help="external solver command (default: $SORTNET_SOLVER or kissat/cadical)")
    g.add_argument("--embedded", action="store_true", help="use the built-in solver (small formulas only)")
    p.add_argument("--time-limit", type=float, help="seconds per solver call")
    p.add_argument("--keep-files", action="store_true", help="keep temporary DIMACS files")


def _solver_config(args) -> SolverConfig:
    if args.embedded:
        return SolverConfig("embedded", time_limit=args.time_limit)
    if args.solver:
        return SolverConfig("external", shlex.split(args.solver), args.time_limit, keep_files=args.keep_files)
    cfg = SolverConfig.auto(args.time_limit)
    cfg.keep_files = args.keep_files
    return cfg


def _spec(args) -> ProblemSpec:
    shape = "size" if args.size is not None else "depth"
    bound = args.size if shape == "size" else args.depth
    eps = parse_eps(args.eps) if args.eps is not None else None
    return ProblemSpec(args.n, args.cls, shape, bound, args.encoding or default_encoding(args.cls, shape),
                       eps=eps, size_cap=args.size_cap, cross_half_only=args.cross_half)


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_network(path: str) -> LayeredNetwork:
    if path.startswith("builtin:"):
        return figures.load(path[len("builtin:"):]).network
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    if text.lstrip().startswith("{"):
        return LayeredNetwork.from_json(json.loads(text))
    return parse_ascii(text)


def cmd_encode(args) -> int:
    spec = _spec(args)
    f = build(spec)
    if args.output:
        with open(args.output, "w") as fh:
            write_dimacs(f, fh)
    else:
        write_dimacs(f, sys.stdout)
    if args.varmap:
        with open(args.varmap, "w") as fh:
            write_varmap(f.pool, fh)
    if args.spec_out:
        Path(args.spec_out).write_text(json.dumps(spec.to_json(), indent=2) + "\n")
    print(f"{f.num_vars} variables, {f.num_clauses} clauses", file=sys.stderr)
    return EXIT_OK


def cmd_solve(args) -> int:
    spec = _spec(args)
    out = solve_spec(spec, _solver_config(args))
    report = {"spec": spec.to_json(), "status": out.status, "seconds": round(out.seconds, 3),
              "variables": out.num_vars, "clauses": out.num_clauses}
    if out.status == SAT:
        report["certification"] = out.certification.to_json()
        report["network"] = out.network.to_json()
        if args.witness:
            Path(args.witness).write_text(json.dumps(out.network.to_json()) + "\n")
    elif out.diagnostics:
        report["diagnostics"] = out.diagnostics
    _write(args.output, json.dumps(report, indent=2) + "\n")
    if out.status == SAT:
        return EXIT_OK
    return EXIT_UNSAT if out.status == UNSAT else EXIT_UNKNOWN


def cmd_verify(args) -> int:
    net = _load_network(args.network)
    eps = parse_eps(args.eps) if args.eps is not None else None
    if args.cls == "halver" and eps is None:
        raise UsageError("--eps is required for --class halver")
    rec = certify(net, args.cls, eps)
    report = {"n": net.n, "size": net.size, "depth": net.depth, **rec.to_json()}
    _write(args.output, json.dumps(report, indent=2) + "\n")
    return EXIT_OK if rec.verdict else EXIT_UNSAT


def cmd_render(args) -> int:
    _write(args.output, render_ascii(_load_network(args.network)) + "\n")
    return EXIT_OK


def cmd_search(args) -> int:
    budget = Budget(args.time_limit, args.total_time)
    cfg = _solver_config(args)
    if args.parameter == "size":
        lower, witness = (None, None)
        if args.known_bounds:
            lower, witness = known_size_bounds(args.n, args.cls)
            if args.cls == "sorting":
                lower = None
        res = optimal_size(args.n, args.cls, args.encoding, budget, cfg, lower_seed=lower, upper_witness=witness)
    else:
        res = optimal_depth(args.n, args.cls, args.encoding, budget, cfg)
    if args.witness and res.witness is not None:
        Path(args.witness).write_text(json.dumps(res.witness.to_json()) + "\n")
    _write(args.output, json.dumps(res.to_json(), indent=2) + "\n")
    print(f"{args.parameter} n={args.n} {args.cls}: {res.describe()} (lower bound {res.lower_source})",
          file=sys.stderr)
    return EXIT_OK if res.exact else EXIT_UNKNOWN


def cmd_tables(args) -> int:
    lo, _, hi = args.range.partition("..")
    ns = range(int(lo), int(hi or lo) + 1)
    budget = Budget(args.time_limit, args.total_time)
    cells = reproduce_tables(ns, args.tables, budget, _solver_config(args), args.known_bounds)
    if args.witness_dir:
        out = Path(args.witness_dir)
        out.mkdir(parents=True, exist_ok=True)
        for c in cells:
            if c.witness is not None:
                name = f"{c.table}_{c.quantity.replace(',', '').strip('()')}_{c.n}.json"
                (out / name).write_text(json.dumps(c.witness.to_json()) + "\n")
    _write(args.output, render_cells(cells, args.format))
    return EXIT_OK if all(c.exact for c in cells) else EXIT_UNKNOWN


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sortnet", description="SAT-based synthesis of optimal comparator networks")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="write the CNF for one instance")
    _spec_flags(p)
    p.add_argument("-o", "--output", help="DIMACS path (default stdout)")
    p.add_argument("--varmap", help="JSON file mapping variable ids to keys")
    p.add_argument("--spec-out", help="write the validated instance description as JSON")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("solve", help="solve one instance and certify the witness")
    _spec_flags(p)
    _solver_flags(p)
    p.add_argument("-o", "--output", help="report JSON (default stdout)")
    p.add_argument("--witness", help="write the certified network JSON here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="brute-force certification of a network")
    p.add_argument("--network", required=True, help="JSON or ASCII file, '-' for stdin, or builtin:<name>")
    p.add_argument("--class", dest="cls", choices=CLASSES, default="sorting")
    p.add_argument("--eps", help="halver tolerance, e.g. 1/4")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("render", help="draw a network as ASCII")
    p.add_argument("--network", required=True, help="JSON or ASCII file, '-' for stdin, or builtin:<name>")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("search", help="optimal size or depth")
    p.add_argument("parameter", choices=("size", "depth"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--class", dest="cls", choices=("sorting", "single-exception"), default="sorting")
    p.add_argument("--encoding", choices=ENCODINGS)
    p.add_argument("--total-time", type=float, help="overall budget in seconds")
    p.add_argument("--known-bounds", action="store_true",
                   help="seed size scans with established bounds and bundled witnesses")
    _solver_flags(p)
    p.add_argument("-o", "--output")
    p.add_argument("--witness")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("tables", help="optimal depth / size / (size, depth) tables over a range of n")
    p.add_argument("--range", default="2..6", help="channel range, e.g. 2..6")
    p.add_argument("--tables", nargs="+", choices=("depth", "size", "pareto"), default=["depth", "size", "pareto"])
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.add_argument("--total-time", type=float)
    p.add_argument("--known-bounds", action="store_true")
    p.add_argument("--witness-dir", help="directory for witness networks")
    _solver_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_tables)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, SpecError, NetworkError, KeyError, FileNotFoundError) as exc:
        print(f"sortnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, IntegrityError, OSError, ValueError) as exc:
        print(f"sortnet: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
