"""Optimal size, depth and (size, depth) searches with bound bookkeeping.

Every SAT verdict carries a witness re-certified by the brute-force checker.
UNSAT verdicts are taken from the solver without proof checking and are
labelled ``solver-attested`` in reports.  When a budget runs out the result
is an interval, never a guessed optimum.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .cnf import SAT, UNKNOWN, UNSAT
from .encodings import ProblemSpec, SpecError
from .network import LayeredNetwork, certify
from .solver import SolverConfig, solve_spec

log = logging.getLogger(__name__)

ATTESTED = "solver-attested"


@dataclass
class Budget:
    instance_seconds: float | None = None
    total_seconds: float | None = None


@dataclass
class TraceEntry:
    encoding: str
    bound: int
    size_cap: int | None
    status: str
    seconds: float
    num_vars: int
    num_clauses: int

    def to_json(self) -> dict:
        return self.__dict__.copy()


@dataclass
class SearchResult:
    n: int
    cls: str
    parameter: str  # "size" or "depth"
    lower: int
    upper: int | None
    witness: LayeredNetwork | None = None
    lower_source: str = ATTESTED
    trace: list[TraceEntry] = field(default_factory=list)

    @property
    def optimum(self) -> int | None:
        return self.lower if self.upper is not None and self.lower == self.upper else None

    @property
    def exact(self) -> bool:
        return self.optimum is not None

    def describe(self) -> str:
        if self.exact:
            return str(self.optimum)
        return f"[{self.lower}, {'?' if self.upper is None else self.upper}]"

    def to_json(self) -> dict:
        return {
            "n": self.n, "class": self.cls, "parameter": self.parameter,
            "optimum": self.optimum, "lower": self.lower, "upper": self.upper,
            "lower_source": self.lower_source,
            "witness": self.witness.to_json() if self.witness else None,
            "trace": [t.to_json() for t in self.trace],
        }


class _Runner:
    def __init__(self, cfg: SolverConfig | None, budget: Budget | None):
        self.budget = budget or Budget()
        base = cfg or SolverConfig.auto()
        self.cfg = SolverConfig(base.mode, base.command, self.budget.instance_seconds or base.time_limit,
                                base.tmpdir, base.keep_files, base.max_clauses)
        self.start = time.perf_counter()
        self.trace: list[TraceEntry] = []

    def exhausted(self) -> bool:
        total = self.budget.total_seconds
        return total is not None and time.perf_counter() - self.start > total

    def run(self, spec: ProblemSpec):
        out = solve_spec(spec, self.cfg)
        self.trace.append(TraceEntry(spec.encoding, spec.bound, spec.size_cap, out.status, round(out.seconds, 3),
                                     out.num_vars, out.num_clauses))
        return out


def default_encoding(cls: str, parameter: str) -> str:
    if parameter == "size":
        return "sbck" if cls == "single-exception" else "sfwd"
    return "dbck" if cls == "single-exception" else "dfwd"


def _scan(runner: _Runner, template: ProblemSpec, parameter: str, seed: int, lower_seed: int | None,
          upper_witness: LayeredNetwork | None, max_bound: int) -> SearchResult:
    n, cls = template.n, template.cls
    lower = seed if lower_seed is None else lower_seed
    source = ATTESTED if lower_seed is None else "seed"
    upper, witness = None, None
    if upper_witness is not None:
        if not certify(upper_witness, cls, template.eps).verdict:
            raise SpecError("upper-bound witness does not certify")
        upper = upper_witness.size if parameter == "size" else upper_witness.depth
        witness = upper_witness
    v = lower
    while (upper is None or v < upper) and v <= max_bound and not runner.exhausted():
        out = runner.run(template.with_bound(v))
        if out.status == SAT:
            upper, witness = v, out.network
            break
        if out.status == UNSAT:
            lower, source = v + 1, ATTESTED
        v += 1
    # a seed that turned out optimal still needs UNSAT one step below
    if upper is not None and upper == lower and lower > 0 and source == "seed" and not runner.exhausted():
        below = runner.run(template.with_bound(lower - 1))
        if below.status == UNSAT:
            source = ATTESTED
        elif below.status == SAT:
            raise SpecError(f"lower seed {lower} contradicted by a witness at {lower - 1}")
    return SearchResult(n, cls, parameter, lower, upper, witness, source, runner.trace)


def optimal_size(n: int, cls: str = "sorting", encoding: str | None = None, budget: Budget | None = None,
                 cfg: SolverConfig | None = None, lower_seed: int | None = None,
                 upper_witness: LayeredNetwork | None = None, max_bound: int | None = None) -> SearchResult:
    """Minimum comparator count, scanning sizes upward.

    ``lower_seed`` is a lower bound the caller vouches for (e.g. a published
    result); scanning starts there.  ``upper_witness`` caps the scan.
    """
    if cls not in ("sorting", "single-exception"):
        raise SpecError("size search supports sorting and single-exception networks")
    encoding = encoding or default_encoding(cls, "size")
    if cls == "single-exception":
        encoding = "sbck"
    template = ProblemSpec(n, cls, "size", 0, encoding)
    seed = n - 1 if cls == "sorting" else 0
    max_bound = n * (n - 1) // 2 if max_bound is None else max_bound
    return _scan(_Runner(cfg, budget), template, "size", seed, lower_seed, upper_witness, max_bound)


def optimal_depth(n: int, cls: str = "sorting", encoding: str | None = None, budget: Budget | None = None,
                  cfg: SolverConfig | None = None, lower_seed: int | None = None,
                  upper_witness: LayeredNetwork | None = None, max_bound: int | None = None) -> SearchResult:
    if cls not in ("sorting", "single-exception"):
        raise SpecError("depth search supports sorting and single-exception networks")
    encoding = encoding or default_encoding(cls, "depth")
    if cls == "single-exception":
        encoding = "dbck"
    template = ProblemSpec(n, cls, "depth", 0, encoding)
    max_bound = n if max_bound is None else max_bound
    return _scan(_Runner(cfg, budget), template, "depth", 0, lower_seed, upper_witness, max_bound)


@dataclass
class ParetoResult:
    n: int
    cls: str
    front: list[tuple[int, int]]
    witnesses: dict[tuple[int, int], LayeredNetwork]
    complete: bool
    trace: list[TraceEntry] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "n": self.n, "class": self.cls, "front": [list(p) for p in self.front], "complete": self.complete,
            "witnesses": {f"{s},{d}": w.to_json() for (s, d), w in self.witnesses.items()},
            "notes": self.notes, "trace": [t.to_json() for t in self.trace],
        }


def _min_size_at_depth(runner: _Runner, template: ProblemSpec, depth: int, start_cap: int | None,
                       known: LayeredNetwork | None = None):
    """Smallest size at a fixed depth, scanning the cap downward from the
    last witness.  Returns ``(size or None, witness, exact)``; ``None`` means
    nothing fits under ``start_cap``."""
    cap, best, witness = start_cap, None, None
    if known is not None and (cap is None or known.size <= cap):
        best, witness, cap = known.size, known, known.size - 1
        if best == 0:
            return best, witness, True
    while True:
        if runner.exhausted():
            return best, witness, False
        out = runner.run(ProblemSpec(template.n, template.cls, "depth", depth, template.encoding, size_cap=cap))
        if out.status == SAT:
            best, witness = out.network.size, out.network
            if best == 0:
                return best, witness, True
            cap = best - 1
        elif out.status == UNSAT:
            return best, witness, True
        else:
            return best, witness, False


def pareto_size_depth(n: int, cls: str = "sorting", budget: Budget | None = None, cfg: SolverConfig | None = None,
                      size_optimum: int | None = None, encoding: str = "dbck") -> ParetoResult:
    """Non-dominated (size, depth) pairs, walking depth upward from the optimum.

    The walk stops once the best size reaches ``size_optimum`` when given;
    otherwise after an UNSAT answer for depth ``best - 1`` with cap
    ``best - 1``, which rules out any smaller network at every depth.
    """
    if encoding not in ("dbck", "dfwd"):
        raise SpecError("pareto search uses a fixed-depth encoding")
    depth = optimal_depth(n, cls, encoding, budget, cfg)
    runner = _Runner(cfg, budget)
    runner.trace = depth.trace
    result = ParetoResult(n, cls, [], {}, False, runner.trace)
    if not depth.exact:
        result.notes.append(f"optimal depth only bounded: {depth.describe()}")
        return result
    template = ProblemSpec(n, cls, "depth", depth.optimum, encoding)
    d, best, known = depth.optimum, None, depth.witness
    while True:
        size, witness, exact = _min_size_at_depth(runner, template, d, None if best is None else best - 1, known)
        known = None
        if not exact:
            result.notes.append(f"depth {d}: budget exhausted")
            return result
        if size is not None:
            result.front.append((size, d))
            result.witnesses[(size, d)] = witness
            best = size
        if size_optimum is not None:
            if best <= size_optimum:
                break
        else:
            if best == 0 or runner.exhausted():
                break
            probe = runner.run(ProblemSpec(n, cls, "depth", best - 1, encoding, size_cap=best - 1))
            if probe.status == UNSAT:
                break
            if probe.status == UNKNOWN:
                result.notes.append(f"could not rule out size {best - 1} at any depth")
                return result
        d += 1
    result.complete = True
    return result


# Established optimal sizes of sorting networks (exhaustive results for n <= 10).
# Adding one comparator to a single-exception network sorts, so S(n) - 1 is a
# valid lower bound for the single-exception size.
KNOWN_SORTING_SIZE = {1: 0, 2: 1, 3: 3, 4: 5, 5: 9, 6: 12, 7: 16, 8: 19, 9: 25, 10: 29}


def known_size_bounds(n: int, cls: str) -> tuple[int | None, LayeredNetwork | None]:
    """Lower seed and bundled upper witness usable to narrow a size search."""
    from . import figures

    lower = None
    if n in KNOWN_SORTING_SIZE:
        lower = KNOWN_SORTING_SIZE[n] - (1 if cls == "single-exception" else 0)
    witness = None
    if cls == "single-exception":
        for fig in figures.all_figures():
            if fig.cls == cls and fig.network.n == n and (witness is None or fig.network.size < witness.size):
                witness = fig.network
    return lower, witness


@dataclass
class TableCell:
    table: str
    quantity: str
    n: int
    value: str
    exact: bool
    seconds: float
    witness: LayeredNetwork | None = None
    lower_source: str = ATTESTED

    def row(self) -> dict:
        return {"table": self.table, "quantity": self.quantity, "n": self.n, "value": self.value,
                "exact": self.exact, "lower_source": self.lower_source, "seconds": round(self.seconds, 3)}


def _cell(table: str, quantity: str, res: SearchResult) -> TableCell:
    return TableCell(table, quantity, res.n, res.describe(), res.exact, sum(t.seconds for t in res.trace),
                     res.witness, res.lower_source)


def reproduce_tables(ns, tables=("depth", "size", "pareto"), budget: Budget | None = None,
                     cfg: SolverConfig | None = None, known_bounds: bool = False) -> list[TableCell]:
    """Optimal depth, size and non-dominated (size, depth) pairs for each n,
    single-exception and sorting.

    With ``known_bounds`` the single-exception size scan is seeded with
    ``S(n) - 1`` and capped by a bundled witness when one exists.
    """
    cells = []
    for table in tables:
        for n in ns:
            for cls, tag in (("single-exception", "1"), ("sorting", "")):
                if table == "depth":
                    cells.append(_cell(table, f"D{tag}", optimal_depth(n, cls, budget=budget, cfg=cfg)))
                elif table == "size":
                    lower, witness = None, None
                    if known_bounds and cls == "single-exception":
                        lower, witness = known_size_bounds(n, cls)
                    res = optimal_size(n, cls, budget=budget, cfg=cfg, lower_seed=lower, upper_witness=witness)
                    cells.append(_cell(table, f"S{tag}", res))
                elif table == "pareto":
                    p = pareto_size_depth(n, cls, budget=budget, cfg=cfg)
                    value = " ".join(f"({s},{d})" for s, d in p.front) + ("" if p.complete else " incomplete")
                    witness = p.witnesses[p.front[0]] if p.front else None
                    cells.append(TableCell(table, f"(S,D){tag}", n, value.strip(), p.complete,
                                           sum(t.seconds for t in p.trace), witness))
                else:
                    raise SpecError(f"unknown table {table!r}")
    return cells


def render_cells(cells: list[TableCell], fmt: str = "markdown") -> str:
    rows = [c.row() for c in cells]
    cols = ["table", "quantity", "n", "value", "lower_source", "seconds"]
    if fmt == "csv":
        import csv
        import io

        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else cols, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    for r in rows:
        lines.append("| " + " | ".join(str(r[c]) for c in cols) + " |")
    return "\n".join(lines) + "\n"
