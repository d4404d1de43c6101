"""CNF construction: variable pool, clause emitters, DIMACS I/O.

Literals are DIMACS integers (``v`` or ``-v``).  Emitters accept scalars or
equal-length integer arrays; with arrays one call emits the clause pattern
once per element, grouped by clause shape.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

SAT, UNSAT, UNKNOWN = "SAT", "UNSAT", "UNKNOWN"


class CnfError(ValueError):
    pass


class MalformedOutput(CnfError):
    """Solver output claimed SAT but did not carry a complete model."""


class VarPool:
    """Variable ids keyed by structured names.

    Small sets (comparator variables) are registered one key at a time with
    :meth:`var`.  Large state families are rectangular blocks allocated by
    :meth:`family`; ``to_index``/``to_key`` translate between the public key
    (e.g. ``(k, i, m)``) and the block index.  Ids follow allocation order.
    """

    def __init__(self):
        self.top = 0
        self._named: dict[tuple, int] = {}
        self._families: dict[str, tuple] = {}
        self._aux: list[tuple[str, int, int]] = []

    def var(self, key: tuple) -> int:
        vid = self._named.get(key)
        if vid is None:
            self.top += 1
            vid = self._named[key] = self.top
        return vid

    def family(self, name: str, shape: Sequence[int], to_index=None, to_key=None) -> np.ndarray:
        if name in self._families:
            raise CnfError(f"family {name!r} already allocated")
        shape = tuple(int(s) for s in shape)
        count = int(np.prod(shape))
        base = self.top + 1
        self.top += count
        self._families[name] = (base, shape, to_index, to_key)
        return np.arange(base, base + count, dtype=np.int64).reshape(shape)

    def family_ids(self, name: str) -> np.ndarray:
        base, shape, _, _ = self._families[name]
        return np.arange(base, base + int(np.prod(shape)), dtype=np.int64).reshape(shape)

    def family_count(self, name: str) -> int:
        return int(np.prod(self._families[name][1]))

    def has_family(self, name: str) -> bool:
        return name in self._families

    def id(self, name: str, *key: int) -> int:
        vid = self._named.get((name, *key))
        if vid is not None:
            return vid
        if name not in self._families:
            raise KeyError((name, *key))
        base, shape, to_index, _ = self._families[name]
        idx = to_index(*key) if to_index else key
        if len(idx) != len(shape) or not all(0 <= x < d for x, d in zip(idx, shape)):
            raise KeyError((name, *key))
        return base + int(np.ravel_multi_index(idx, shape))

    def aux(self, count: int, tag: str = "aux") -> np.ndarray:
        """Anonymous auxiliaries (ladder and counter encodings)."""
        base = self.top + 1
        self.top += count
        if count:
            self._aux.append((tag, base, count))
        return np.arange(base, base + count, dtype=np.int64)

    def keys(self) -> Iterator[tuple[str, int]]:
        """Every registered key as ``("name(a,b,...)", id)``."""
        for key, vid in self._named.items():
            yield f"{key[0]}({','.join(map(str, key[1:]))})", vid
        for name, (base, shape, _, to_key) in self._families.items():
            for flat, idx in enumerate(np.ndindex(*shape)):
                key = to_key(*idx) if to_key else idx
                yield f"{name}({','.join(map(str, key))})", base + flat
        for tag, base, count in self._aux:
            for x in range(count):
                yield f"{tag}#{base + x}", base + x

    def varmap(self) -> dict[str, int]:
        return dict(sorted(self.keys(), key=lambda kv: kv[1]))


class CnfFormula:
    """Clause list stored as CSR chunks of DIMACS literals."""

    def __init__(self, pool: VarPool | None = None):
        self.pool = pool if pool is not None else VarPool()
        self._chunks: list[tuple[np.ndarray, np.ndarray]] = []
        self._pending: list[list[int]] = []
        self._nclauses = 0
        self.meta: dict = {}

    @property
    def num_vars(self) -> int:
        return self.pool.top

    @property
    def num_clauses(self) -> int:
        return self._nclauses

    def add_clause(self, lits: Sequence[int]) -> None:
        lits = [int(x) for x in lits]
        for x in lits:
            if x == 0 or abs(x) > self.pool.top:
                raise CnfError(f"literal {x} outside 1..{self.pool.top}")
        self._pending.append(lits)
        self._nclauses += 1

    def add_rows(self, rows: np.ndarray) -> None:
        """Append clauses given as a 2-D array, one clause per row."""
        rows = np.asarray(rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[0] == 0:
            return
        self._flush()
        lens = np.full(rows.shape[0], rows.shape[1], dtype=np.int64)
        self._chunks.append((rows.reshape(-1).copy(), lens))
        self._nclauses += rows.shape[0]

    def _flush(self) -> None:
        if self._pending:
            lens = np.array([len(c) for c in self._pending], dtype=np.int64)
            flat = np.fromiter((x for c in self._pending for x in c), dtype=np.int64, count=int(lens.sum()))
            self._chunks.append((flat, lens))
            self._pending = []

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """All clauses as ``(flat literals, clause lengths)`` in emission order."""
        self._flush()
        if not self._chunks:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        if len(self._chunks) > 1:
            flat = np.concatenate([c[0] for c in self._chunks])
            lens = np.concatenate([c[1] for c in self._chunks])
            self._chunks = [(flat, lens)]
        return self._chunks[0]

    @property
    def clauses(self) -> list[list[int]]:
        flat, lens = self.csr()
        bounds = np.concatenate(([0], np.cumsum(lens))).tolist()
        vals = flat.tolist()
        return [vals[a:b] for a, b in zip(bounds[:-1], bounds[1:])]

    def __iter__(self):
        return iter(self.clauses)

    def __len__(self) -> int:
        return self._nclauses


def _lits(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=np.int64))


def _emit(f: CnfFormula, *columns) -> None:
    cols = np.broadcast_arrays(*[_lits(c) for c in columns])
    f.add_rows(np.stack(cols, axis=1))


def guarded_equiv(f: CnfFormula, g, a, rhs: Sequence) -> None:
    """Clauses for ``g -> (a <-> OR(rhs))`` with ``len(rhs)`` in {1, 2}."""
    if not 1 <= len(rhs) <= 2:
        raise CnfError("guarded_equiv needs one or two right-hand literals")
    g, a = _lits(g), _lits(a)
    if len(rhs) == 1:
        (b,) = rhs
        b = _lits(b)
        if g.size == a.size == b.size == 1:
            f.add_clause([-g[0], -a[0], b[0]])
            f.add_clause([-g[0], a[0], -b[0]])
            return
        _emit(f, -g, -a, b)
        _emit(f, -g, a, -b)
        return
    b, c = _lits(rhs[0]), _lits(rhs[1])
    if g.size == a.size == b.size == c.size == 1:
        f.add_clause([-g[0], -a[0], b[0], c[0]])
        f.add_clause([-g[0], a[0], -b[0]])
        f.add_clause([-g[0], a[0], -c[0]])
        return
    _emit(f, -g, -a, b, c)
    _emit(f, -g, a, -b)
    _emit(f, -g, a, -c)


def guarded_unit(f: CnfFormula, g, u) -> None:
    """Clause ``g -> u``."""
    g, u = _lits(g), _lits(u)
    if g.size == u.size == 1:
        f.add_clause([-g[0], u[0]])
    else:
        _emit(f, -g, u)


def unblocked_equiv(f: CnfFormula, guards: Sequence[int], a, b) -> None:
    """``(NOT OR(guards)) -> (a <-> b)``: the guard disjunction joins each
    side of the equivalence."""
    guards = [int(x) for x in guards]
    a, b = np.broadcast_arrays(_lits(a), _lits(b))
    gcols = [np.full(a.shape, x, dtype=np.int64) for x in guards]
    _emit(f, *gcols, -a, b)
    _emit(f, *gcols, a, -b)


def units(f: CnfFormula, lits) -> None:
    lits = _lits(lits)
    if lits.size:
        f.add_rows(lits.reshape(-1, 1))


def _pairs_amo(f: CnfFormula, xs: list[int]) -> None:
    k = len(xs)
    if k < 2:
        return
    a, b = np.triu_indices(k, 1)
    arr = np.asarray(xs, dtype=np.int64)
    f.add_rows(np.stack([-arr[a], -arr[b]], axis=1))


def _ladder_amo(f: CnfFormula, xs: list[int]) -> None:
    k = len(xs)
    if k < 2:
        return
    y = f.pool.aux(k - 1, "amo").tolist()
    f.add_clause([-xs[0], y[0]])
    for i in range(1, k - 1):
        f.add_clause([-xs[i], y[i]])
        f.add_clause([-y[i - 1], y[i]])
        f.add_clause([-xs[i], -y[i - 1]])
    f.add_clause([-xs[k - 1], -y[k - 2]])


def at_most_one(f: CnfFormula, xs: Sequence[int], method: str = "pairwise") -> None:
    xs = [int(x) for x in xs]
    if method == "pairwise":
        _pairs_amo(f, xs)
    elif method == "ladder":
        _ladder_amo(f, xs)
    else:
        raise CnfError(f"unknown at-most-one method {method!r}")


def exactly_one(f: CnfFormula, xs: Sequence[int], method: str = "pairwise") -> None:
    xs = [int(x) for x in xs]
    if not xs:
        raise CnfError("exactly_one over an empty set")
    at_most_one(f, xs, method)
    f.add_clause(xs)


def cardinality_at_most(f: CnfFormula, xs: Sequence[int], bound: int) -> None:
    """Sequential counter: at most ``bound`` of ``xs`` are true.

    Counter bit ``s[i, j]`` means at least ``j + 1`` of ``xs[0..i]`` are true.
    """
    xs = [int(x) for x in xs]
    if bound < 0:
        raise CnfError("cardinality bound must be non-negative")
    n = len(xs)
    if bound >= n:
        return
    if bound == 0:
        for x in xs:
            f.add_clause([-x])
        return
    s = f.pool.aux((n - 1) * bound, "card").reshape(n - 1, bound).tolist()
    f.add_clause([-xs[0], s[0][0]])
    for j in range(1, bound):
        f.add_clause([-s[0][j]])
    for i in range(1, n - 1):
        f.add_clause([-xs[i], s[i][0]])
        f.add_clause([-s[i - 1][0], s[i][0]])
        for j in range(1, bound):
            f.add_clause([-xs[i], -s[i - 1][j - 1], s[i][j]])
            f.add_clause([-s[i - 1][j], s[i][j]])
        f.add_clause([-xs[i], -s[i - 1][bound - 1]])
    f.add_clause([-xs[n - 1], -s[n - 2][bound - 1]])


_DIMACS_BLOCK = 200_000


def write_dimacs(f: CnfFormula, fh=None) -> str | None:
    """Serialise in emission order.  Returns the text unless ``fh`` is given."""
    flat, lens = f.csr()
    parts: list[str] = []
    write = fh.write if fh is not None else parts.append
    write(f"p cnf {f.num_vars} {len(lens)}\n")
    ends = np.cumsum(lens)
    starts = ends - lens
    for lo in range(0, len(lens), _DIMACS_BLOCK):
        hi = min(lo + _DIMACS_BLOCK, len(lens))
        a, b = int(starts[lo]), int(ends[hi - 1])
        cut = ends[lo:hi] - a
        toks = list(map(str, np.insert(flat[a:b], cut, 0).tolist()))
        for p in (cut + np.arange(hi - lo)).tolist():
            toks[p] = "0\n"
        write(" ".join(toks).replace("\n ", "\n"))
    if fh is None:
        return "".join(parts)
    return None


def read_dimacs(text: str) -> CnfFormula:
    """Parse DIMACS CNF text (comments and multi-line clauses allowed)."""
    num_vars = None
    declared = None
    clauses: list[list[int]] = []
    cur: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise CnfError(f"bad problem line {line!r}")
            num_vars, declared = int(parts[2]), int(parts[3])
            continue
        for tok in line.split():
            x = int(tok)
            if x == 0:
                clauses.append(cur)
                cur = []
            else:
                cur.append(x)
    if cur:
        clauses.append(cur)
    if num_vars is None:
        raise CnfError("missing problem line")
    if declared is not None and declared != len(clauses):
        raise CnfError(f"header declares {declared} clauses, found {len(clauses)}")
    f = CnfFormula()
    f.pool.top = num_vars
    for c in clauses:
        f.add_clause(c)
    return f


@dataclass
class SolverVerdict:
    status: str
    model: np.ndarray | None = None  # bool per var, index 0 unused
    diagnostics: str = ""

    def __post_init__(self):
        if (self.model is not None) != (self.status == SAT):
            raise CnfError("a model accompanies exactly the SAT verdicts")

    def value(self, lit: int) -> bool:
        v = bool(self.model[abs(lit)])
        return v if lit > 0 else not v

    def as_dict(self) -> dict[int, bool]:
        return {i: bool(x) for i, x in enumerate(self.model) if i}


_STATUS_RE = re.compile(r"^s\s+(SATISFIABLE|UNSATISFIABLE|UNKNOWN|INDETERMINATE)\s*$", re.M)


def parse_solver_output(text: str, num_vars: int | None = None) -> SolverVerdict:
    """SAT-competition output (``s`` / ``v`` lines) to a verdict.

    With ``num_vars`` the model must assign every variable; otherwise it must
    at least be 0-terminated.
    """
    m = _STATUS_RE.search(text)
    if not m or m.group(1) in ("UNKNOWN", "INDETERMINATE"):
        return SolverVerdict(UNKNOWN, diagnostics=text[-2000:])
    if m.group(1) == "UNSATISFIABLE":
        return SolverVerdict(UNSAT)
    lits: list[int] = []
    terminated = False
    for line in text.splitlines():
        if line.startswith("v"):
            for tok in line[1:].split():
                x = int(tok)
                if x == 0:
                    terminated = True
                else:
                    lits.append(x)
    if not terminated:
        raise MalformedOutput("SAT answer without a 0-terminated model")
    top = max((abs(x) for x in lits), default=0)
    if num_vars is not None:
        top = max(top, num_vars)
    model = np.zeros(top + 1, dtype=bool)
    seen = np.zeros(top + 1, dtype=bool)
    for x in lits:
        model[abs(x)] = x > 0
        seen[abs(x)] = True
    if num_vars is not None and not seen[1 : num_vars + 1].all():
        missing = int(np.flatnonzero(~seen[1 : num_vars + 1])[0]) + 1
        raise MalformedOutput(f"model does not assign variable {missing}")
    return SolverVerdict(SAT, model)


def write_varmap(pool: VarPool, fh) -> None:
    json.dump(pool.varmap(), fh, indent=0)
