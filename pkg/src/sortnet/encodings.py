"""CNF builders for fixed-size and fixed-depth comparator network problems.

Four encodings over per-vector state variables:

* ``sfwd`` - fixed size, forward: ``o(k, m)`` says vector ``m`` is reachable
  after comparator ``k``.
* ``sbck`` - fixed size, backward: ``q(k, m)`` says input ``m`` is left
  unsorted by comparators ``k+1..s``.
* ``dfwd`` / ``dbck`` - fixed depth; every layer is split into ``n - 1``
  sublayers, sublayer ``i`` holding the comparator whose smaller channel is
  ``i`` (if any), with state ``p(k, i, m)`` / ``r(k, i, m)``.

Boundary levels are ordinary variables pinned by unit clauses.  Variable
numbering: comparator variables, then state variables level-major, then
auxiliaries.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import cnf, kernels
from .cnf import CnfFormula
from .network import MAX_CHANNELS, VectorSet, _halver_violations, parse_eps

ENCODINGS = ("sfwd", "sbck", "dfwd", "dbck")
SIZE_ENCODINGS = ("sfwd", "sbck")
DEPTH_ENCODINGS = ("dfwd", "dbck")


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemSpec:
    """One decision instance: does a network of this class and bound exist?"""

    n: int
    cls: str
    shape: str  # "size" or "depth"
    bound: int
    encoding: str
    eps: Fraction | None = None
    size_cap: int | None = None
    cross_half_only: bool = False

    def __post_init__(self):
        if not (2 <= self.n <= MAX_CHANNELS):
            raise SpecError(f"n must be in 2..{MAX_CHANNELS}")
        if self.shape not in ("size", "depth"):
            raise SpecError(f"shape must be 'size' or 'depth', got {self.shape!r}")
        if self.bound < 0:
            raise SpecError("size/depth bound must be non-negative")
        if self.encoding not in ENCODINGS:
            raise SpecError(f"unknown encoding {self.encoding!r}")
        if (self.encoding in SIZE_ENCODINGS) != (self.shape == "size"):
            raise SpecError(f"{self.encoding} does not encode fixed-{self.shape} networks")
        if self.cls == "sorting":
            pass
        elif self.cls == "single-exception":
            if self.encoding not in ("sbck", "dbck"):
                raise SpecError("single-exception networks need a backward encoding (sbck or dbck)")
        elif self.cls == "halver":
            if self.encoding != "dfwd":
                raise SpecError("halvers are encoded with dfwd only")
            if self.n % 2:
                raise SpecError("halvers need an even channel count")
            object.__setattr__(self, "eps", parse_eps(0 if self.eps is None else self.eps))
        else:
            raise SpecError(f"unknown class {self.cls!r}")
        if self.cls != "halver" and self.eps is not None:
            raise SpecError("epsilon only applies to halvers")
        if self.cross_half_only and self.cls != "halver":
            raise SpecError("cross-half restriction only applies to halvers")
        if self.size_cap is not None:
            if self.shape != "depth":
                raise SpecError("size cap only applies to fixed-depth problems")
            if self.size_cap < 0:
                raise SpecError("size cap must be non-negative")

    def with_bound(self, bound: int) -> "ProblemSpec":
        return replace(self, bound=bound)

    def to_json(self) -> dict:
        out = {"n": self.n, "class": self.cls, "shape": self.shape, "bound": self.bound, "encoding": self.encoding}
        if self.eps is not None:
            out["eps"] = f"{self.eps.numerator}/{self.eps.denominator}"
        if self.size_cap is not None:
            out["size_cap"] = self.size_cap
        if self.cross_half_only:
            out["cross_half_only"] = True
        return out

    @classmethod
    def from_json(cls, d: dict) -> "ProblemSpec":
        return cls(
            n=int(d["n"]), cls=d["class"], shape=d["shape"], bound=int(d["bound"]), encoding=d["encoding"],
            eps=parse_eps(d["eps"]) if d.get("eps") is not None else None,
            size_cap=d.get("size_cap"), cross_half_only=bool(d.get("cross_half_only", False)),
        )


def comparator_pairs(n: int) -> list[tuple[int, int]]:
    return list(combinations(range(1, n + 1), 2))


def unsorted_mask(n: int) -> np.ndarray:
    m = np.arange(1 << n, dtype=np.int64)
    return m != kernels.sorted_values(n)


def sorting_invalid_set(n: int) -> VectorSet:
    return VectorSet(n, unsorted_mask(n))


def halver_invalid_set(n: int, eps) -> VectorSet:
    """Outputs an eps-halver must never produce."""
    if n % 2:
        raise SpecError("halvers need an even channel count")
    eps = parse_eps(eps)
    return VectorSet(n, _halver_violations(n, eps, np.arange(1 << n, dtype=np.int64)))


def _comparator_vars(f: CnfFormula, n: int, count: int) -> np.ndarray:
    pairs = comparator_pairs(n)
    g = np.empty((count, len(pairs)), dtype=np.int64)
    for k in range(count):
        for p, (i, j) in enumerate(pairs):
            g[k, p] = f.pool.var(("g", k + 1, i, j))
    f.meta["pairs"] = pairs
    f.meta["g"] = g
    return g


def valid_size_constraints(f: CnfFormula, n: int, s: int, method: str = "pairwise") -> np.ndarray:
    """One comparator per position; returns g ids with shape ``(s, C(n,2))``."""
    g = _comparator_vars(f, n, s)
    for k in range(s):
        cnf.exactly_one(f, g[k].tolist(), method)
    return g


def valid_depth_constraints(f: CnfFormula, n: int, d: int) -> np.ndarray:
    """Each channel used at most once per layer; empty layers allowed."""
    g = _comparator_vars(f, n, d)
    pairs = f.meta["pairs"]
    touching = [[p for p, (i, j) in enumerate(pairs) if c in (i, j)] for c in range(1, n + 1)]
    for k in range(d):
        for idx in touching:
            cnf.at_most_one(f, g[k, idx].tolist(), "pairwise")
    return g


def _swap_bits(n: int, i: int, j: int):
    m = np.arange(1 << n, dtype=np.int64)
    bi = (m >> (i - 1)) & 1
    bj = (m >> (j - 1)) & 1
    flip = (1 << (i - 1)) | (1 << (j - 1))
    return m, bi, bj, flip


def _forward_step(f: CnfFormula, n: int, i: int, j: int, guard: int, prev: np.ndarray, cur: np.ndarray) -> None:
    """``guard -> Fwd``: ``cur`` is the image of ``prev`` under comparator (i, j)."""
    m, bi, bj, flip = _swap_bits(n, i, j)
    two = (bi == 0) & (bj == 1)  # m has the swap preimage w = m ^ flip
    one = bi == bj
    none = (bi == 1) & (bj == 0)
    cnf.guarded_equiv(f, guard, cur[two], [prev[two], prev[m[two] ^ flip]])
    cnf.guarded_equiv(f, guard, cur[one], [prev[one]])
    cnf.guarded_unit(f, guard, -cur[none])


def _backward_step(f: CnfFormula, n: int, i: int, j: int, guard: int, prev: np.ndarray, cur: np.ndarray) -> None:
    """``guard -> Bck``: ``prev[m] <-> cur[c(m)]``."""
    m, bi, bj, flip = _swap_bits(n, i, j)
    w = np.where((bi == 1) & (bj == 0), m ^ flip, m)
    cnf.guarded_equiv(f, guard, prev, [cur[w]])


def forward_size_constraints(f: CnfFormula, n: int, s: int, g: np.ndarray) -> np.ndarray:
    o = f.pool.family("o", (s + 1, 1 << n))
    for k in range(1, s + 1):
        for p, (i, j) in enumerate(f.meta["pairs"]):
            _forward_step(f, n, i, j, int(g[k - 1, p]), o[k - 1], o[k])
    return o


def backward_size_constraints(f: CnfFormula, n: int, s: int, g: np.ndarray) -> np.ndarray:
    q = f.pool.family("q", (s + 1, 1 << n))
    for k in range(1, s + 1):
        for p, (i, j) in enumerate(f.meta["pairs"]):
            _backward_step(f, n, i, j, int(g[k - 1, p]), q[k - 1], q[k])
    return q


def _depth_levels(name: str, f: CnfFormula, n: int, d: int) -> np.ndarray:
    """State ids ``(d*(n-1) + 1, 2**n)``; row 0 is ``(k=0, i=n-1)``, row
    ``(k-1)*(n-1) + i`` is sublayer ``i`` of layer ``k``."""
    levels = d * (n - 1) + 1

    def to_index(k, i, m):
        if k == 0:
            return (0 if i == n - 1 else -1, m)
        if not (1 <= i <= n - 1):
            return (-1, m)
        return ((k - 1) * (n - 1) + i, m)

    def to_key(row, m):
        if row == 0:
            return (0, n - 1, m)
        k, i = divmod(row - 1, n - 1)
        return (k + 1, i + 1, m)

    return f.pool.family(name, (levels, 1 << n), to_index, to_key)


def _sublayers(f: CnfFormula, n: int, d: int, g: np.ndarray, state: np.ndarray, step) -> None:
    pairs = f.meta["pairs"]
    for k in range(1, d + 1):
        for i in range(1, n):
            row = (k - 1) * (n - 1) + i
            prev, cur = state[row - 1], state[row]
            hosted = [(p, b) for p, (a, b) in enumerate(pairs) if a == i]
            guards = [int(g[k - 1, p]) for p, _ in hosted]
            cnf.unblocked_equiv(f, guards, cur, prev)
            for (p, j), guard in zip(hosted, guards):
                step(f, n, i, j, guard, prev, cur)


def forward_depth_constraints(f: CnfFormula, n: int, d: int, g: np.ndarray) -> np.ndarray:
    p = _depth_levels("p", f, n, d)
    _sublayers(f, n, d, g, p, _forward_step)
    return p


def backward_depth_constraints(f: CnfFormula, n: int, d: int, g: np.ndarray) -> np.ndarray:
    r = _depth_levels("r", f, n, d)
    _sublayers(f, n, d, g, r, _backward_step)
    return r


def cross_half_restriction(f: CnfFormula, n: int, g: np.ndarray) -> None:
    """Forbid comparators with both channels in the same half."""
    if n % 2:
        raise SpecError("cross-half restriction needs an even channel count")
    half = n // 2
    same = [p for p, (i, j) in enumerate(f.meta["pairs"]) if (i <= half) == (j <= half)]
    cnf.units(f, -g[:, same].reshape(-1))


def size_cap_constraints(f: CnfFormula, g: np.ndarray, cap: int) -> None:
    cnf.cardinality_at_most(f, g.reshape(-1).tolist(), cap)


def _outputs_boundary(f: CnfFormula, n: int, last: np.ndarray) -> None:
    bad = unsorted_mask(n)
    cnf.units(f, np.where(bad, last, -last))


def _finish(f: CnfFormula, spec: ProblemSpec, family: str, levels: int) -> CnfFormula:
    f.meta["spec"] = spec
    f.meta["state_family"] = family
    f.meta["state_vars"] = f.pool.family_count(family)
    f.meta["state_vars_closed_form"] = levels * (1 << spec.n)
    f.meta["comparator_vars"] = int(f.meta["g"].size)
    return f


def build_sfwd(spec: ProblemSpec) -> CnfFormula:
    if spec.encoding != "sfwd" or spec.cls != "sorting":
        raise SpecError("build_sfwd handles sorting networks under sfwd")
    n, s = spec.n, spec.bound
    f = CnfFormula()
    g = valid_size_constraints(f, n, s)
    o = forward_size_constraints(f, n, s, g)
    cnf.units(f, o[0])
    cnf.units(f, -o[s][unsorted_mask(n)])
    return _finish(f, spec, "o", s + 1)


def _backward_size(spec: ProblemSpec) -> tuple[CnfFormula, np.ndarray]:
    n, s = spec.n, spec.bound
    f = CnfFormula()
    g = valid_size_constraints(f, n, s)
    q = backward_size_constraints(f, n, s, g)
    _outputs_boundary(f, n, q[s])
    return f, q


def build_sbck(spec: ProblemSpec) -> CnfFormula:
    if spec.encoding != "sbck" or spec.cls != "sorting":
        raise SpecError("build_sbck handles sorting networks under sbck")
    f, q = _backward_size(spec)
    cnf.units(f, -q[0])
    return _finish(f, spec, "q", spec.bound + 1)


def build_single_size(spec: ProblemSpec, method: str = "ladder") -> CnfFormula:
    if spec.encoding != "sbck" or spec.cls != "single-exception":
        raise SpecError("build_single_size handles single-exception networks under sbck")
    f, q = _backward_size(spec)
    cnf.exactly_one(f, q[0].tolist(), method)
    return _finish(f, spec, "q", spec.bound + 1)


def build_dfwd(spec: ProblemSpec) -> CnfFormula:
    if spec.encoding != "dfwd" or spec.cls not in ("sorting", "halver"):
        raise SpecError("build_dfwd handles sorting networks and halvers")
    n, d = spec.n, spec.bound
    f = CnfFormula()
    g = valid_depth_constraints(f, n, d)
    p = forward_depth_constraints(f, n, d, g)
    if spec.cls == "halver":
        invalid = halver_invalid_set(n, spec.eps).bits
        if spec.cross_half_only:
            cross_half_restriction(f, n, g)
    else:
        invalid = unsorted_mask(n)
    cnf.units(f, p[0])
    cnf.units(f, -p[-1][invalid])
    if spec.size_cap is not None:
        size_cap_constraints(f, g, spec.size_cap)
    return _finish(f, spec, "p", d * (n - 1) + 1)


def build_dbck(spec: ProblemSpec, method: str = "ladder") -> CnfFormula:
    """Fixed-depth backward encoding for sorting or single-exception networks."""
    if spec.encoding != "dbck" or spec.cls not in ("sorting", "single-exception"):
        raise SpecError("build_dbck handles sorting and single-exception networks")
    n, d = spec.n, spec.bound
    f = CnfFormula()
    g = valid_depth_constraints(f, n, d)
    r = backward_depth_constraints(f, n, d, g)
    _outputs_boundary(f, n, r[-1])
    if spec.cls == "sorting":
        cnf.units(f, -r[0])
    else:
        cnf.exactly_one(f, r[0].tolist(), method)
    if spec.size_cap is not None:
        size_cap_constraints(f, g, spec.size_cap)
    return _finish(f, spec, "r", d * (n - 1) + 1)


build_single_depth = build_dbck


def build(spec: ProblemSpec) -> CnfFormula:
    if spec.encoding == "sfwd":
        return build_sfwd(spec)
    if spec.encoding == "sbck":
        return build_single_size(spec) if spec.cls == "single-exception" else build_sbck(spec)
    if spec.encoding == "dfwd":
        return build_dfwd(spec)
    return build_dbck(spec)
