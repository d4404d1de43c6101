"""Comparator networks over binary vectors and the brute-force certifier.

A binary vector on ``n`` channels is stored as an integer ``m``; bit ``b``
(0-based) carries the value of channel ``b + 1``, so channel 1 is the least
significant bit.  A comparator ``(i, j)`` with ``i < j`` routes the minimum
to channel ``i``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import kernels

MAX_CHANNELS = 24


class NetworkError(ValueError):
    """Invalid comparator, network, or vector argument."""


class Comparator(NamedTuple):
    i: int
    j: int

    def check(self, n: int) -> None:
        if not (1 <= self.i < self.j <= n):
            raise NetworkError(f"comparator {tuple(self)} invalid for n={n}")


def _check_vector(m: int, n: int) -> None:
    if not (0 <= m < (1 << n)):
        raise NetworkError(f"vector {m} out of range for n={n}")


@dataclass(frozen=True)
class LayeredNetwork:
    """A network as an ordered list of layers of channel-disjoint comparators.

    Sequential (size-oriented) networks use one comparator per layer.
    """

    n: int
    layers: tuple[tuple[Comparator, ...], ...] = ()

    def __post_init__(self):
        if not (1 <= self.n <= MAX_CHANNELS):
            raise NetworkError(f"channel count {self.n} outside 1..{MAX_CHANNELS}")
        layers = tuple(tuple(Comparator(*c) for c in layer) for layer in self.layers)
        for k, layer in enumerate(layers, 1):
            used = set()
            for c in layer:
                c.check(self.n)
                if c.i in used or c.j in used:
                    raise NetworkError(f"layer {k} uses a channel twice")
                used.update(c)
        object.__setattr__(self, "layers", layers)

    @classmethod
    def sequential(cls, n: int, comparators: Iterable[Sequence[int]]) -> "LayeredNetwork":
        return cls(n, tuple((Comparator(*c),) for c in comparators))

    @property
    def comparators(self) -> list[Comparator]:
        return [c for layer in self.layers for c in layer]

    @property
    def size(self) -> int:
        return sum(len(layer) for layer in self.layers)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def compact(self) -> "LayeredNetwork":
        """Greedy re-layering: each comparator moves to the earliest layer
        after the last one touching either of its channels."""
        last = [0] * (self.n + 1)
        layers: list[list[Comparator]] = []
        for c in self.comparators:
            k = max(last[c.i], last[c.j])
            if k == len(layers):
                layers.append([])
            layers[k].append(c)
            last[c.i] = last[c.j] = k + 1
        return LayeredNetwork(self.n, tuple(tuple(sorted(layer)) for layer in layers))

    def to_json(self) -> dict:
        return {"n": self.n, "layers": [[[c.i, c.j] for c in layer] for layer in self.layers]}

    @classmethod
    def from_json(cls, data: dict) -> "LayeredNetwork":
        try:
            return cls(int(data["n"]), tuple(tuple((int(a), int(b)) for a, b in layer) for layer in data["layers"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, NetworkError):
                raise
            raise NetworkError(f"malformed network JSON: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def load(cls, path) -> "LayeredNetwork":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def _bit_arrays(self):
        comps = self.comparators
        lo = np.array([c.i - 1 for c in comps], dtype=np.int64)
        hi = np.array([c.j - 1 for c in comps], dtype=np.int64)
        return lo, hi


def apply_comparator(m: int, c: Sequence[int], n: int) -> int:
    c = Comparator(*c)
    c.check(n)
    _check_vector(m, n)
    a, b = c.i - 1, c.j - 1
    if (m >> a) & 1 and not (m >> b) & 1:
        return m ^ ((1 << a) | (1 << b))
    return m


def sorted_value(m: int, n: int) -> int:
    _check_vector(m, n)
    p = bin(m).count("1")
    return ((1 << n) - 1) ^ ((1 << (n - p)) - 1)


def evaluate(net: LayeredNetwork, m: int) -> int:
    _check_vector(m, net.n)
    for c in net.comparators:
        a, b = c.i - 1, c.j - 1
        if (m >> a) & 1 and not (m >> b) & 1:
            m ^= (1 << a) | (1 << b)
    return m


def evaluate_all(net: LayeredNetwork) -> np.ndarray:
    """Outputs for all ``2**n`` inputs, indexed by input."""
    lo, hi = net._bit_arrays()
    return kernels.eval_all(net.n, lo, hi)


class VectorSet:
    """Subset of ``[0, 2**n)`` held as a boolean occupancy map."""

    __slots__ = ("n", "bits")

    def __init__(self, n: int, bits=None):
        if not (1 <= n <= MAX_CHANNELS):
            raise NetworkError(f"channel count {n} outside 1..{MAX_CHANNELS}")
        self.n = n
        if bits is None:
            bits = np.zeros(1 << n, dtype=bool)
        bits = np.asarray(bits, dtype=bool)
        if bits.shape != (1 << n,):
            raise NetworkError("occupancy map has wrong length")
        bits.setflags(write=False)
        self.bits = bits

    @classmethod
    def from_members(cls, n: int, members: Iterable[int]) -> "VectorSet":
        bits = np.zeros(1 << n, dtype=bool)
        idx = np.fromiter(members, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= (1 << n)):
            raise NetworkError("member out of range")
        bits[idx] = True
        return cls(n, bits)

    def members(self) -> list[int]:
        return np.flatnonzero(self.bits).tolist()

    def __len__(self) -> int:
        return int(self.bits.sum())

    def __contains__(self, m: int) -> bool:
        return 0 <= m < self.bits.size and bool(self.bits[m])

    def __iter__(self):
        return iter(self.members())

    def __eq__(self, other) -> bool:
        if isinstance(other, VectorSet):
            return self.n == other.n and bool(np.array_equal(self.bits, other.bits))
        if isinstance(other, (set, frozenset)):
            return set(self.members()) == other
        return NotImplemented

    def __repr__(self) -> str:
        mem = self.members()
        shown = mem if len(mem) <= 16 else mem[:16] + ["..."]
        return f"VectorSet(n={self.n}, {shown})"


def outputs_set(net: LayeredNetwork) -> VectorSet:
    bits = np.zeros(1 << net.n, dtype=bool)
    bits[evaluate_all(net)] = True
    return VectorSet(net.n, bits)


def notsorted_set(net: LayeredNetwork) -> VectorSet:
    return VectorSet(net.n, evaluate_all(net) != kernels.sorted_values(net.n))


@dataclass(frozen=True)
class CertificationRecord:
    cls: str
    verdict: bool
    unsorted_count: int
    exception: int | None = None
    violation: tuple[int, int] | None = None
    eps: Fraction | None = None

    def to_json(self) -> dict:
        out = {"class": self.cls, "verdict": self.verdict, "unsorted_count": self.unsorted_count}
        if self.eps is not None:
            out["eps"] = f"{self.eps.numerator}/{self.eps.denominator}"
        if self.exception is not None:
            out["exception"] = self.exception
        if self.violation is not None:
            out["violation"] = {"input": self.violation[0], "k": self.violation[1]}
        return out


CLASSES = ("sorting", "single-exception", "halver")


def parse_eps(text) -> Fraction:
    """Exact rational from ``"num/den"`` or an integer string; decimals rejected."""
    if isinstance(text, Fraction):
        eps = text
    elif isinstance(text, int):
        eps = Fraction(text)
    else:
        s = str(text).strip()
        if "." in s or "e" in s.lower():
            raise NetworkError(f"epsilon must be an exact rational like 1/4, got {text!r}")
        try:
            eps = Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise NetworkError(f"bad epsilon {text!r}") from exc
    if eps < 0:
        raise NetworkError("epsilon must be non-negative")
    return eps


def _halver_violations(n: int, eps: Fraction, vectors: np.ndarray) -> np.ndarray:
    """Mask of vectors breaking the eps-halver bound as network outputs.

    A vector with p <= n/2 ones may hold at most floor(eps*p) of them in
    channels 1..n/2; one with z <= n/2 zeros may hold at most floor(eps*z)
    of them in channels n/2+1..n.
    """
    half = n // 2
    low_mask = (1 << half) - 1
    p = kernels.popcount(vectors)
    z = n - p
    ones_low = kernels.popcount(vectors & low_mask)
    zeros_high = half - kernels.popcount(vectors >> half)
    num, den = eps.numerator, eps.denominator
    bad_ones = (p <= half) & (ones_low > (num * p) // den)
    bad_zeros = (z <= half) & (zeros_high > (num * z) // den)
    return bad_ones | bad_zeros


def certify(net: LayeredNetwork, cls: str, eps=None) -> CertificationRecord:
    """Exhaustive check of ``net`` against a network class over all binary inputs."""
    if cls not in CLASSES:
        raise NetworkError(f"unknown class {cls!r}")
    n = net.n
    outs = evaluate_all(net)
    unsorted = np.flatnonzero(outs != kernels.sorted_values(n))
    count = int(unsorted.size)
    if cls == "sorting":
        return CertificationRecord(cls, count == 0, count)
    if cls == "single-exception":
        exc = int(unsorted[0]) if count == 1 else None
        return CertificationRecord(cls, count == 1, count, exception=exc)
    if n % 2:
        raise NetworkError("halver certification needs an even channel count")
    eps = parse_eps(0 if eps is None else eps)
    bad = np.flatnonzero(_halver_violations(n, eps, outs))
    violation = None
    if bad.size:
        m = int(bad[0])
        p = bin(m).count("1")
        violation = (m, p if p <= n // 2 else n - p)
    return CertificationRecord(cls, bad.size == 0, count, violation=violation, eps=eps)


def render_ascii(net: LayeredNetwork) -> str:
    """Channel lines top (channel 1) to bottom, one column per comparator.

    Comparator endpoints are ``o``, crossed channels ``|``; layers are
    separated by a blank column of wire.
    """
    n = net.n
    rows = [[] for _ in range(n)]

    def push(col):
        for r in range(n):
            rows[r].append(col[r])

    push(["-"] * n)
    for layer in net.layers:
        # pack comparators of one layer into as few columns as possible
        columns: list[list[Comparator]] = []
        for c in sorted(layer):
            for col in columns:
                if all(c.j + 1 < d.i or c.i > d.j + 1 for d in col):
                    col.append(c)
                    break
            else:
                columns.append([c])
        for col in columns:
            cells = ["-"] * n
            for c in col:
                cells[c.i - 1] = "o"
                cells[c.j - 1] = "o"
                for r in range(c.i, c.j - 1):
                    cells[r] = "|"
            push(cells)
        push(["-"] * n)
        push([" "] * n)
    return "\n".join("".join(r).rstrip() for r in rows) + "\n"


def parse_ascii(text: str) -> LayeredNetwork:
    """Inverse of :func:`render_ascii`."""
    rows = text.rstrip("\n").split("\n")
    n = len(rows)
    width = max(len(r) for r in rows)
    rows = [r.ljust(width) for r in rows]
    layers: list[tuple[Comparator, ...]] = []
    current: list[Comparator] | None = None
    for x in range(1, width):
        col = [r[x] for r in rows]
        if all(ch == " " for ch in col):
            if current is not None:
                layers.append(tuple(current))
            current = None
            continue
        if current is None:
            current = []
        ends = [r for r in range(n) if col[r] == "o"]
        if len(ends) % 2:
            raise NetworkError(f"dangling comparator mark in column {x}")
        current.extend(Comparator(a + 1, b + 1) for a, b in zip(ends[::2], ends[1::2]))
    if current is not None:
        layers.append(tuple(current))
    return LayeredNetwork(n, tuple(layers))
