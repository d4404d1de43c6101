from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from sortnet import cdcl
from sortnet.cnf import CnfFormula, units
from sortnet.encodings import (
    ProblemSpec,
    SpecError,
    build,
    build_dbck,
    build_dfwd,
    build_sfwd,
    build_single_size,
    comparator_pairs,
    cross_half_restriction,
    halver_invalid_set,
    sorting_invalid_set,
    backward_size_constraints,
    unsorted_mask,
    valid_depth_constraints,
    valid_size_constraints,
)
from sortnet.network import LayeredNetwork, notsorted_set, outputs_set
from sortnet.solver import SolverConfig, decode_network, solve

import oracles

EMBEDDED = SolverConfig("embedded")


def solve_with(f, units=()):
    """Embedded solve of ``f`` plus extra unit literals; returns (status, model)."""
    flat, lens = f.csr()
    extra = np.asarray(list(units), dtype=np.int64)
    flat = np.concatenate([flat, extra])
    lens = np.concatenate([lens, np.ones(len(extra), dtype=np.int64)])
    return cdcl.solve_csr(f.num_vars, flat, lens)


def fix_sequence(f, seq):
    """Units selecting comparator ``seq[k]`` at position/layer ``k``."""
    g, pairs = f.meta["g"], f.meta["pairs"]
    lits = []
    for k in range(g.shape[0]):
        chosen = seq[k] if k < len(seq) else ()
        chosen = {chosen} if chosen and isinstance(chosen[0], int) else set(chosen)
        for p, pair in enumerate(pairs):
            lits.append(int(g[k, p]) if pair in chosen else -int(g[k, p]))
    return lits


def status(spec):
    return solve(build(spec), EMBEDDED).status


# --- target predicates -------------------------------------------------------

def _oracle_halver_invalid(n, eps):
    half = n // 2
    bad = set()
    for bits in oracles.all_inputs(n):
        p, z = sum(bits), n - sum(bits)
        if (p <= half and sum(bits[:half]) > eps * p) or (z <= half and half - sum(bits[half:]) > eps * z):
            bad.add(oracles.to_int(bits))
    return bad


def test_halver_invalid_small():
    assert halver_invalid_set(2, 0) == {1}
    assert len(halver_invalid_set(4, 0)) == 9


@pytest.mark.parametrize("n", [2, 4, 6, 8])
@pytest.mark.parametrize("eps", [Fraction(0), Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(1)])
def test_halver_invalid_matches_definition(n, eps):
    invalid = halver_invalid_set(n, eps)
    assert invalid == _oracle_halver_invalid(n, eps)
    assert not any(m in invalid for m in ((1 << n) - (1 << (n - p)) for p in range(n + 1)))


def test_sorting_invalid_set():
    assert sorting_invalid_set(3) == {m for m in range(8) if not oracles.is_sorted(
        tuple((m >> k) & 1 for k in range(3)))}


def test_halver_odd_channels_rejected():
    with pytest.raises(SpecError):
        halver_invalid_set(5, 0)
    with pytest.raises(SpecError):
        ProblemSpec(5, "halver", "depth", 2, "dfwd", eps="1/4")


# --- spec validation --------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    dict(n=4, cls="sorting", shape="size", bound=3, encoding="dfwd"),
    dict(n=4, cls="sorting", shape="depth", bound=3, encoding="sbck"),
    dict(n=4, cls="single-exception", shape="size", bound=3, encoding="sfwd"),
    dict(n=4, cls="halver", shape="depth", bound=3, encoding="dbck"),
    dict(n=4, cls="sorting", shape="size", bound=3, encoding="sfwd", size_cap=2),
    dict(n=4, cls="sorting", shape="depth", bound=3, encoding="dfwd", cross_half_only=True),
    dict(n=4, cls="sorting", shape="depth", bound=-1, encoding="dfwd"),
    dict(n=1, cls="sorting", shape="depth", bound=1, encoding="dfwd"),
])
def test_illegal_specs(kwargs):
    with pytest.raises(SpecError):
        ProblemSpec(**kwargs)


def test_spec_json_round_trip():
    spec = ProblemSpec(12, "halver", "depth", 4, "dfwd", eps="1/4", size_cap=17, cross_half_only=True)
    assert ProblemSpec.from_json(spec.to_json()) == spec


# --- structure ---------------------------------------------------------------

def test_valid_size_small_counts():
    f = build_sfwd(ProblemSpec(3, "sorting", "size", 1, "sfwd"))
    assert f.meta["comparator_vars"] == 3
    # pairwise one-hot over 3 comparators: 3 exclusions + 1 at-least-one
    comparator_only = [c for c in f.clauses if all(abs(x) <= 3 for x in c)]
    assert len(comparator_only) == 4


@pytest.mark.parametrize("enc,shape", [("sfwd", "size"), ("sbck", "size"), ("dfwd", "depth"), ("dbck", "depth")])
@pytest.mark.parametrize("n,bound", [(2, 0), (3, 2), (4, 3), (5, 4), (7, 16)])
def test_state_variable_closed_forms(enc, shape, n, bound):
    f = build(ProblemSpec(n, "sorting", shape, bound, enc))
    levels = bound + 1 if shape == "size" else bound * (n - 1) + 1
    assert f.meta["state_vars"] == f.meta["state_vars_closed_form"] == levels * 2 ** n
    assert f.meta["comparator_vars"] == bound * n * (n - 1) // 2


def test_variable_numbering_comparators_first():
    f = build(ProblemSpec(4, "sorting", "size", 3, "sfwd"))
    g = f.meta["g"]
    assert g.min() == 1 and g.max() == g.size
    assert f.pool.id("o", 0, 0) == g.size + 1


@pytest.mark.parametrize("n,free", [(4, 4), (18, 81)])
def test_cross_half_counts(n, free):
    f = CnfFormula()
    g = valid_depth_constraints(f, n, 4)
    cross_half_restriction(f, n, g)
    banned = {-c[0] for c in f.clauses if len(c) == 1}
    for k in range(4):
        assert sum(int(x) not in banned for x in g[k]) == free
    if n == 4:
        pairs = f.meta["pairs"]
        assert {pairs[p] for p in range(len(pairs)) if int(g[0, p]) in banned} == {(1, 2), (3, 4)}


def test_halver_figures_use_cross_half_comparators():
    from sortnet import figures

    for name in ("halver_18",):
        net = figures.load(name).network
        half = net.n // 2
        assert all(c.i <= half < c.j for c in net.comparators)


# --- exhaustive semantics at small n --------------------------------------------

def test_forward_state_is_prefix_image():
    n, seq = 4, [(1, 2), (3, 4), (1, 3), (2, 4), (2, 3)]
    f = build_sfwd(ProblemSpec(n, "sorting", "size", len(seq), "sfwd"))
    st, model = solve_with(f, fix_sequence(f, seq))
    assert st == "SAT"
    o = f.pool.family_ids("o")
    for k in range(len(seq) + 1):
        image = outputs_set(LayeredNetwork.sequential(n, seq[:k]))
        assert set(np.flatnonzero(model[o[k]]).tolist()) == set(image.members())


@pytest.mark.parametrize("seq", list(oracles.sequences(3, 3)))
def test_backward_state_is_suffix_unsorted_set(seq):
    n, s = 3, len(seq)
    f = CnfFormula()
    g = valid_size_constraints(f, n, s)
    q = backward_size_constraints(f, n, s, g)
    units(f, np.where(unsorted_mask(n), q[s], -q[s]))
    st, model = solve_with(f, fix_sequence(f, seq))
    assert st == "SAT"
    for k in range(s + 1):
        suffix = LayeredNetwork.sequential(n, seq[k:])
        assert set(np.flatnonzero(model[q[k]]).tolist()) == set(notsorted_set(suffix).members())
    single = build_single_size(ProblemSpec(n, "single-exception", "size", s, "sbck"))
    st1, _ = solve_with(single, fix_sequence(single, seq))
    assert (st1 == "SAT") == oracles.single_exception(list(seq), n)


@pytest.mark.parametrize("s", range(0, 4))
def test_size_model_completeness_n3(s):
    for enc in ("sfwd", "sbck"):
        f = build(ProblemSpec(3, "sorting", "size", s, enc))
        for seq in oracles.sequences(3, s):
            st, _ = solve_with(f, fix_sequence(f, seq))
            assert (st == "SAT") == oracles.sorts(list(seq), 3), (enc, seq)
    assert (status(ProblemSpec(3, "sorting", "size", s, "sfwd")) == "SAT") == oracles.exists_sorting(3, s)


@pytest.mark.parametrize("d", range(0, 3))
def test_depth_model_completeness_n3(d):
    fs = {
        "dfwd": build_dfwd(ProblemSpec(3, "sorting", "depth", d, "dfwd")),
        "dbck": build_dbck(ProblemSpec(3, "sorting", "depth", d, "dbck")),
        "single": build_dbck(ProblemSpec(3, "single-exception", "depth", d, "dbck")),
    }
    for layers in product(oracles.layerings(3), repeat=d):
        seq = [c for layer in layers for c in layer]
        for name, f in fs.items():
            st, _ = solve_with(f, fix_sequence(f, list(layers)))
            want = oracles.single_exception(seq, 3) if name == "single" else oracles.sorts(seq, 3)
            assert (st == "SAT") == want, (name, layers)


@pytest.mark.parametrize("eps", [Fraction(0), Fraction(1, 4)])
def test_halver_depth_completeness_n4(eps):
    for d in (1, 2):
        f = build_dfwd(ProblemSpec(4, "halver", "depth", d, "dfwd", eps=eps))
        for layers in product(oracles.layerings(4), repeat=d):
            seq = [c for layer in layers for c in layer]
            st, _ = solve_with(f, fix_sequence(f, list(layers)))
            assert (st == "SAT") == oracles.is_halver(seq, 4, eps), layers


def test_perfect_halver_depths_n4():
    assert status(ProblemSpec(4, "halver", "depth", 1, "dfwd", eps=0)) == "UNSAT"
    assert status(ProblemSpec(4, "halver", "depth", 2, "dfwd", eps=0)) == "SAT"
    assert oracles.exists_depth(4, 2, lambda s: oracles.is_halver(s, 4, 0))
    assert not oracles.exists_depth(4, 1, lambda s: oracles.is_halver(s, 4, 0))


# --- examples ---------------------------------------------------------------

def test_two_channel_examples():
    for enc in ("sfwd", "sbck"):
        f = build(ProblemSpec(2, "sorting", "size", 1, enc))
        v = solve(f, EMBEDDED)
        assert v.status == "SAT" and decode_network(v, f).layers == (((1, 2),),)
        assert status(ProblemSpec(2, "sorting", "size", 0, enc)) == "UNSAT"
    assert status(ProblemSpec(2, "single-exception", "size", 0, "sbck")) == "SAT"
    assert status(ProblemSpec(2, "single-exception", "depth", 0, "dbck")) == "SAT"
    f = build(ProblemSpec(2, "sorting", "depth", 1, "dfwd"))
    v = solve(f, EMBEDDED)
    assert decode_network(v, f).layers == (((1, 2),),)


@pytest.mark.parametrize("spec,want", [
    (ProblemSpec(4, "sorting", "size", 4, "sfwd"), "UNSAT"),
    (ProblemSpec(4, "sorting", "size", 5, "sfwd"), "SAT"),
    (ProblemSpec(5, "sorting", "size", 8, "sbck"), "UNSAT"),
    (ProblemSpec(5, "single-exception", "size", 7, "sbck"), "UNSAT"),
    (ProblemSpec(5, "single-exception", "size", 8, "sbck"), "SAT"),
    (ProblemSpec(5, "single-exception", "depth", 3, "dbck"), "UNSAT"),
    (ProblemSpec(5, "single-exception", "depth", 4, "dbck"), "SAT"),
    (ProblemSpec(3, "single-exception", "depth", 2, "dbck"), "SAT"),
    (ProblemSpec(6, "sorting", "depth", 4, "dfwd"), "UNSAT"),
    (ProblemSpec(6, "sorting", "depth", 4, "dbck"), "UNSAT"),
    (ProblemSpec(6, "sorting", "depth", 5, "dfwd"), "SAT"),
    (ProblemSpec(5, "single-exception", "depth", 4, "dbck", size_cap=7), "UNSAT"),
    (ProblemSpec(5, "single-exception", "depth", 4, "dbck", size_cap=8), "SAT"),
    (ProblemSpec(4, "sorting", "depth", 3, "dfwd", size_cap=6), "SAT"),
])
def test_published_instances(spec, want):
    assert status(spec) == want


def test_large_cap_has_no_effect():
    base = ProblemSpec(4, "sorting", "depth", 2, "dfwd")
    capped = ProblemSpec(4, "sorting", "depth", 2, "dfwd", size_cap=4)
    assert status(base) == status(capped) == "UNSAT"


def test_fixtures_satisfy_their_encodings():
    from sortnet import figures

    for name in ("single_exception_4", "single_exception_5", "sorting_4"):
        fig = figures.load(name)
        net = fig.network
        f = build(ProblemSpec(net.n, fig.cls, "depth", net.depth, "dbck"))
        st, _ = solve_with(f, fix_sequence(f, [tuple(map(tuple, layer)) for layer in net.layers]))
        assert st == "SAT", name


def test_comparator_pairs_order():
    assert comparator_pairs(4) == [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]
