import io
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sortnet import cnf
from sortnet.cnf import (
    SAT,
    UNKNOWN,
    UNSAT,
    CnfError,
    CnfFormula,
    MalformedOutput,
    VarPool,
    parse_solver_output,
    read_dimacs,
    write_dimacs,
)

import oracles


def projection(f: CnfFormula, xs):
    """Assignments to ``xs`` that extend to a model of ``f`` (brute force)."""
    clauses = f.clauses
    others = [v for v in range(1, f.num_vars + 1) if v not in xs]
    out = set()
    for proj in product((False, True), repeat=len(xs)):
        fixed = dict(zip(xs, proj))
        for rest in product((False, True), repeat=len(others)):
            val = {**fixed, **dict(zip(others, rest))}
            if all(any(val[abs(l)] == (l > 0) for l in c) for c in clauses):
                out.add(proj)
                break
    return out


def fresh(k):
    f = CnfFormula()
    return f, [f.pool.var(("x", i)) for i in range(k)]


@pytest.mark.parametrize("k", range(1, 6))
@pytest.mark.parametrize("method", ["pairwise", "ladder"])
def test_at_most_one_projection(k, method):
    f, xs = fresh(k)
    cnf.at_most_one(f, xs, method)
    assert projection(f, xs) == {p for p in product((False, True), repeat=k) if sum(p) <= 1}


@pytest.mark.parametrize("k", range(1, 6))
@pytest.mark.parametrize("method", ["pairwise", "ladder"])
def test_exactly_one_projection(k, method):
    f, xs = fresh(k)
    cnf.exactly_one(f, xs, method)
    assert projection(f, xs) == {p for p in product((False, True), repeat=k) if sum(p) == 1}


def test_exactly_one_empty_is_error():
    with pytest.raises(CnfError):
        cnf.exactly_one(CnfFormula(), [])


def test_ladder_aux_count():
    f, xs = fresh(6)
    cnf.at_most_one(f, xs, "ladder")
    assert f.num_vars == 6 + 5


@pytest.mark.parametrize("k,bound", [(k, b) for k in range(1, 6) for b in range(0, k + 1)])
def test_cardinality_projection(k, bound):
    f, xs = fresh(k)
    cnf.cardinality_at_most(f, xs, bound)
    assert projection(f, xs) == {p for p in product((False, True), repeat=k) if sum(p) <= bound}


def test_cardinality_one_agrees_with_at_most_one():
    a, xs = fresh(4)
    cnf.cardinality_at_most(a, xs, 1)
    b, ys = fresh(4)
    cnf.at_most_one(b, ys)
    assert projection(a, xs) == projection(b, ys)


def test_guarded_equiv_projection():
    f, (g, a, b, c) = fresh(4)
    cnf.guarded_equiv(f, g, a, [b, c])
    want = {p for p in product((False, True), repeat=4) if not p[0] or p[1] == (p[2] or p[3])}
    assert projection(f, [g, a, b, c]) == want


def test_unblocked_equiv_projection():
    f, (g1, g2, a, b) = fresh(4)
    cnf.unblocked_equiv(f, [g1, g2], a, b)
    want = {p for p in product((False, True), repeat=4) if p[0] or p[1] or p[2] == p[3]}
    assert projection(f, [g1, g2, a, b]) == want


def test_dimacs_exact_text():
    f, (a, b) = fresh(2)
    f.add_clause([a, -b])
    assert write_dimacs(f) == "p cnf 2 1\n1 -2 0\n"


def test_dimacs_rejects_bad_literals():
    f, _ = fresh(2)
    with pytest.raises(CnfError):
        f.add_clause([3])
    with pytest.raises(CnfError):
        f.add_clause([0])


clause_lists = st.integers(1, 8).flatmap(
    lambda nv: st.tuples(
        st.just(nv),
        st.lists(st.lists(st.integers(1, nv).flatmap(lambda v: st.sampled_from([v, -v])), min_size=1, max_size=4),
                 max_size=20),
    )
)


@settings(max_examples=150, deadline=None)
@given(clause_lists)
def test_dimacs_round_trip(data):
    nv, clauses = data
    f = CnfFormula()
    f.pool.aux(nv)
    for c in clauses:
        f.add_clause(c)
    text = write_dimacs(f)
    back = read_dimacs(text)
    assert back.num_vars == nv and back.clauses == [list(c) for c in clauses]
    buf = io.StringIO()
    write_dimacs(back, buf)
    assert buf.getvalue() == text


def test_mixed_chunks_keep_emission_order():
    f, xs = fresh(3)
    f.add_clause([xs[0]])
    f.add_rows(np.array([[1, 2], [2, 3]]))
    f.add_clause([-3])
    assert f.clauses == [[1], [1, 2], [2, 3], [-3]]


def test_read_dimacs_header_mismatch():
    with pytest.raises(CnfError):
        read_dimacs("p cnf 2 2\n1 0\n")
    with pytest.raises(CnfError):
        read_dimacs("1 2 0\n")


def test_parse_solver_output():
    v = parse_solver_output("c hi\ns SATISFIABLE\nv 1 -2\nv 3 0\n", 3)
    assert v.status == SAT and v.value(1) and not v.value(2) and v.value(3) and v.value(-2)
    assert parse_solver_output("s UNSATISFIABLE\n").status == UNSAT
    assert parse_solver_output("s UNKNOWN\n").status == UNKNOWN
    assert parse_solver_output("segfault").status == UNKNOWN
    with pytest.raises(MalformedOutput):
        parse_solver_output("s SATISFIABLE\nv 1 -2\n", 2)
    with pytest.raises(MalformedOutput):
        parse_solver_output("s SATISFIABLE\nv 1 0\n", 2)


def test_varpool_families_and_keys():
    pool = VarPool()
    a = pool.var(("g", 1, 1, 2))
    block = pool.family("o", (2, 4))
    assert a == 1 and block[0, 0] == 2 and block[1, 3] == 9
    assert pool.id("o", 1, 3) == 9 and pool.id("g", 1, 1, 2) == 1
    with pytest.raises(KeyError):
        pool.id("o", 2, 0)
    vm = pool.varmap()
    assert vm["g(1,1,2)"] == 1 and vm["o(1,3)"] == 9
    assert sorted(vm.values()) == list(range(1, 10))


def test_brute_helper_sanity():
    assert oracles.brute_sat(1, [[1]])
    assert not oracles.brute_sat(1, [[1], [-1]])


def solver_projection(f: CnfFormula, xs):
    """Same as ``projection`` but decides each extension with the embedded solver."""
    from sortnet import cdcl

    flat, lens = f.csr()
    out = set()
    for proj in product((False, True), repeat=len(xs)):
        units = np.array([x if v else -x for x, v in zip(xs, proj)], dtype=np.int64)
        status, _ = cdcl.solve_csr(f.num_vars, np.concatenate([flat, units]),
                                   np.concatenate([lens, np.ones(len(units), dtype=np.int64)]))
        if status == "SAT":
            out.add(proj)
    return out


@pytest.mark.parametrize("k", [8, 12])
def test_one_hot_methods_agree_up_to_twelve(k):
    pair, xs = fresh(k)
    cnf.exactly_one(pair, xs, "pairwise")
    lad, ys = fresh(k)
    cnf.exactly_one(lad, ys, "ladder")
    card, zs = fresh(k)
    cnf.cardinality_at_most(card, zs, 1)
    amo, ws = fresh(k)
    cnf.at_most_one(amo, ws)
    want_eo = {p for p in product((False, True), repeat=k) if sum(p) == 1}
    assert solver_projection(pair, xs) == solver_projection(lad, ys) == want_eo
    assert solver_projection(card, zs) == solver_projection(amo, ws)


def test_small_clause_counts():
    f, xs = fresh(5)
    cnf.at_most_one(f, xs)
    assert f.num_clauses == 10
    f, _ = fresh(0)
    cnf.at_most_one(f, [])
    assert f.num_clauses == 0
    f, xs = fresh(2)
    cnf.at_most_one(f, xs)
    assert f.num_clauses == 1


def test_empty_formula_dimacs():
    f, _ = fresh(3)
    assert write_dimacs(f) == "p cnf 3 0\n"
