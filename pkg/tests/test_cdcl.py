import os
import subprocess
import sys

import numpy as np
from hypothesis import given, settings, strategies as st

from sortnet import cdcl

import oracles


def run(nv, clauses, **kw):
    lens = np.array([len(c) for c in clauses], dtype=np.int64)
    flat = np.array([x for c in clauses for x in c], dtype=np.int64)
    return cdcl.solve_csr(nv, flat, lens, **kw)


random_cnf = st.integers(1, 10).flatmap(
    lambda nv: st.tuples(
        st.just(nv),
        st.lists(st.lists(st.integers(1, nv).flatmap(lambda v: st.sampled_from([v, -v])), min_size=1, max_size=4),
                 min_size=1, max_size=45),
    )
)


@settings(max_examples=400, deadline=None)
@given(random_cnf)
def test_agrees_with_truth_table(data):
    nv, clauses = data
    status, model = run(nv, clauses)
    assert (status == "SAT") == oracles.brute_sat(nv, clauses)
    if status == "SAT":
        assert oracles.check_model(model, clauses)


def test_trivial_cases():
    assert run(1, [[1], [-1]])[0] == "UNSAT"
    assert run(1, [[1, -1]])[0] == "SAT"
    assert run(3, [])[0] == "SAT"
    assert run(2, [[1, 2], [], [2]])[0] == "UNSAT"


def pigeonhole(holes):
    pig = holes + 1
    var = lambda p, h: p * holes + h + 1
    clauses = [[var(p, h) for h in range(holes)] for p in range(pig)]
    for h in range(holes):
        for a in range(pig):
            for b in range(a + 1, pig):
                clauses.append([-var(a, h), -var(b, h)])
    return pig * holes, clauses


def test_pigeonhole_unsat_exercises_learning():
    nv, clauses = pigeonhole(6)
    assert run(nv, clauses)[0] == "UNSAT"


def test_time_limit_yields_unknown():
    nv, clauses = pigeonhole(11)
    assert run(nv, clauses, time_limit=0.2, chunk=200)[0] == "UNKNOWN"


def test_pure_python_fallback_selected_by_env():
    code = (
        "import numpy as np\n"
        "from sortnet import _accel, cdcl\n"
        "assert not _accel.USE_NUMBA\n"
        "flat = np.array([1, 2, -1, 2, 1, -2, -1, -2]); lens = np.array([2, 2, 2, 2])\n"
        "print(cdcl.solve_csr(2, flat, lens)[0])\n"
        "print(cdcl.solve_csr(2, flat[:6], lens[:3])[0])\n"
    )
    env = dict(os.environ, SORTNET_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, timeout=300)
    assert out.returncode == 0, out.stderr
    assert out.stdout.split() == ["UNSAT", "SAT"]
