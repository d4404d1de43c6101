"""Embedded CDCL solver.

A compact conflict-driven solver for the hermetic test path: two watched
literals (intrusive linked watch lists over flat arrays), first-UIP learning
with local minimisation, VSIDS on a binary heap, phase saving, Luby restarts
and LBD-ranked clause deletion with compaction at restarts.

All state lives in numpy arrays so the search kernel compiles under numba;
with ``SORTNET_NO_NUMBA`` the same code runs as plain Python (slow, but
fine for the small formulas in unit tests).  The kernel returns at restart
boundaries so the Python driver can enforce wall-clock limits and grow the
clause arena.

Literal code: ``2*v`` for ``v``, ``2*v + 1`` for ``-v``.
"""

from __future__ import annotations

import time

import numpy as np

from ._accel import kernel

SAT_CODE, UNSAT_CODE, BUDGET_CODE, GROW_CODE = 10, 20, 0, 1

# istate slots
NCL, NLITS, QHEAD, TRAIL_N, DLEVEL, CONFLICTS, NLEARNT, MAX_LEARNT, LUBY_I, RESTART_LEFT, HEAP_N, DECISIONS = range(12)
ISTATE_LEN = 12
# fstate slots
VAR_INC, CLA_INC = 0, 1

RESTART_UNIT = 100
VAR_DECAY = 0.95
CLA_DECAY = 0.999


@kernel
def _luby(i):
    # i-th element (1-based) of 1 1 2 1 1 2 4 1 1 2 ...
    size = 1
    seq = 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    x = i - 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x = x % size
    return 1 << seq


@kernel
def _value(assign, lit):
    a = assign[lit >> 1]
    if a < 0:
        return -1
    return 1 if a == 1 - (lit & 1) else 0


@kernel
def _heap_up(heap, pos, act, i):
    v = heap[i]
    while i > 0:
        parent = (i - 1) >> 1
        if act[heap[parent]] >= act[v]:
            break
        heap[i] = heap[parent]
        pos[heap[i]] = i
        i = parent
    heap[i] = v
    pos[v] = i


@kernel
def _heap_down(heap, pos, act, i, n):
    v = heap[i]
    while True:
        child = 2 * i + 1
        if child >= n:
            break
        if child + 1 < n and act[heap[child + 1]] > act[heap[child]]:
            child += 1
        if act[heap[child]] <= act[v]:
            break
        heap[i] = heap[child]
        pos[heap[i]] = i
        i = child
    heap[i] = v
    pos[v] = i


@kernel
def _heap_insert(heap, pos, act, istate, v):
    if pos[v] >= 0:
        return
    n = istate[HEAP_N]
    heap[n] = v
    pos[v] = n
    istate[HEAP_N] = n + 1
    _heap_up(heap, pos, act, n)


@kernel
def _heap_pop(heap, pos, act, istate):
    n = istate[HEAP_N]
    v = heap[0]
    pos[v] = -1
    n -= 1
    istate[HEAP_N] = n
    if n > 0:
        heap[0] = heap[n]
        pos[heap[0]] = 0
        _heap_down(heap, pos, act, 0, n)
    return v


@kernel
def _bump_var(v, act, heap, pos, fstate):
    act[v] += fstate[VAR_INC]
    if act[v] > 1e100:
        for u in range(act.shape[0]):
            act[u] *= 1e-100
        fstate[VAR_INC] *= 1e-100
    if pos[v] >= 0:
        _heap_up(heap, pos, act, pos[v])


@kernel
def _enqueue(lit, rsn, assign, level, reason, trail, istate):
    v = lit >> 1
    assign[v] = 1 - (lit & 1)
    level[v] = istate[DLEVEL]
    reason[v] = rsn
    trail[istate[TRAIL_N]] = lit
    istate[TRAIL_N] += 1


@kernel
def _attach(c, cl_lits, cl_start, w_head, w_next):
    st = cl_start[c]
    a = cl_lits[st]
    b = cl_lits[st + 1]
    w_next[2 * c] = w_head[a]
    w_head[a] = 2 * c
    w_next[2 * c + 1] = w_head[b]
    w_head[b] = 2 * c + 1


@kernel
def _propagate(assign, level, reason, trail, istate, cl_lits, cl_start, cl_len, cl_del, w_head, w_next):
    while istate[QHEAD] < istate[TRAIL_N]:
        p = trail[istate[QHEAD]]
        istate[QHEAD] += 1
        false_lit = p ^ 1
        prev = -1
        e = w_head[false_lit]
        while e != -1:
            c = e >> 1
            slot = e & 1
            nxt = w_next[e]
            if cl_del[c]:
                if prev == -1:
                    w_head[false_lit] = nxt
                else:
                    w_next[prev] = nxt
                e = nxt
                continue
            st = cl_start[c]
            other = cl_lits[st + 1 - slot]
            if _value(assign, other) == 1:
                prev = e
                e = nxt
                continue
            moved = False
            for t in range(st + 2, st + cl_len[c]):
                lit = cl_lits[t]
                if _value(assign, lit) != 0:
                    cl_lits[st + slot] = lit
                    cl_lits[t] = false_lit
                    if prev == -1:
                        w_head[false_lit] = nxt
                    else:
                        w_next[prev] = nxt
                    w_next[e] = w_head[lit]
                    w_head[lit] = e
                    moved = True
                    break
            if moved:
                e = nxt
                continue
            if _value(assign, other) == 0:
                istate[QHEAD] = istate[TRAIL_N]
                return c
            _enqueue(other, c, assign, level, reason, trail, istate)
            prev = e
            e = nxt
    return -1


@kernel
def _cancel_until(lvl, assign, reason, trail, trail_lim, phase, heap, pos, act, istate):
    if istate[DLEVEL] <= lvl:
        return
    start = trail_lim[lvl + 1]
    for t in range(istate[TRAIL_N] - 1, start - 1, -1):
        v = trail[t] >> 1
        phase[v] = assign[v]
        assign[v] = -1
        reason[v] = -1
        _heap_insert(heap, pos, act, istate, v)
    istate[TRAIL_N] = start
    istate[QHEAD] = start
    istate[DLEVEL] = lvl


@kernel
def _compact(assign, level, reason, trail, istate, cl_lits, cl_start, cl_len, cl_learnt, cl_lbd, cl_act,
             cl_del, w_head, w_next):
    """Drop deleted and level-0-satisfied clauses, strip false literals and
    rebuild every watch list.  Must run at decision level 0 after a
    conflict-free propagation."""
    ncl = istate[NCL]
    wc = 0
    wl = 0
    nlearnt = 0
    for c in range(ncl):
        if cl_del[c]:
            continue
        st = cl_start[c]
        ln = cl_len[c]
        sat = False
        for t in range(st, st + ln):
            if _value(assign, cl_lits[t]) == 1:
                sat = True
                break
        if sat:
            continue
        new_start = wl
        for t in range(st, st + ln):
            lit = cl_lits[t]
            if _value(assign, lit) == -1:
                cl_lits[wl] = lit
                wl += 1
        k = wl - new_start
        if k == 0:
            return False
        if k == 1:
            wl = new_start
            _enqueue(cl_lits[new_start], -1, assign, level, reason, trail, istate)
            continue
        cl_start[wc] = new_start
        cl_len[wc] = k
        cl_learnt[wc] = cl_learnt[c]
        cl_lbd[wc] = cl_lbd[c]
        cl_act[wc] = cl_act[c]
        cl_del[wc] = 0
        if cl_learnt[c]:
            nlearnt += 1
        wc += 1
    istate[NCL] = wc
    istate[NLITS] = wl
    istate[NLEARNT] = nlearnt
    for t in range(istate[TRAIL_N]):
        reason[trail[t] >> 1] = -1
    w_head[:] = -1
    for c in range(wc):
        _attach(c, cl_lits, cl_start, w_head, w_next)
    return True


@kernel
def _reduce_db(istate, cl_learnt, cl_lbd, cl_act, cl_del):
    ncl = istate[NCL]
    idx = np.empty(istate[NLEARNT], dtype=np.int64)
    k = 0
    for c in range(ncl):
        if cl_learnt[c] and not cl_del[c] and cl_lbd[c] > 2:
            idx[k] = c
            k += 1
    if k == 0:
        return
    idx = idx[:k]
    # worst first: high LBD, then low activity
    keys = np.empty(k, dtype=np.float64)
    for t in range(k):
        c = idx[t]
        keys[t] = -(cl_lbd[c] * 1e6) + min(cl_act[c], 1e5)
    order = np.argsort(keys)
    for t in range(k // 2):
        cl_del[idx[order[t]]] = 1


@kernel
def load_clauses(flat, lens, nv, assign, level, reason, trail, istate, cl_lits, cl_start, cl_len, w_head,
                 w_next, mark):
    """Intern DIMACS clauses.  Returns False if the formula is trivially UNSAT."""
    pos = 0
    for c in range(lens.shape[0]):
        ln = lens[c]
        st = istate[NLITS]
        k = 0
        taut = False
        for t in range(pos, pos + ln):
            x = flat[t]
            lit = 2 * x if x > 0 else -2 * x + 1
            if mark[lit] == c + 1:
                continue
            if mark[lit ^ 1] == c + 1:
                taut = True
            mark[lit] = c + 1
            cl_lits[st + k] = lit
            k += 1
        pos += ln
        if taut:
            continue
        if k == 0:
            return False
        if k == 1:
            lit = cl_lits[st]
            val = _value(assign, lit)
            if val == 0:
                return False
            if val == -1:
                _enqueue(lit, -1, assign, level, reason, trail, istate)
            continue
        ci = istate[NCL]
        cl_start[ci] = st
        cl_len[ci] = k
        istate[NCL] = ci + 1
        istate[NLITS] = st + k
        _attach(ci, cl_lits, cl_start, w_head, w_next)
    return True


@kernel
def search(nv, budget, assign, level, reason, trail, trail_lim, phase, act, heap, pos, seen, stamp, out,
           istate, fstate, cl_lits, cl_start, cl_len, cl_learnt, cl_lbd, cl_act, cl_del, w_head, w_next):
    used = 0
    while True:
        confl = _propagate(assign, level, reason, trail, istate, cl_lits, cl_start, cl_len, cl_del, w_head, w_next)
        if confl >= 0:
            istate[CONFLICTS] += 1
            used += 1
            if istate[DLEVEL] == 0:
                return UNSAT_CODE
            if istate[NLITS] + nv + 2 > cl_lits.shape[0] or istate[NCL] + 1 > cl_start.shape[0]:
                _cancel_until(0, assign, reason, trail, trail_lim, phase, heap, pos, act, istate)
                return GROW_CODE
            # first-UIP analysis
            dl = istate[DLEVEL]
            out_n = 1
            path = 0
            p = -1
            idx = istate[TRAIL_N] - 1
            c = confl
            while True:
                if cl_learnt[c]:
                    cl_act[c] += fstate[CLA_INC]
                    if cl_act[c] > 1e20:
                        for u in range(istate[NCL]):
                            cl_act[u] *= 1e-20
                        fstate[CLA_INC] *= 1e-20
                st = cl_start[c]
                for t in range(st, st + cl_len[c]):
                    q = cl_lits[t]
                    v = q >> 1
                    if p != -1 and v == (p >> 1):
                        continue
                    if seen[v] == 0 and level[v] > 0:
                        _bump_var(v, act, heap, pos, fstate)
                        seen[v] = 1
                        if level[v] >= dl:
                            path += 1
                        else:
                            out[out_n] = q
                            out_n += 1
                while seen[trail[idx] >> 1] == 0:
                    idx -= 1
                p = trail[idx]
                idx -= 1
                seen[p >> 1] = 0
                path -= 1
                if path == 0:
                    break
                c = reason[p >> 1]
            out[0] = p ^ 1
            # local minimisation: mark literals implied by the rest, then compact
            for t in range(1, out_n):
                q = out[t]
                r = reason[q >> 1]
                if r < 0:
                    continue
                redundant = True
                st = cl_start[r]
                for u in range(st, st + cl_len[r]):
                    x = cl_lits[u] >> 1
                    if x != (q >> 1) and seen[x] == 0 and level[x] > 0:
                        redundant = False
                        break
                if redundant:
                    out[t] = -q - 1
            keep = 1
            for t in range(1, out_n):
                q = out[t]
                if q < 0:
                    q = -q - 1
                    seen[q >> 1] = 0
                else:
                    seen[q >> 1] = 0
                    out[keep] = q
                    keep += 1
            out_n = keep
            bt = 0
            if out_n > 1:
                best = 1
                for t in range(2, out_n):
                    if level[out[t] >> 1] > level[out[best] >> 1]:
                        best = t
                tmp = out[1]
                out[1] = out[best]
                out[best] = tmp
                bt = level[out[1] >> 1]
            _cancel_until(bt, assign, reason, trail, trail_lim, phase, heap, pos, act, istate)
            if out_n == 1:
                _enqueue(out[0], -1, assign, level, reason, trail, istate)
            else:
                ci = istate[NCL]
                st = istate[NLITS]
                lbd = 0
                for t in range(out_n):
                    cl_lits[st + t] = out[t]
                    lv = level[out[t] >> 1]
                    if stamp[lv] != istate[CONFLICTS]:
                        stamp[lv] = istate[CONFLICTS]
                        lbd += 1
                cl_start[ci] = st
                cl_len[ci] = out_n
                cl_learnt[ci] = 1
                cl_lbd[ci] = lbd
                cl_act[ci] = fstate[CLA_INC]
                cl_del[ci] = 0
                istate[NCL] = ci + 1
                istate[NLITS] = st + out_n
                istate[NLEARNT] += 1
                _attach(ci, cl_lits, cl_start, w_head, w_next)
                _enqueue(out[0], ci, assign, level, reason, trail, istate)
            fstate[VAR_INC] /= VAR_DECAY
            fstate[CLA_INC] /= CLA_DECAY
            istate[RESTART_LEFT] -= 1
        else:
            if istate[RESTART_LEFT] <= 0:
                _cancel_until(0, assign, reason, trail, trail_lim, phase, heap, pos, act, istate)
                istate[LUBY_I] += 1
                istate[RESTART_LEFT] = _luby(istate[LUBY_I]) * RESTART_UNIT
                if istate[NLEARNT] >= istate[MAX_LEARNT]:
                    _reduce_db(istate, cl_learnt, cl_lbd, cl_act, cl_del)
                    if not _compact(assign, level, reason, trail, istate, cl_lits, cl_start, cl_len, cl_learnt,
                                    cl_lbd, cl_act, cl_del, w_head, w_next):
                        return UNSAT_CODE
                    istate[MAX_LEARNT] = istate[MAX_LEARNT] * 11 // 10
                continue
            if used >= budget:
                _cancel_until(0, assign, reason, trail, trail_lim, phase, heap, pos, act, istate)
                return BUDGET_CODE
            v = -1
            while istate[HEAP_N] > 0:
                u = _heap_pop(heap, pos, act, istate)
                if assign[u] < 0:
                    v = u
                    break
            if v == -1:
                return SAT_CODE
            istate[DECISIONS] += 1
            istate[DLEVEL] += 1
            trail_lim[istate[DLEVEL]] = istate[TRAIL_N]
            lit = 2 * v + (0 if phase[v] == 1 else 1)
            _enqueue(lit, -1, assign, level, reason, trail, istate)


class _State:
    def __init__(self, nv: int, nclauses: int, nlits: int):
        self.nv = nv
        self.assign = np.full(nv + 1, -1, dtype=np.int8)
        self.assign[0] = 1  # var 0 unused; keep it out of the heap and decisions
        self.level = np.zeros(nv + 1, dtype=np.int64)
        self.reason = np.full(nv + 1, -1, dtype=np.int64)
        self.trail = np.zeros(nv + 1, dtype=np.int64)
        self.trail_lim = np.zeros(nv + 2, dtype=np.int64)
        self.phase = np.zeros(nv + 1, dtype=np.int8)
        self.act = np.zeros(nv + 1, dtype=np.float64)
        self.heap = np.zeros(nv + 1, dtype=np.int64)
        self.pos = np.full(nv + 1, -1, dtype=np.int64)
        self.seen = np.zeros(nv + 1, dtype=np.int8)
        self.stamp = np.full(nv + 2, -1, dtype=np.int64)
        self.out = np.zeros(nv + 1, dtype=np.int64)
        self.istate = np.zeros(ISTATE_LEN, dtype=np.int64)
        self.fstate = np.ones(2, dtype=np.float64)
        cap_cl = nclauses + 4096
        self.cl_lits = np.zeros(2 * nlits + 16 * (nv + 16), dtype=np.int64)
        self.cl_start = np.zeros(cap_cl, dtype=np.int64)
        self.cl_len = np.zeros(cap_cl, dtype=np.int64)
        self.cl_learnt = np.zeros(cap_cl, dtype=np.int8)
        self.cl_lbd = np.zeros(cap_cl, dtype=np.int64)
        self.cl_act = np.zeros(cap_cl, dtype=np.float64)
        self.cl_del = np.zeros(cap_cl, dtype=np.int8)
        self.w_head = np.full(2 * (nv + 1), -1, dtype=np.int64)
        self.w_next = np.full(2 * cap_cl, -1, dtype=np.int64)
        self.istate[MAX_LEARNT] = max(nclauses // 3, 2000)
        self.istate[LUBY_I] = 1
        self.istate[RESTART_LEFT] = RESTART_UNIT

    def grow(self):
        ist = self.istate
        if ist[NLITS] + self.nv + 2 > self.cl_lits.shape[0]:
            self.cl_lits = np.concatenate([self.cl_lits, np.zeros_like(self.cl_lits)])
        if ist[NCL] + 1 > self.cl_start.shape[0]:
            for name in ("cl_start", "cl_len", "cl_learnt", "cl_lbd", "cl_act", "cl_del", "w_next"):
                arr = getattr(self, name)
                extra = np.full_like(arr, -1) if name == "w_next" else np.zeros_like(arr)
                setattr(self, name, np.concatenate([arr, extra]))

    def run(self, budget: int) -> int:
        return search(self.nv, budget, self.assign, self.level, self.reason, self.trail, self.trail_lim,
                      self.phase, self.act, self.heap, self.pos, self.seen, self.stamp, self.out, self.istate,
                      self.fstate, self.cl_lits, self.cl_start, self.cl_len, self.cl_learnt, self.cl_lbd,
                      self.cl_act, self.cl_del, self.w_head, self.w_next)


def solve_csr(num_vars: int, flat: np.ndarray, lens: np.ndarray, time_limit: float | None = None,
              chunk: int = 5000):
    """Solve clauses given in CSR form.  Returns ``(status, model)`` with
    status ``"SAT"``, ``"UNSAT"`` or ``"UNKNOWN"`` and a bool model (index 0
    unused) for SAT."""
    flat = np.ascontiguousarray(flat, dtype=np.int64)
    lens = np.ascontiguousarray(lens, dtype=np.int64)
    st = _State(num_vars, len(lens), len(flat))
    mark = np.zeros(2 * (num_vars + 1), dtype=np.int64)
    ok = load_clauses(flat, lens, num_vars, st.assign, st.level, st.reason, st.trail, st.istate, st.cl_lits,
                      st.cl_start, st.cl_len, st.w_head, st.w_next, mark)
    if not ok:
        return "UNSAT", None
    for v in range(1, num_vars + 1):
        if st.assign[v] < 0:
            st.pos[v] = st.istate[HEAP_N]
            st.heap[st.istate[HEAP_N]] = v
            st.istate[HEAP_N] += 1
    deadline = None if time_limit is None else time.monotonic() + time_limit
    while True:
        code = st.run(chunk)
        if code == SAT_CODE:
            model = st.assign == 1
            model[0] = False
            return "SAT", model
        if code == UNSAT_CODE:
            return "UNSAT", None
        if code == GROW_CODE:
            st.grow()
        if deadline is not None and time.monotonic() > deadline:
            return "UNKNOWN", None
