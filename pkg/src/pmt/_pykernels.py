"""Pure-Python reference implementations of the compiled kernels.

Both backends take identical flat arguments and return identical results;
``pmt.kernels`` picks one at import time.
"""
from __future__ import annotations

BACKEND = "python"


def hom_search(n_src, n_tgt, order, alive, tup_arity, tup_start, tup_vars,
               tup_table, tables, limit=-1):
    """Enumerate maps ``h: n_src -> n_tgt`` satisfying every constraint tuple.

    ``alive[v * n_tgt + w]`` says whether ``w`` is a candidate for ``v``.  Tuple
    ``t`` has arity ``tup_arity[t]``, its source elements are
    ``tup_vars[tup_start[t]: tup_start[t] + arity]`` and its target membership
    table (row-major over ``n_tgt ** arity`` cells) starts at ``tables[tup_table[t]]``.
    Elements are assigned in ``order`` with forward checking: once a tuple has a
    single unassigned element, that element's domain is filtered.
    Returns maps as tuples, in search order (``limit < 0`` means all).
    """
    n_t = len(tup_arity)
    dom = [set(w for w in range(n_tgt) if alive[v * n_tgt + w]) for v in range(n_src)]
    incid = [[] for _ in range(n_src)]
    tvars = []
    for t in range(n_t):
        vs = tuple(tup_vars[tup_start[t]: tup_start[t] + tup_arity[t]])
        tvars.append(vs)
        for v in set(vs):
            incid[v].append(t)
    assign = [-1] * n_src
    out = []

    def cell(t, extra_v=-1, extra_w=-1):
        idx = 0
        for v in tvars[t]:
            w = extra_w if v == extra_v else assign[v]
            idx = idx * n_tgt + w
        return tables[tup_table[t] + idx]

    def rec(depth):
        if 0 <= limit <= len(out):
            return
        if depth == n_src:
            out.append(tuple(assign))
            return
        v = order[depth]
        for w in sorted(dom[v]):
            assign[v] = w
            trail = []
            ok = True
            for t in incid[v]:
                free = {u for u in tvars[t] if assign[u] < 0}
                if not free:
                    if not cell(t):
                        ok = False
                        break
                elif len(free) == 1:
                    (u,) = free
                    drop = [x for x in dom[u] if not cell(t, u, x)]
                    for x in drop:
                        dom[u].discard(x)
                        trail.append((u, x))
                    if not dom[u]:
                        ok = False
                        break
            if ok:
                rec(depth + 1)
            for u, x in trail:
                dom[u].add(x)
            assign[v] = -1
            if 0 <= limit <= len(out):
                return

    if all(dom[v] for v in range(n_src)):
        rec(0)
    return out


def canonical_codes(n_bits, perm_maps, lo=0, hi=None):
    """Codes ``c`` in ``[lo, hi)`` that are minimal in their permutation orbit.

    A code is an ``n_bits``-bit integer whose position ``p`` is bit
    ``n_bits - 1 - p``.  ``perm_maps`` is a list of position maps: the permuted
    structure has at position ``p`` the bit the original has at ``pm[p]``.
    """
    if hi is None:
        hi = 1 << n_bits
    top = n_bits - 1
    out = []
    for c in range(lo, hi):
        canon = True
        for pm in perm_maps:
            for p in range(n_bits):
                a = (c >> (top - pm[p])) & 1
                b = (c >> (top - p)) & 1
                if a != b:
                    if a < b:
                        canon = False
                    break
            if not canon:
                break
        if canon:
            out.append(c)
    return out
