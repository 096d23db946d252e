# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: homomorphism search and canonical-code enumeration.

Argument conventions are documented in ``pmt._pykernels``; results match it
exactly.
"""
from libc.stdlib cimport malloc, free
from libc.string cimport memset

BACKEND = "cython"


cdef int* _int_array(object seq, Py_ssize_t n) except NULL:
    cdef int* a = <int*> malloc((n if n > 0 else 1) * sizeof(int))
    cdef Py_ssize_t i
    if a == NULL:
        raise MemoryError()
    for i in range(n):
        a[i] = seq[i]
    return a


cdef struct Search:
    int n_src
    int n_tgt
    int n_t
    int* order
    unsigned char* dom          # n_src * n_tgt
    int* dom_size
    int* arity
    int* start
    int* vars
    int* tab
    unsigned char* tables
    int* inc_start              # incidence CSR
    int* inc
    int* assign
    int* trail                  # pairs (u, x)
    int trail_top


cdef inline unsigned char _cell(Search* s, int t, int ev, int ew) nogil:
    cdef long idx = 0
    cdef int i, v, w
    for i in range(s.arity[t]):
        v = s.vars[s.start[t] + i]
        w = ew if v == ev else s.assign[v]
        idx = idx * s.n_tgt + w
    return s.tables[s.tab[t] + idx]


cdef int _propagate(Search* s, int v) nogil:
    """Check/prune tuples incident to v; returns 0 on wipe-out or violation."""
    cdef int k, t, i, u, x, nfree, other
    for k in range(s.inc_start[v], s.inc_start[v + 1]):
        t = s.inc[k]
        nfree = 0
        other = -1
        for i in range(s.arity[t]):
            u = s.vars[s.start[t] + i]
            if s.assign[u] < 0 and u != other:
                if other == -1:
                    other = u
                    nfree = 1
                else:
                    nfree = 2
                    break
        if nfree == 0:
            if not _cell(s, t, -1, -1):
                return 0
        elif nfree == 1:
            for x in range(s.n_tgt):
                if s.dom[other * s.n_tgt + x] and not _cell(s, t, other, x):
                    s.dom[other * s.n_tgt + x] = 0
                    s.dom_size[other] -= 1
                    s.trail[2 * s.trail_top] = other
                    s.trail[2 * s.trail_top + 1] = x
                    s.trail_top += 1
            if s.dom_size[other] == 0:
                return 0
    return 1


cdef void _undo(Search* s, int mark) nogil:
    cdef int u, x
    while s.trail_top > mark:
        s.trail_top -= 1
        u = s.trail[2 * s.trail_top]
        x = s.trail[2 * s.trail_top + 1]
        s.dom[u * s.n_tgt + x] = 1
        s.dom_size[u] += 1


def hom_search(int n_src, int n_tgt, order, alive, tup_arity, tup_start,
               tup_vars, tup_table, tables, long limit=-1):
    cdef Search s
    cdef int i, t, v, k, depth, w, mark
    cdef int n_t = len(tup_arity)
    cdef list out = []
    cdef int* cursor
    cdef int* marks
    cdef int* seen
    s.n_src = n_src
    s.n_tgt = n_tgt
    s.n_t = n_t
    s.order = _int_array(order, n_src)
    s.arity = _int_array(tup_arity, n_t)
    s.start = _int_array(tup_start, n_t)
    s.vars = _int_array(tup_vars, len(tup_vars))
    s.tab = _int_array(tup_table, n_t)
    s.tables = <unsigned char*> malloc(len(tables) + 1)
    s.dom = <unsigned char*> malloc(n_src * n_tgt + 1)
    s.dom_size = <int*> malloc((n_src + 1) * sizeof(int))
    s.assign = <int*> malloc((n_src + 1) * sizeof(int))
    s.inc_start = <int*> malloc((n_src + 2) * sizeof(int))
    s.trail = <int*> malloc((2 * n_src * n_tgt + 2) * sizeof(int))
    cursor = <int*> malloc((n_src + 1) * sizeof(int))
    marks = <int*> malloc((n_src + 1) * sizeof(int))
    seen = <int*> malloc((n_src + 1) * sizeof(int))
    s.inc = NULL
    s.trail_top = 0
    try:
        for i in range(len(tables)):
            s.tables[i] = 1 if tables[i] else 0
        for v in range(n_src):
            s.assign[v] = -1
            s.dom_size[v] = 0
            for w in range(n_tgt):
                s.dom[v * n_tgt + w] = 1 if alive[v * n_tgt + w] else 0
                s.dom_size[v] += s.dom[v * n_tgt + w]
        # incidence lists, each tuple once per distinct element
        memset(s.inc_start, 0, (n_src + 2) * sizeof(int))
        for v in range(n_src):
            seen[v] = -1
        for t in range(n_t):
            for i in range(s.arity[t]):
                v = s.vars[s.start[t] + i]
                if seen[v] != t:
                    seen[v] = t
                    s.inc_start[v + 1] += 1
        for v in range(n_src):
            s.inc_start[v + 1] += s.inc_start[v]
            cursor[v] = s.inc_start[v]
            seen[v] = -1
        s.inc = <int*> malloc((s.inc_start[n_src] + 1) * sizeof(int))
        for t in range(n_t):
            for i in range(s.arity[t]):
                v = s.vars[s.start[t] + i]
                if seen[v] != t:
                    seen[v] = t
                    s.inc[cursor[v]] = t
                    cursor[v] += 1
        for v in range(n_src):
            if s.dom_size[v] == 0:
                return out
        if n_src == 0:
            out.append(())
            return out
        # iterative backtracking; cursor[d] = next candidate for order[d]
        depth = 0
        cursor[0] = 0
        while depth >= 0:
            v = s.order[depth]
            if s.assign[v] >= 0:
                _undo(&s, marks[depth])
                s.assign[v] = -1
            w = cursor[depth]
            while w < n_tgt and not s.dom[v * n_tgt + w]:
                w += 1
            if w >= n_tgt:
                depth -= 1
                continue
            cursor[depth] = w + 1
            marks[depth] = s.trail_top
            s.assign[v] = w
            if not _propagate(&s, v):
                continue
            if depth == n_src - 1:
                out.append(tuple([s.assign[i] for i in range(n_src)]))
                if 0 <= limit <= len(out):
                    break
                continue
            depth += 1
            cursor[depth] = 0
        return out
    finally:
        free(s.order); free(s.arity); free(s.start); free(s.vars); free(s.tab)
        free(s.tables); free(s.dom); free(s.dom_size); free(s.assign)
        free(s.inc_start); free(s.trail); free(cursor); free(marks); free(seen)
        if s.inc != NULL:
            free(s.inc)


def canonical_codes(int n_bits, perm_maps, unsigned long long lo=0, hi=None):
    cdef unsigned long long c, h
    cdef int n_perm = len(perm_maps)
    cdef int p, q, top = n_bits - 1
    cdef int* pm
    cdef bint canon
    cdef unsigned long long a, b
    cdef list out = []
    if n_bits > 62:
        raise ValueError("too many bits for canonical enumeration")
    h = (1ULL << n_bits) if hi is None else <unsigned long long> hi
    pm = <int*> malloc((n_perm * n_bits + 1) * sizeof(int))
    try:
        for q in range(n_perm):
            for p in range(n_bits):
                pm[q * n_bits + p] = perm_maps[q][p]
        c = lo
        while c < h:
            canon = True
            for q in range(n_perm):
                for p in range(n_bits):
                    a = (c >> (top - pm[q * n_bits + p])) & 1ULL
                    b = (c >> (top - p)) & 1ULL
                    if a != b:
                        if a < b:
                            canon = False
                        break
                if not canon:
                    break
            if canon:
                out.append(c)
            c += 1
        return out
    finally:
        free(pm)
