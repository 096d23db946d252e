"""Definable-set lattices of a finite class, type spaces and theory-level checks.

A theory is presented by a finite class ``C`` of finite structures (plus
optional declared axioms); two positive formulas are identified when they
define the same set in every member.  At arity ``k`` an element is a bitmask
over the *positions* ``(member, k-tuple)``, members laid out in class order
and tuples in lexicographic order.

Saturation works in a window of arities ``0..N`` with ``N = n_max + V``:
starting from atomic formulas it closes the primitive-positive families under
meets, permutations, identification of variables, adding a dummy variable and
projecting away the last variable.  ``L_n`` (``n <= n_max``) is the
join-closure of the primitive-positive family at arity ``n``.  Every positive
formula whose normal form uses at most ``N`` variables is represented.
"""
from __future__ import annotations

import itertools
import sys
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dlattice import DEFAULT_CAP, DLattice, ElementCapExceeded, LatticeHom, _from_closed
from .semantics import (
    FiniteStructure, Homomorphism, ModelClass, denotation_array, find_models,
    homomorphisms, is_positively_closed_semantic, satisfies_all,
)
from .spectrum import SpectralMap, SpectralSpace, mask, members, spectral_map_from_hom
from .syntax import (
    And, Atom, Bottom, Equal, Exists, Formula, HInductiveSentence, NegativeFormula,
    Not, OrdinalMap, Or, Signature, Top, conj, disj, free_vars, substitute, to_text, var,
)

__all__ = [
    "TheoryContext", "PiType", "Interpretation", "SupportResult",
    "SupportedTargetError", "build", "type_space", "tp", "f_star", "f_star_report",
    "check_pmc", "check_amalgamation", "check_jcp", "restrict_pi", "support_of",
    "is_atomic", "maximal_type_pc_check", "pc_and_prime_report",
    "check_countcat_condition", "check_somewhere_dense_density",
    "verify_interpretation", "natural_iso_check", "omitting_search",
    "satisfies_theory", "theory_types", "amalgam_search", "certificate_span",
]


# --------------------------------------------------------------------------
# bit helpers


def _to_bits(e: int, P: int) -> np.ndarray:
    raw = np.frombuffer(e.to_bytes((P + 7) // 8 or 1, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:P].astype(bool)


def _from_bits(bits: np.ndarray) -> int:
    if bits.size == 0:
        return 0
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


class _Layout:
    """Position bookkeeping for a list of structure sizes."""

    def __init__(self, sizes: Sequence[int]):
        self.sizes = list(sizes)
        self._cache: dict = {}

    def offsets(self, k: int) -> list[int]:
        out, off = [], 0
        for s in self.sizes:
            out.append(off)
            off += s ** k
        return out

    def P(self, k: int) -> int:
        return sum(s ** k for s in self.sizes)

    def carrier_sizes(self, k: int) -> tuple[int, ...]:
        return tuple(s ** k for s in self.sizes)

    def gather(self, f: OrdinalMap) -> np.ndarray:
        """For substitution along ``f: n -> m``: m-position -> n-position."""
        key = ("g", f.source, f.target, f.values)
        g = self._cache.get(key)
        if g is None:
            parts = []
            off_n = self.offsets(f.source)
            for i, s in enumerate(self.sizes):
                if f.target == 0:
                    tuples = np.zeros((1, 0), dtype=np.int64)
                else:
                    tuples = np.array(list(itertools.product(range(s), repeat=f.target)), dtype=np.int64)
                src = tuples[:, list(f.values)] if f.source else np.zeros((len(tuples), 0), dtype=np.int64)
                weights = s ** np.arange(f.source - 1, -1, -1, dtype=np.int64)
                parts.append(off_n[i] + (src * weights).sum(axis=1))
            g = self._cache[key] = np.concatenate(parts).astype(np.int64)
        return g

    def exists_last(self, bits: np.ndarray, k: int) -> np.ndarray:
        """Project away the last coordinate: arity ``k`` -> ``k - 1``."""
        parts = []
        off = 0
        for s in self.sizes:
            blk = bits[off: off + s ** k]
            parts.append(blk.reshape(s ** (k - 1), s).any(axis=1))
            off += s ** k
        return np.concatenate(parts)

    def tuple_index(self, member: int, t: Sequence[int]) -> int:
        s = self.sizes[member]
        idx = 0
        for e in t:
            idx = idx * s + e
        return self.offsets(len(t))[member] + idx


# --------------------------------------------------------------------------
# Saturation


@dataclass
class _Saturation:
    layout: _Layout
    N: int
    families: list[dict[int, int]]          # arity -> enc -> provenance id
    prov: list[tuple]

    def witness_builder(self):
        memo: dict[int, Formula] = {}
        prov = self.prov

        def w(pid: int) -> Formula:
            # iterative post-order to avoid deep recursion
            stack = [pid]
            while stack:
                q = stack[-1]
                if q in memo:
                    stack.pop()
                    continue
                rec = prov[q]
                deps = [d for d in _prov_deps(rec) if d not in memo]
                if deps:
                    stack.extend(deps)
                    continue
                stack.pop()
                memo[q] = _prov_formula(rec, memo)
            return memo[pid]

        return w


def _prov_deps(rec) -> list[int]:
    kind = rec[0]
    if kind in ("meet", "join"):
        return [rec[1], rec[2]]
    if kind in ("map", "exists"):
        return [rec[2]]
    return []


def _prov_formula(rec, memo) -> Formula:
    kind = rec[0]
    if kind == "seed":
        return rec[1]
    if kind == "meet":
        return conj(memo[rec[1]], memo[rec[2]])
    if kind == "join":
        return disj(memo[rec[1]], memo[rec[2]])
    if kind == "map":
        return substitute(memo[rec[2]], rec[1])
    if kind == "exists":
        body = memo[rec[2]]
        v = var(rec[1])
        return Exists(v, body) if v in free_vars(body) else body
    raise ValueError(kind)


def _seeds(models: Sequence[FiniteStructure], sig: Signature, N: int):
    """(arity, formula) pairs: bounds, equality and atoms with variable patterns."""
    out = []
    for k in range(N + 1):
        out.append((k, Bottom()))
        out.append((k, Top()))
    if N >= 2:
        out.append((2, Equal(var(0), var(1))))
    for sym, ar in sig.symbols:
        if ar == 0:
            out.append((0, Atom(sym, ())))
            continue
        for k in range(1, min(ar, N) + 1):
            # surjective patterns a -> k, listed in lexicographic order
            for vals in itertools.product(range(k), repeat=ar):
                if len(set(vals)) == k and _first_occurrence_ordered(vals):
                    out.append((k, Atom(sym, tuple(var(v) for v in vals))))
    return out


def _first_occurrence_ordered(vals) -> bool:
    seen = []
    for v in vals:
        if v not in seen:
            seen.append(v)
    return seen == sorted(seen)


def _vector(models, layout: _Layout, phi: Formula, k: int) -> int:
    parts = [denotation_array(M, phi, k).ravel() for M in models]
    return _from_bits(np.concatenate(parts)) if parts else 0


def saturate(models: Sequence[FiniteStructure], sig: Signature, N: int,
             cap: int = DEFAULT_CAP) -> _Saturation:
    layout = _Layout([M.size for M in models])
    families: list[dict[int, int]] = [dict() for _ in range(N + 1)]
    prov: list[tuple] = []
    queue: deque = deque()

    def add(k: int, enc: int, rec: tuple) -> None:
        fam = families[k]
        if enc in fam:
            return
        if len(fam) >= cap:
            raise ElementCapExceeded(cap, k)
        prov.append(rec)
        fam[enc] = len(prov) - 1
        queue.append((k, enc))

    for k, phi in _seeds(models, sig, N):
        add(k, _vector(models, layout, phi, k), ("seed", phi))

    maps: dict[int, list[OrdinalMap]] = {}
    for k in range(N + 1):
        ms = []
        if k >= 2:
            ms.append(OrdinalMap(k, k, (1, 0) + tuple(range(2, k))))           # swap
            if k >= 3:
                ms.append(OrdinalMap(k, k, tuple((i + 1) % k for i in range(k))))  # cycle
            ms.append(OrdinalMap(k, k - 1, tuple(range(k - 1)) + (k - 2,)))     # identify
        if k < N:
            ms.append(OrdinalMap(k, k + 1, tuple(range(k))))                      # dummy
        maps[k] = ms

    while queue:
        k, enc = queue.popleft()
        pid = families[k][enc]
        for other, opid in list(families[k].items()):
            c = enc & other
            if c not in families[k]:
                add(k, c, ("meet", pid, opid))
        if not maps[k] and k == 0:
            continue
        bits = _to_bits(enc, layout.P(k))
        for f in maps[k]:
            img = _from_bits(bits[layout.gather(f)])
            add(f.target, img, ("map", f, pid))
        if k >= 1:
            add(k - 1, _from_bits(layout.exists_last(bits, k)), ("exists", k - 1, pid))
    return _Saturation(layout, N, families, prov)


def _join_closure(sat: _Saturation, k: int, cap: int, arity_label: int | None = None):
    fam = sat.families[k]
    prov = sat.prov
    elems: dict[int, int] = dict(fam)
    pp = list(fam.items())
    frontier = list(elems.items())
    while frontier:
        new = []
        for a, pa in frontier:
            for e, pe in pp:
                c = a | e
                if c not in elems:
                    if len(elems) >= cap:
                        raise ElementCapExceeded(cap, k if arity_label is None else arity_label)
                    prov.append(("join", pa, pe))
                    elems[c] = len(prov) - 1
                    new.append((c, elems[c]))
        frontier = new
    return elems


class _LazyWitnesses:
    """Sequence of witness formulas built on first access."""

    def __init__(self, pids: list[int], builder):
        self.pids, self.builder = pids, builder

    def __len__(self):
        return len(self.pids)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return self.builder(self.pids[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))


class _NegatedWitnesses(_LazyWitnesses):
    def __init__(self, inner):
        self.inner = inner

    def __len__(self):
        return len(self.inner)

    def __getitem__(self, i):
        w = self.inner[i]
        return w.body if isinstance(w, NegativeFormula) else NegativeFormula(w)


def _lattice_from(sat: _Saturation, k: int, cap: int) -> DLattice:
    elems = _join_closure(sat, k, cap)
    L = _from_closed(sat.layout.carrier_sizes(k), {e: None for e in elems}, cap)
    L.witnesses = _LazyWitnesses([elems[e] for e in L.encodings], sat.witness_builder())
    return L


# --------------------------------------------------------------------------
# Context


@dataclass
class TheoryContext:
    cls: ModelClass
    n_max: int
    V: int
    cap: int
    lattices: list[DLattice]
    spaces: list[SpectralSpace]
    stable: bool | None
    sat: _Saturation = field(repr=False)

    @property
    def N(self) -> int:
        return self.n_max + self.V

    @property
    def signature(self) -> Signature:
        return self.cls.signature

    @property
    def layout(self) -> _Layout:
        return self.sat.layout

    def lattice(self, n: int) -> DLattice:
        self._check_arity(n)
        return self.lattices[n]

    def space(self, n: int) -> SpectralSpace:
        self._check_arity(n)
        return self.spaces[n]

    def _check_arity(self, n: int) -> None:
        if not 0 <= n <= self.n_max:
            raise ValueError(f"arity {n} outside 0..{self.n_max}")

    def member_index(self, M: FiniteStructure) -> int | None:
        try:
            return self.cls.index(M)
        except ValueError:
            return None

    def element_of(self, phi: Formula, n: int) -> int:
        """Lattice index of the set defined by ``phi`` at arity ``n``."""
        L = self.lattice(n)
        enc = _vector(self.cls.models, self.layout, phi, n)
        try:
            return L.index[enc]
        except KeyError:
            raise KeyError(f"{to_text(phi)} is outside the computed lattice at arity {n}") from None

    def position_points(self, n: int) -> list[int]:
        """Point index of the type of every position at arity ``n``."""
        key = ("pp", n)
        cached = self._cache.get(key)
        if cached is None:
            S = self.space(n)
            gen_to_point = {p.generator: i for i, p in enumerate(S.points)}
            cached = [gen_to_point[j] for j in self.lattice(n).position_types()]
            self._cache[key] = cached
        return cached

    def tuple_types(self, M: FiniteStructure, n: int) -> list:
        """Filter (as frozenset of element indices) of every ``n``-tuple of ``M``."""
        key = ("tt", n, M)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        L = self.lattice(n)
        i = self.member_index(M)
        if i is not None:
            off = self.layout.offsets(n)[i]
            pts = self.position_points(n)
            S = self.space(n)
            out = [S.points[pts[off + u]].members for u in range(M.size ** n)]
        else:
            # evaluate every witness in M
            cols = np.stack([denotation_array(M, L.witnesses[a], n).ravel() for a in range(L.n)], axis=1)
            out = [frozenset(np.nonzero(row)[0].tolist()) for row in cols]
        self._cache[key] = out
        return out

    def __post_init__(self):
        self._cache: dict = {}


def build(C: ModelClass, n_max: int = 2, V: int = 2, cap: int = DEFAULT_CAP,
          check_stability: bool = True) -> TheoryContext:
    if n_max < 0 or V < 0:
        raise ValueError("n_max and V must be nonnegative")
    N = n_max + V
    sat = saturate(C.models, C.signature, N, cap)
    lattices = [_lattice_from(sat, n, cap) for n in range(n_max + 1)]
    stable = None
    if check_stability:
        try:
            bigger = saturate(C.models, C.signature, N + 1, cap)
            stable = True
            for n in range(n_max + 1):
                if set(bigger.families[n]) != set(sat.families[n]):
                    if set(_join_closure(bigger, n, cap)) != set(lattices[n].encodings):
                        stable = False
                        break
        except ElementCapExceeded:
            stable = None
    spaces = [SpectralSpace(L) for L in lattices]
    return TheoryContext(C, n_max, V, cap, lattices, spaces, stable, sat)


def type_space(ctx: TheoryContext, n: int) -> SpectralSpace:
    return ctx.space(n)


def type_formulas(ctx: TheoryContext, n: int, p: int) -> tuple[list[Formula], list[NegativeFormula]]:
    """The point ``p`` of ``S_n`` as a complete type: positive and negative parts."""
    L, S = ctx.lattice(n), ctx.space(n)
    inside = S.points[p].members
    pos = [L.witnesses[a] for a in range(L.n) if a in inside]
    neg = [NegativeFormula(L.witnesses[a]) for a in range(L.n) if a not in inside]
    return pos, neg


def tp(ctx: TheoryContext, M: FiniteStructure, t: Sequence[int]) -> int:
    """Point of ``S_n`` realized by tuple ``t`` of member ``M``."""
    i = ctx.member_index(M)
    if i is None:
        raise ValueError("structure is not a member of the class")
    n = len(t)
    ctx._check_arity(n)
    if any(not 0 <= e < M.size for e in t):
        raise ValueError("tuple outside the universe")
    return ctx.position_points(n)[ctx.layout.tuple_index(i, t)]


# --------------------------------------------------------------------------
# Type-space functor


def substitution_hom(ctx: TheoryContext, f: OrdinalMap) -> LatticeHom:
    """``L_n -> L_m``, ``a -> a(x_{f(0)}, ..., x_{f(n-1)})``."""
    Ln, Lm = ctx.lattice(f.source), ctx.lattice(f.target)
    g = ctx.layout.gather(f)
    Pn = ctx.layout.P(f.source)
    out = []
    for e in Ln.encodings:
        img = _from_bits(_to_bits(e, Pn)[g])
        if img not in Lm.index:
            raise AssertionError("substitution left the lattice; saturation incomplete")
        out.append(Lm.index[img])
    return LatticeHom(Ln, Lm, tuple(out))


def f_star(ctx: TheoryContext, f: OrdinalMap) -> SpectralMap:
    """``f*: S_m -> S_n`` for ``f: n -> m``."""
    ctx._check_arity(f.source)
    ctx._check_arity(f.target)
    key = ("fstar", f)
    if key not in ctx._cache:
        h = substitution_hom(ctx, f)
        ctx._cache[key] = spectral_map_from_hom(h, ctx.space(f.target), ctx.space(f.source))
    return ctx._cache[key]


def exists_along(ctx: TheoryContext, f: OrdinalMap, b: int) -> int:
    """Encoding at arity ``n`` of ``exists x (b(x) & y_i = x_{f(i)})``."""
    Pm = ctx.layout.P(f.target)
    bits_b = _to_bits(ctx.lattice(f.target).encodings[b], Pm)
    res = np.zeros(ctx.layout.P(f.source), dtype=bool)
    res[ctx.layout.gather(f)[bits_b]] = True
    return _from_bits(res)


def f_star_report(ctx: TheoryContext, f: OrdinalMap) -> dict:
    """Spectrality, openness and the two basic-open identities for ``f*``."""
    fs = f_star(ctx, f)
    h = substitution_hom(ctx, f)
    Sn, Sm = ctx.space(f.source), ctx.space(f.target)
    Ln = ctx.lattice(f.source)
    preimage_ok = all(fs.preimage(Sn.opens[a]) == Sm.opens[h.mapping[a]] for a in range(Ln.n))
    image_ok, outside = True, 0
    for b in range(ctx.lattice(f.target).n):
        e = exists_along(ctx, f, b)
        if e in Ln.index:
            image_ok &= fs.image(Sm.opens[b]) == Sn.opens[Ln.index[e]]
        else:
            outside += 1
    return {
        "spectral": fs.is_spectral(),
        "open": fs.is_open(),
        "preimage_identity": preimage_ok,
        "image_identity": image_ok,
        "images_outside_window": outside,
    }


# --------------------------------------------------------------------------
# Checkers


def check_pmc(ctx: TheoryContext) -> dict[int, dict]:
    out = {}
    for n in range(ctx.n_max + 1):
        rep = ctx.space(n).hausdorff_report()
        out[n] = {"pmc": rep["separated"] and rep["complemented"], **rep}
    return out


def check_amalgamation(ctx: TheoryContext) -> dict[int, dict]:
    out = {}
    for n in range(ctx.n_max + 1):
        ok, wit = ctx.space(n).components_disjoint()
        rec = {"amalgamation": ok}
        if wit:
            rec["witness"] = {"shared": wit[0], "generic": [wit[1], wit[2]]}
        out[n] = rec
    return out


def check_jcp(ctx: TheoryContext) -> dict:
    L = ctx.lattice(0)
    lattice_form = all(L.meet(a, b) != L.bottom or L.bottom in (a, b)
                       for a in range(L.n) for b in range(L.n))
    S = ctx.space(0)
    irreducible = S.is_irreducible(S.all)
    if lattice_form != irreducible:
        raise AssertionError("JCP criteria disagree")
    out: dict = {"jcp": lattice_form}
    if not lattice_form:
        for a in range(L.n):
            for b in range(a + 1, L.n):
                if L.meet(a, b) == L.bottom and L.bottom not in (a, b):
                    out["witness"] = [a, b]
                    return out
    return out


def restrict_pi(ctx: TheoryContext, p: int) -> list[int]:
    """Arity-0 elements outside the point ``p`` (its negative part)."""
    S = ctx.space(0)
    return [a for a in range(ctx.lattice(0).n) if a not in S.points[p].members]


@dataclass(frozen=True)
class PiType:
    """Closed subset of ``S_n``: complement of the union of ``[a]`` over ``elements``."""

    arity: int
    elements: tuple[int, ...]
    name: str | None = None
    witnesses: tuple[NegativeFormula, ...] = ()

    @classmethod
    def from_formulas(cls, ctx: TheoryContext, n: int, formulas: Iterable[Formula | NegativeFormula],
                      name: str | None = None) -> "PiType":
        ws, els = [], []
        for phi in formulas:
            body = phi.body if isinstance(phi, NegativeFormula) else phi
            els.append(ctx.element_of(body, n))
            ws.append(NegativeFormula(body))
        return cls(n, tuple(els), name, tuple(ws))

    def closed_set(self, ctx: TheoryContext) -> int:
        S = ctx.space(self.arity)
        u = 0
        for a in self.elements:
            u |= S.opens[a]
        return S.all ^ u


@dataclass(frozen=True)
class SupportResult:
    element: int | None
    witness: Formula | None
    nowhere_dense: bool

    @property
    def supported(self) -> bool:
        return self.element is not None


def support_of(ctx: TheoryContext, p: PiType) -> SupportResult:
    """Largest ``a != bottom`` with ``[a]`` inside ``[p]``, if any."""
    L, S = ctx.lattice(p.arity), ctx.space(p.arity)
    closed = p.closed_set(ctx)
    cands = [a for a in range(L.n) if a != L.bottom and S.opens[a] & ~closed == 0]
    nowhere_dense = S.interior(closed) == 0
    if not cands:
        return SupportResult(None, None, nowhere_dense)
    # candidates are closed under joins, so one contains all the others
    best = max(cands, key=lambda a: (bin(L.encodings[a]).count("1"), a))
    assert all(L.leq(a, best) for a in cands)
    return SupportResult(best, L.witnesses[best], nowhere_dense)


def _realized_points(ctx: TheoryContext, i: int, n: int) -> list[int]:
    off = ctx.layout.offsets(n)[i]
    pts = ctx.position_points(n)
    return sorted(set(pts[off: off + ctx.cls.models[i].size ** n]))


def is_atomic(ctx: TheoryContext, M: FiniteStructure) -> bool:
    """Every Pi-type realized in ``M`` (up to ``n_max``) has a support."""
    i = ctx.member_index(M)
    if i is None:
        raise ValueError("structure is not a member of the class")
    for n in range(ctx.n_max + 1):
        S = ctx.space(n)
        for q in _realized_points(ctx, i, n):
            # the realized Pi-type of q is the closure of q
            if S.interior(S.below[q]) == 0:
                return False
    return True


def maximal_type_pc_check(ctx: TheoryContext, M: FiniteStructure) -> bool:
    """Positively closed iff every realized type is a maximal filter."""
    i = ctx.member_index(M)
    if i is None:
        raise ValueError("structure is not a member of the class")
    for n in range(ctx.n_max + 1):
        maxi = set(ctx.space(n).maximal_points())
        if any(q not in maxi for q in _realized_points(ctx, i, n)):
            return False
    return True


def pc_and_prime_report(ctx: TheoryContext) -> dict:
    C = ctx.cls
    pc = [maximal_type_pc_check(ctx, M) for M in C]
    semantic = [is_positively_closed_semantic(M, C, ctx) for M in C]
    if pc != semantic:
        raise AssertionError(f"positive-closure criteria disagree: {pc} vs {semantic}")
    atomic = [is_atomic(ctx, M) for M in C]
    pcs = [N for N, flag in zip(C, pc) if flag]
    prime = [pc[i] and all(homomorphisms(M, N) for N in pcs) for i, M in enumerate(C)]
    jcp = check_jcp(ctx)["jcp"]
    agreement = None
    if jcp:
        agreement = all(prime[i] == (pc[i] and atomic[i]) for i in range(len(C)))
    models = [{"name": C.name_of(i), "positively_closed": pc[i],
               "atomic": pc[i] and atomic[i], "prime": prime[i]} for i in range(len(C))]
    return {"models": models, "prime_iff_atomic": agreement}


def check_countcat_condition(ctx: TheoryContext) -> dict[int, bool]:
    out = {}
    for n in range(ctx.n_max + 1):
        S = ctx.space(n)
        out[n] = all(S.interior(c.points) != 0 for c in S.components())
    return out


def check_somewhere_dense_density(ctx: TheoryContext) -> dict[int, bool]:
    return {n: somewhere_dense_density(ctx.space(n)) for n in range(ctx.n_max + 1)}


def somewhere_dense_density(S: SpectralSpace) -> bool:
    A = S.somewhere_dense_points()
    return all(o & A for o in S.opens if o)


# --------------------------------------------------------------------------
# Models of the theory outside the class


def theory_types(ctx: TheoryContext, D: FiniteStructure) -> dict[int, list[int]] | None:
    """Types of ``D``'s tuples if ``D`` satisfies the theory within the window.

    ``D`` is a model iff every tuple of length at most ``N`` has the same
    primitive-positive type as some tuple of a member.  Returns, per arity
    ``n <= n_max``, the point of each tuple of ``D``; ``None`` if ``D`` fails.
    """
    key = ("theory", D)
    if key in ctx._cache:
        return ctx._cache[key]
    result = _theory_types(ctx, D)
    ctx._cache[key] = result
    return result


def _theory_types(ctx: TheoryContext, D: FiniteStructure):
    if D.signature != ctx.signature or not satisfies_all(D, ctx.cls.axioms):
        return None
    models = list(ctx.cls.models) + [D]
    sat = saturate(models, ctx.signature, ctx.N, max(ctx.cap, 1 << 16))
    layout = sat.layout
    out = {}
    for k in range(ctx.N + 1):
        encs = list(sat.families[k])
        P = layout.P(k)
        E = np.stack([_to_bits(e, P) for e in encs]) if encs else np.zeros((0, P), bool)
        split = layout.offsets(k)[-1]
        cols = {E[:, u].tobytes(): u for u in range(split - 1, -1, -1)}
        matched = []
        for u in range(split, P):
            v = cols.get(E[:, u].tobytes())
            if v is None:
                return None
            matched.append(v)
        if k <= ctx.n_max:
            pts = ctx.position_points(k)
            out[k] = [pts[v] for v in matched]
    return out


def satisfies_theory(ctx: TheoryContext, D: FiniteStructure) -> bool:
    return theory_types(ctx, D) is not None


def _is_pc_model(ctx: TheoryContext, types: dict[int, list[int]]) -> bool:
    for n, pts in types.items():
        maxi = set(ctx.space(n).maximal_points())
        if any(q not in maxi for q in pts):
            return False
    return True


class SupportedTargetError(ValueError):
    def __init__(self, target: PiType, support: SupportResult):
        self.target, self.support = target, support
        w = to_text(support.witness) if isinstance(support.witness, Formula) else str(support.witness)
        super().__init__(f"target {target.name or ''} has support {w}".replace("  ", " "))


def omitting_search(ctx: TheoryContext, targets: Sequence[PiType], max_size: int = 4,
                    max_bits: int = 24) -> FiniteStructure | None:
    """A positively closed model of size <= ``max_size`` omitting every target."""
    for t in targets:
        sup = support_of(ctx, t)
        if sup.supported:
            raise SupportedTargetError(t, sup)
    closed = [(t.arity, t.closed_set(ctx)) for t in targets]
    for D in find_models(ctx.cls.axioms, ctx.signature, max_size, max_bits=max_bits):
        types = theory_types(ctx, D)
        if types is None or not _is_pc_model(ctx, types):
            continue
        if all(not any((cs >> q) & 1 for q in types[n]) for n, cs in closed):
            return D
    return None


# --------------------------------------------------------------------------
# Amalgamation by search


def amalgam_search(ctx: TheoryContext, f1: Homomorphism, f2: Homomorphism, max_size: int = 4,
                   max_bits: int = 24) -> tuple[FiniteStructure, Homomorphism, Homomorphism] | None:
    """Models ``D`` of the theory with ``g1 f1 = g2 f2``, searched up to ``max_size``."""
    if f1.source != f2.source:
        raise ValueError("not a span")
    A, B1, B2 = f1.source, f1.target, f2.target
    for D in find_models(ctx.cls.axioms, ctx.signature, max_size, max_bits=max_bits):
        for g1 in homomorphisms(B1, D):
            fixed = {}
            ok = True
            for a in range(A.size):
                want = g1.mapping[f1.mapping[a]]
                b = f2.mapping[a]
                if fixed.get(b, want) != want:
                    ok = False
                    break
                fixed[b] = want
            if not ok:
                continue
            g2s = homomorphisms(B2, D, fixed=fixed)
            if g2s and satisfies_theory(ctx, D):
                return D, g1, g2s[0]
    return None


def certificate_span(ctx: TheoryContext, n: int) -> tuple[Homomorphism, Homomorphism] | None:
    """A span of members realizing an amalgamation failure at arity ``n``."""
    rep = check_amalgamation(ctx)[n]
    if rep["amalgamation"]:
        return None
    shared = rep["witness"]["shared"]
    g1, g2 = rep["witness"]["generic"]
    C, lay = ctx.cls, ctx.layout
    pts = ctx.position_points(n)
    for i, A in enumerate(C):
        for t in itertools.product(range(A.size), repeat=n):
            if pts[lay.tuple_index(i, t)] != shared:
                continue
            for f1 in (h for N in C for h in homomorphisms(A, N)):
                j = C.index(f1.target)
                if pts[lay.tuple_index(j, [f1.mapping[e] for e in t])] != g1:
                    continue
                for f2 in (h for N in C for h in homomorphisms(A, N)):
                    k = C.index(f2.target)
                    if pts[lay.tuple_index(k, [f2.mapping[e] for e in t])] == g2:
                        return f1, f2
    return None


# --------------------------------------------------------------------------
# Interpretations


@dataclass(frozen=True)
class Interpretation:
    """Symbol ``R`` of ``source`` -> positive formula over the target in x0..x_{a-1}."""

    source: Signature
    target: Signature
    mapping: tuple[tuple[str, Formula], ...]

    def __post_init__(self):
        m = dict(self.mapping)
        object.__setattr__(self, "mapping", tuple(sorted(m.items())))
        for sym, ar in self.source.symbols:
            if sym not in m:
                raise ValueError(f"no interpretation for {sym}")
            fv = free_vars(m[sym])
            allowed = {var(i) for i in range(ar)}
            if not fv <= allowed:
                raise ValueError(f"arity mismatch: {sym}/{ar} interpreted with free {sorted(fv)}")

    @classmethod
    def of(cls, source: Signature, target: Signature, mapping: dict) -> "Interpretation":
        return cls(source, target, tuple(mapping.items()))

    def formula(self, sym: str) -> Formula:
        return dict(self.mapping)[sym]

    def translate(self, phi: Formula) -> Formula:
        if isinstance(phi, (Top, Bottom, Equal)):
            return phi
        if isinstance(phi, Atom):
            from .syntax import rename_free
            ar = self.source.arity(phi.symbol)
            return rename_free(self.formula(phi.symbol), {var(i): phi.args[i] for i in range(ar)})
        if isinstance(phi, And):
            return And(tuple(self.translate(p) for p in phi.parts))
        if isinstance(phi, Or):
            return Or(tuple(self.translate(p) for p in phi.parts))
        if isinstance(phi, Exists):
            return Exists(phi.variable, self.translate(phi.body))
        if isinstance(phi, Not):
            return Not(self.translate(phi.body))
        raise TypeError(phi)

    def reduct(self, M: FiniteStructure) -> FiniteStructure:
        """``Gamma*(M)``: the source-signature structure defined inside ``M``."""
        rels = {}
        for sym, ar in self.source.symbols:
            arr = denotation_array(M, self.formula(sym), ar)
            if ar == 0:
                rels[sym] = {()} if bool(arr) else set()
            else:
                rels[sym] = {tuple(int(x) for x in t) for t in zip(*np.nonzero(arr))}
        return FiniteStructure(self.source, M.size, rels, M.name)


def verify_interpretation(gamma: Interpretation, target: ModelClass,
                          source_axioms: Sequence[HInductiveSentence] = (),
                          source_ctx: TheoryContext | None = None) -> bool:
    """Every ``Gamma*(M')`` satisfies the source axioms (and source theory if given)."""
    if target.signature != gamma.target:
        raise ValueError("interpretation target does not match the class")
    for Mp in target:
        R = gamma.reduct(Mp)
        if not satisfies_all(R, source_axioms):
            return False
        if source_ctx is not None and not satisfies_theory(source_ctx, R):
            return False
    return True


def interpretation_hom(gamma: Interpretation, ctx_s: TheoryContext, ctx_t: TheoryContext,
                       n: int) -> LatticeHom:
    """``L_n(T) -> L_n(T')``, ``a -> Gamma(witness(a))``."""
    Ls, Lt = ctx_s.lattice(n), ctx_t.lattice(n)
    reducts = [gamma.reduct(M) for M in ctx_t.cls]
    out = []
    for a in range(Ls.n):
        enc = _vector(reducts, ctx_t.layout, Ls.witnesses[a], n)
        if enc not in Lt.index:
            raise AssertionError("translated formula outside the target lattice")
        out.append(Lt.index[enc])
    return LatticeHom(Ls, Lt, tuple(out))


def _beta(gamma, ctx_s, ctx_t, n):
    h = interpretation_hom(gamma, ctx_s, ctx_t, n)
    h.check()
    return spectral_map_from_hom(h, ctx_t.space(n), ctx_s.space(n))


def natural_iso_check(gamma: Interpretation, ctx_s: TheoryContext, ctx_t: TheoryContext,
                      inverse: Interpretation | None = None) -> dict:
    """Build ``beta_n: S_n(T') -> S_n(T)`` and check homeomorphism and naturality."""
    if ctx_s.n_max != ctx_t.n_max:
        raise ValueError("contexts need the same n_max")
    rep: dict = {"ok": False, "beta": {}, "reason": None}
    betas = {}
    for n in range(ctx_s.n_max + 1):
        try:
            b = _beta(gamma, ctx_s, ctx_t, n)
        except (AssertionError, ValueError) as e:
            rep["reason"] = f"arity {n}: {e}"
            return rep
        betas[n] = b
        rep["beta"][n] = list(b.mapping)
        if len(set(b.mapping)) != b.target.k or b.source.k != b.target.k:
            rep["reason"] = (f"arity {n}: beta is not bijective "
                             f"({b.source.k} points onto {b.target.k}, image {len(set(b.mapping))})")
            return rep
        if not b.is_homeomorphism():
            rep["reason"] = f"arity {n}: beta is not a homeomorphism"
            return rep
    squares = 0
    for n in range(ctx_s.n_max + 1):
        for m in range(ctx_s.n_max + 1):
            for f in OrdinalMap.all_maps(n, m):
                lhs = betas[m].then(f_star(ctx_s, f))          # f*_T o beta_m
                rhs = f_star(ctx_t, f).then(betas[n])          # beta_n o f*_T'
                squares += 1
                if lhs.mapping != rhs.mapping:
                    rep["reason"] = f"naturality fails for f={f.values}: {n}->{m}"
                    return rep
    rep["squares"] = squares
    if inverse is not None:
        for n in range(ctx_s.n_max + 1):
            back = _beta(inverse, ctx_t, ctx_s, n)
            if betas[n].then(back).mapping != tuple(range(ctx_t.space(n).k)):
                rep["reason"] = f"arity {n}: candidate inverse does not invert beta"
                return rep
    rep["ok"] = True
    return rep
