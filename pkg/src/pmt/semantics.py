"""Finite structures, formula evaluation, homomorphisms and model search."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .syntax import (
    And, Atom, Bottom, Equal, Exists, Formula, HInductiveSentence, Not, Or,
    Signature, Top, free_vars, var, var_index, var_key,
)

__all__ = [
    "FiniteStructure", "Homomorphism", "ModelClass", "Evaluator",
    "denotation", "denotation_array", "satisfies_axiom", "satisfies_all",
    "homomorphisms", "exists_homomorphism", "compose", "is_immersion",
    "is_positively_closed_semantic", "check_enumeration_condition",
    "find_models", "canonical_code", "are_isomorphic", "ModelSearchLimit",
    "structure_from_code", "structure_bits",
]


@dataclass(frozen=True)
class FiniteStructure:
    """Universe ``{0..size-1}`` with one relation per signature symbol.

    Arity-0 symbols are interpreted by ``{()}`` (true) or ``frozenset()``.
    """

    signature: Signature
    size: int
    relations: Mapping[str, frozenset] = field(default_factory=dict)
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("universes are nonempty")
        rels = {}
        for sym, ar in self.signature.symbols:
            tuples = frozenset(tuple(t) for t in self.relations.get(sym, ()))
            for t in tuples:
                if len(t) != ar or any(not (0 <= e < self.size) for e in t):
                    raise ValueError(f"bad tuple {t} for {sym}/{ar} in universe of size {self.size}")
            rels[sym] = tuples
        extra = set(self.relations) - set(rels)
        if extra:
            raise ValueError(f"relations not in signature: {sorted(extra)}")
        object.__setattr__(self, "relations", _FrozenDict(rels))

    def __hash__(self) -> int:
        return hash((self.signature, self.size, tuple(sorted(self.relations.items()))))

    def holds(self, sym: str, t: Sequence[int] = ()) -> bool:
        return tuple(t) in self.relations[sym]

    def table(self, sym: str) -> np.ndarray:
        """Boolean array of shape ``(size,) * arity``."""
        ar = self.signature.arity(sym)
        arr = np.zeros((self.size,) * ar, dtype=bool)
        for t in self.relations[sym]:
            arr[t] = True
        return arr

    def degree(self, e: int) -> int:
        return sum(t.count(e) for ts in self.relations.values() for t in ts)

    def renamed(self, name: str | None) -> "FiniteStructure":
        return FiniteStructure(self.signature, self.size, self.relations, name)

    def to_text(self, name: str | None = None) -> str:
        lines = [f"model {name or self.name or 'M'} {{", f"  universe {self.size};"]
        for sym, ar in self.signature.symbols:
            ts = sorted(self.relations[sym])
            if ar == 0:
                lines.append(f"  {sym} = {'true' if ts else 'false'};")
            else:
                body = ",".join("(" + ",".join(map(str, t)) + ")" for t in ts)
                lines.append(f"  {sym} = {{{body}}};")
        lines.append("}")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "size": self.size,
            "relations": {s: sorted(list(t) for t in self.relations[s]) for s in self.signature.names},
        }


class _FrozenDict(dict):
    def __setitem__(self, *a):
        raise TypeError("immutable")

    __delitem__ = update = setdefault = pop = popitem = clear = __setitem__  # type: ignore

    def __hash__(self):
        return hash(tuple(sorted(self.items())))


@dataclass(frozen=True)
class Homomorphism:
    source: FiniteStructure
    target: FiniteStructure
    mapping: tuple[int, ...]

    def __call__(self, e: int) -> int:
        return self.mapping[e]

    def is_valid(self) -> bool:
        return is_homomorphism(self.source, self.target, self.mapping)

    def to_json(self) -> list[int]:
        return list(self.mapping)


def is_homomorphism(M: FiniteStructure, N: FiniteStructure, h: Sequence[int]) -> bool:
    return all(tuple(h[e] for e in t) in N.relations[s]
               for s, ts in M.relations.items() for t in ts)


def compose(f: Homomorphism, g: Homomorphism) -> Homomorphism:
    """``g o f``."""
    if f.target != g.source:
        raise ValueError("homomorphisms do not compose")
    return Homomorphism(f.source, g.target, tuple(g.mapping[v] for v in f.mapping))


# --------------------------------------------------------------------------
# Evaluation


class Evaluator:
    """Memoizing bottom-up evaluator; each result is ``(vars, bool tensor)``."""

    def __init__(self, M: FiniteStructure):
        self.M = M
        self.k = M.size
        self.memo: dict[Formula, tuple[tuple[str, ...], np.ndarray]] = {}
        self._tables = {s: M.table(s) for s in M.signature.names}

    def _expand(self, vs, arr, target):
        shape = [self.k if v in vs else 1 for v in target]
        return arr.reshape(shape)

    def eval(self, phi: Formula) -> tuple[tuple[str, ...], np.ndarray]:
        hit = self.memo.get(phi)
        if hit is not None:
            return hit
        k = self.k
        if isinstance(phi, Top):
            res = ((), np.array(True))
        elif isinstance(phi, Bottom):
            res = ((), np.array(False))
        elif isinstance(phi, Atom):
            vs = tuple(sorted(set(phi.args), key=var_key))
            if not phi.args:
                res = ((), np.array(bool(self._tables[phi.symbol])))
            else:
                grids = {v: np.arange(k).reshape([k if u == v else 1 for u in vs]) for v in vs}
                arr = self._tables[phi.symbol][tuple(grids[a] for a in phi.args)]
                res = (vs, np.broadcast_to(arr, (k,) * len(vs)))
        elif isinstance(phi, Equal):
            if phi.left == phi.right:
                res = ((phi.left,), np.ones(k, dtype=bool))
            else:
                vs = tuple(sorted((phi.left, phi.right), key=var_key))
                res = (vs, np.eye(k, dtype=bool))
        elif isinstance(phi, (And, Or)):
            subs = [self.eval(p) for p in phi.parts]
            vs = tuple(sorted(set().union(*(s[0] for s in subs)), key=var_key))
            acc = None
            for svs, arr in subs:
                e = self._expand(svs, arr, vs)
                acc = e if acc is None else ((acc & e) if isinstance(phi, And) else (acc | e))
            res = (vs, np.broadcast_to(acc, (k,) * len(vs)))
        elif isinstance(phi, Exists):
            bvs, arr = self.eval(phi.body)
            if phi.variable in bvs:
                i = bvs.index(phi.variable)
                res = (bvs[:i] + bvs[i + 1:], arr.any(axis=i))
            else:
                res = (bvs, arr)
        elif isinstance(phi, Not):
            bvs, arr = self.eval(phi.body)
            res = (bvs, ~arr)
        else:
            raise TypeError(f"not a formula: {phi!r}")
        self.memo[phi] = res
        return res

    def tensor(self, phi: Formula, variables: Sequence[str]) -> np.ndarray:
        """Truth table of ``phi`` with axes in the order of ``variables``."""
        vs, arr = self.eval(phi)
        missing = set(vs) - set(variables)
        if missing:
            raise ValueError(f"free variables {sorted(missing)} not among {list(variables)}")
        variables = list(variables)
        # move axes into requested order, then broadcast absent variables
        order = sorted(range(len(vs)), key=lambda i: variables.index(vs[i]))
        arr = np.transpose(arr, order) if vs else arr
        present = [vs[i] for i in order]
        shape, j = [], 0
        for v in variables:
            if j < len(present) and present[j] == v:
                shape.append(self.k)
                j += 1
            else:
                shape.append(1)
        arr = arr.reshape(shape) if variables else arr
        # duplicate names in ``variables`` are not supported
        return np.broadcast_to(arr, (self.k,) * len(variables))


_EVALUATORS: dict[FiniteStructure, Evaluator] = {}


def _evaluator(M: FiniteStructure) -> Evaluator:
    ev = _EVALUATORS.get(M)
    if ev is None or ev.M is not M:
        if len(_EVALUATORS) > 256:
            _EVALUATORS.clear()
        ev = _EVALUATORS[M] = Evaluator(M)
    return ev


def denotation_array(M: FiniteStructure, phi: Formula, n: int) -> np.ndarray:
    for v in free_vars(phi):
        i = var_index(v)
        if i is None or i >= n:
            raise ValueError(f"free variable {v} outside x0..x{n - 1}")
    return _evaluator(M).tensor(phi, [var(i) for i in range(n)])


def denotation(M: FiniteStructure, phi: Formula, n: int) -> set[tuple[int, ...]]:
    """All ``n``-tuples satisfying ``phi`` (free variables among x0..x_{n-1})."""
    arr = denotation_array(M, phi, n)
    if n == 0:
        return {()} if bool(arr) else set()
    return {tuple(int(i) for i in t) for t in zip(*np.nonzero(arr))}


def satisfies_axiom(M: FiniteStructure, ax: HInductiveSentence) -> bool:
    ev = _evaluator(M)
    a = ev.tensor(ax.antecedent, ax.variables)
    c = ev.tensor(ax.consequent, ax.variables)
    return bool(np.all(~a | c))


def satisfies_all(M: FiniteStructure, axioms: Iterable[HInductiveSentence]) -> bool:
    return all(satisfies_axiom(M, ax) for ax in axioms)


@dataclass(frozen=True)
class ModelClass:
    """A finite list of structures over one signature plus asserted axioms."""

    signature: Signature
    models: tuple[FiniteStructure, ...]
    axioms: tuple[HInductiveSentence, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "axioms", tuple(self.axioms))
        if not self.models:
            raise ValueError("a model class needs at least one structure")
        for i, M in enumerate(self.models):
            if M.signature != self.signature:
                raise ValueError(f"model {M.name or i} has a different signature")
            for ax in self.axioms:
                if not satisfies_axiom(M, ax):
                    raise ValueError(f"model {M.name or i} violates {ax}")

    def __len__(self):
        return len(self.models)

    def __iter__(self):
        return iter(self.models)

    def index(self, M: FiniteStructure) -> int:
        for i, N in enumerate(self.models):
            if N is M:
                return i
        for i, N in enumerate(self.models):
            if N == M:
                return i
        raise ValueError("structure not in class")

    def name_of(self, i: int) -> str:
        return self.models[i].name or f"M{i}"


# --------------------------------------------------------------------------
# Homomorphism search


def _search_args(M: FiniteStructure, N: FiniteStructure, fixed: Mapping[int, int] | None = None):
    if M.signature != N.signature:
        raise ValueError("structures over different signatures")
    n, m = M.size, N.size
    for sym, ar in M.signature.symbols:
        if ar == 0 and M.relations[sym] and not N.relations[sym]:
            return None
    alive = bytearray([1]) * (n * m)
    # unary-projection pruning: an element at position i of an R-tuple must
    # land in the i-th projection of R in the target
    for sym, ar in M.signature.symbols:
        if ar == 0 or not M.relations[sym]:
            continue
        proj = [set() for _ in range(ar)]
        for t in N.relations[sym]:
            for i, e in enumerate(t):
                proj[i].add(e)
        for t in M.relations[sym]:
            for i, v in enumerate(t):
                for w in range(m):
                    if w not in proj[i]:
                        alive[v * m + w] = 0
    for v, w in (fixed or {}).items():
        for x in range(m):
            if x != w:
                alive[v * m + x] = 0
    tup_arity, tup_start, tup_vars, tup_table = [], [], [], []
    tables = bytearray()
    offsets = {}
    for sym, ar in M.signature.symbols:
        if ar == 0 or not M.relations[sym]:
            continue
        offsets[sym] = len(tables)
        tables += N.table(sym).astype(np.uint8).ravel().tobytes()
        for t in sorted(M.relations[sym]):
            tup_arity.append(ar)
            tup_start.append(len(tup_vars))
            tup_vars.extend(t)
            tup_table.append(offsets[sym])
    # most-constrained first: descending degree, ties by index
    order = sorted(range(n), key=lambda e: (-M.degree(e), e))
    return n, m, order, alive, tup_arity, tup_start, tup_vars, tup_table, tables


def homomorphisms(M: FiniteStructure, N: FiniteStructure, *,
                  fixed: Mapping[int, int] | None = None) -> list[Homomorphism]:
    """Every homomorphism ``M -> N``, sorted lexicographically by mapping."""
    args = _search_args(M, N, fixed)
    if args is None:
        return []
    maps = kernels.hom_search(*args)
    return [Homomorphism(M, N, h) for h in sorted(maps)]


def exists_homomorphism(M: FiniteStructure, N: FiniteStructure, *,
                        fixed: Mapping[int, int] | None = None) -> bool:
    args = _search_args(M, N, fixed)
    return args is not None and bool(kernels.hom_search(*args, limit=1))


def is_immersion(h: Homomorphism, ctx=None) -> bool:
    """Whether ``h`` reflects every positive formula of the context's lattices.

    ``ctx`` is a built type-space context; its lattices up to ``n_max``
    define the formulas compared.
    """
    if ctx is None:
        raise ValueError("is_immersion needs a built type-space context")
    M, N = h.source, h.target
    for n in range(ctx.n_max + 1):
        src = ctx.tuple_types(M, n)
        tgt = ctx.tuple_types(N, n)
        for idx, t in enumerate(itertools.product(range(M.size), repeat=n)):
            image = 0
            for e in t:
                image = image * N.size + h.mapping[e]
            if src[idx] != tgt[image]:
                return False
    return True


def is_positively_closed_semantic(M: FiniteStructure, C: ModelClass, ctx=None) -> bool:
    """Every homomorphism from ``M`` into a member of ``C`` is an immersion."""
    if ctx is None:
        from .typespace import build
        ctx = build(C)
    return all(is_immersion(h, ctx) for N in C for h in homomorphisms(M, N))


# --------------------------------------------------------------------------
# Enumeration condition


def _canonical_structure(sig: Signature, n_elems: int, facts: Iterable[tuple[str, tuple[int, ...]]],
                         equalities: Iterable[tuple[int, int]] = ()):
    """Quotient by the equalities; returns (structure, class-of map)."""
    parent = list(range(n_elems))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in equalities:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = sorted({find(a) for a in range(n_elems)})
    cls = {r: i for i, r in enumerate(roots)}
    rels: dict[str, set] = {s: set() for s in sig.names}
    for s, t in facts:
        rels[s].add(tuple(cls[find(e)] for e in t))
    return FiniteStructure(sig, len(roots), rels), [cls[find(a)] for a in range(n_elems)]


def check_enumeration_condition(A: Iterable[int], M: FiniteStructure, C: ModelClass,
                                qf_budget: int, n_max: int = 2) -> bool:
    """Finite check of the witness-or-blocker condition on ``A`` inside ``M``.

    For every tuple from ``A`` of length <= ``n_max`` and every conjunction of at
    most ``qf_budget`` atoms ``phi(x, y)``, either ``phi(a, b)`` holds for some
    ``b`` from ``A``, or some quantifier-free positive ``chi(a, c)`` true in ``M``
    with ``c`` from ``A`` makes ``exists (phi & chi)`` fail in every member of ``C``.
    The strongest such ``chi`` is the positive diagram of ``A``, so that is the
    only one tried.  Disjunctions reduce to their disjuncts.
    """
    A = sorted(set(A))
    if not A:
        raise ValueError("A must be nonempty")
    sig = M.signature
    na = len(A)
    pos = {a: i for i, a in enumerate(A)}
    # positive diagram of A, as facts over indices 0..na-1
    diagram = [(s, tuple(pos[e] for e in t)) for s, ts in M.relations.items()
               for t in ts if all(e in pos for e in t)]
    max_ar = max([2] + [a for _, a in sig.symbols])
    n_y = qf_budget * max_ar
    for n in range(n_max + 1):
        xs = list(range(n))
        ys = list(range(n, n + n_y))
        pool = [("=", (u, v)) for u in xs + ys for v in xs + ys if u < v]
        for s, ar in sig.symbols:
            pool += [(s, t) for t in itertools.product(xs + ys, repeat=ar)]
        for abar in itertools.product(A, repeat=n):
            for size in range(qf_budget + 1):
                for phi in itertools.combinations(pool, size):
                    used_y = sorted({v for _, t in phi for v in t if v >= n})
                    if _has_witness(M, phi, abar, used_y, A):
                        continue
                    if not _blocked(sig, C, phi, abar, used_y, diagram, na, pos):
                        return False
    return True


def _has_witness(M, phi, abar, used_y, A) -> bool:
    n = len(abar)
    for bbar in itertools.product(A, repeat=len(used_y)):
        val = dict(zip(range(n), abar))
        val.update(zip(used_y, bbar))
        if all((val[t[0]] == val[t[1]]) if s == "=" else M.holds(s, tuple(val[v] for v in t))
               for s, t in phi):
            return True
    return False


def _blocked(sig, C, phi, abar, used_y, diagram, na, pos) -> bool:
    # elements: 0..na-1 the c-bar (all of A), then x-bar, then used y's
    n = len(abar)
    idx = {v: na + v for v in range(n)}
    idx.update({y: na + n + j for j, y in enumerate(used_y)})
    facts = list(diagram)
    eqs = [(idx[i], pos[a]) for i, a in enumerate(abar)]
    for s, t in phi:
        if s == "=":
            eqs.append((idx[t[0]], idx[t[1]]))
        else:
            facts.append((s, tuple(idx[v] for v in t)))
    D, _ = _canonical_structure(sig, na + n + len(used_y), facts, eqs)
    return not any(exists_homomorphism(D, N) for N in C)


# --------------------------------------------------------------------------
# Model enumeration up to isomorphism


class ModelSearchLimit(ValueError):
    pass


def _positions(sig: Signature, size: int) -> list[tuple[str, tuple[int, ...]]]:
    return [(s, t) for s, ar in sig.symbols for t in itertools.product(range(size), repeat=ar)]


def structure_bits(M: FiniteStructure) -> int:
    """Big-endian relation encoding: position ``p`` is bit ``B - 1 - p``."""
    code = 0
    for s, t in _positions(M.signature, M.size):
        code = (code << 1) | (1 if t in M.relations[s] else 0)
    return code


def structure_from_code(sig: Signature, size: int, code: int, name: str | None = None) -> FiniteStructure:
    posl = _positions(sig, size)
    B = len(posl)
    rels: dict[str, set] = {s: set() for s in sig.names}
    for p, (s, t) in enumerate(posl):
        if (code >> (B - 1 - p)) & 1:
            rels[s].add(t)
    return FiniteStructure(sig, size, rels, name)


def _perm_maps(sig: Signature, size: int, include_identity: bool = False) -> list[list[int]]:
    posl = _positions(sig, size)
    index = {pt: i for i, pt in enumerate(posl)}
    maps = []
    for perm in itertools.permutations(range(size)):
        if not include_identity and perm == tuple(range(size)):
            continue
        inv = [0] * size
        for i, j in enumerate(perm):
            inv[j] = i
        maps.append([index[(s, tuple(inv[e] for e in t))] for s, t in posl])
    return maps


def canonical_code(M: FiniteStructure) -> int:
    """Least encoding over all relabelings of the universe."""
    code = structure_bits(M)
    B = len(_positions(M.signature, M.size))
    best = code
    for pm in _perm_maps(M.signature, M.size):
        c = 0
        for p in range(B):
            c = (c << 1) | ((code >> (B - 1 - pm[p])) & 1)
        best = min(best, c)
    return best


def are_isomorphic(M: FiniteStructure, N: FiniteStructure) -> bool:
    if M.signature != N.signature or M.size != N.size:
        return False
    if M.size <= 6:
        return canonical_code(M) == canonical_code(N)
    for h in homomorphisms(M, N):
        if len(set(h.mapping)) == M.size:
            inv = [0] * M.size
            for i, j in enumerate(h.mapping):
                inv[j] = i
            if is_homomorphism(N, M, inv):
                return True
    return False


def find_models(axioms: Sequence[HInductiveSentence], sig: Signature, max_size: int,
                *, max_bits: int = 24) -> list[FiniteStructure]:
    """All models of ``axioms`` with at most ``max_size`` elements, up to isomorphism.

    Each isomorphism class is represented by its least encoding; results are
    ordered by (size, encoding).
    """
    if max_size < 1:
        raise ValueError("max_size must be at least 1")
    out = []
    for size in range(1, max_size + 1):
        B = len(_positions(sig, size))
        if B > max_bits:
            raise ModelSearchLimit(
                f"{B} relation bits at size {size} exceeds the enumeration limit of {max_bits}")
        for code in kernels.canonical_codes(B, _perm_maps(sig, size)):
            M = structure_from_code(sig, size, code)
            if satisfies_all(M, axioms):
                out.append(M)
    return out
