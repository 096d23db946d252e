"""Finite bounded distributive lattices.

Two representations share one interface:

* *encoded* lattices, whose elements are set-vectors over a family of
  carriers stored as Python-int bitmasks (meet is ``&``, join is ``|``);
* *table* lattices given by explicit meet/join tables.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .syntax import And, Atom, Bottom, Formula, NegativeFormula, Or, Top, conj, disj, to_text

__all__ = [
    "DLattice", "PrimeFilter", "LatticeHom", "LatticeAxiomError",
    "ElementCapExceeded", "DEFAULT_CAP", "from_set_family", "validate",
    "prime_filters", "prime_filters_bruteforce", "join_irreducibles",
    "opposite", "chain", "boolean", "free_dl2", "product", "from_json",
]

DEFAULT_CAP = 4096


class LatticeAxiomError(ValueError):
    """A lattice identity fails; ``triple`` witnesses it."""

    def __init__(self, identity: str, triple: tuple, detail: str = ""):
        self.identity, self.triple = identity, tuple(triple)
        super().__init__(f"{identity} fails at {self.triple}" + (f": {detail}" if detail else ""))


class ElementCapExceeded(RuntimeError):
    def __init__(self, cap: int, arity: int | None = None):
        self.cap, self.arity = cap, arity
        where = f" at arity {arity}" if arity is not None else ""
        super().__init__(f"lattice exceeds the element cap of {cap}{where}")


def _popcount(x: int) -> int:
    return bin(x).count("1")


class DLattice:
    """Immutable finite bounded distributive lattice."""

    def __init__(self, n, *, encodings=None, carrier_sizes=None, meet=None, join=None,
                 labels=None, witnesses=None, bottom=None, top=None):
        self.n = n
        self.encodings: list[int] | None = encodings
        self.carrier_sizes: tuple[int, ...] | None = carrier_sizes
        self._meet = meet
        self._join = join
        self._labels = labels
        self.witnesses = witnesses if witnesses is not None else [None] * n
        if encodings is not None:
            self.full = (1 << sum(carrier_sizes)) - 1
            self.index = {e: i for i, e in enumerate(encodings)}
            if len(self.index) != n:
                raise ValueError("duplicate encodings")
            self.bottom = self.index[0]
            self.top = self.index[self.full]
        else:
            self.bottom, self.top = bottom, top
        self._jirr = None
        self._leq = None

    # -- basic structure ------------------------------------------------
    @property
    def encoded(self) -> bool:
        return self.encodings is not None

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"<DLattice {self.n} elements>"

    def meet(self, a: int, b: int) -> int:
        if self.encoded:
            return self.index[self.encodings[a] & self.encodings[b]]
        return int(self._meet[a, b])

    def join(self, a: int, b: int) -> int:
        if self.encoded:
            return self.index[self.encodings[a] | self.encodings[b]]
        return int(self._join[a, b])

    def leq(self, a: int, b: int) -> bool:
        if self.encoded:
            return self.encodings[a] & ~self.encodings[b] == 0
        return bool(self.leq_matrix[a, b])

    @property
    def leq_matrix(self) -> np.ndarray:
        if self._leq is None:
            if self.encoded:
                E = self.bit_matrix()
                self._leq = ((E.astype(np.int32) @ (~E).astype(np.int32).T) == 0)
            else:
                self._leq = self._meet == np.arange(self.n)[:, None]
        return self._leq

    def bit_matrix(self) -> np.ndarray:
        """``n x P`` boolean matrix of encodings (encoded lattices only)."""
        P = sum(self.carrier_sizes)
        out = np.zeros((self.n, P), dtype=bool)
        for i, e in enumerate(self.encodings):
            for p in range(P):
                if (e >> p) & 1:
                    out[i, p] = True
        return out

    def tables(self) -> tuple[np.ndarray, np.ndarray]:
        if self._meet is None:
            n = self.n
            meet = np.empty((n, n), dtype=np.int32)
            join = np.empty((n, n), dtype=np.int32)
            enc, idx = self.encodings, self.index
            for a in range(n):
                for b in range(a, n):
                    meet[a, b] = meet[b, a] = idx[enc[a] & enc[b]]
                    join[a, b] = join[b, a] = idx[enc[a] | enc[b]]
            self._meet, self._join = meet, join
        return self._meet, self._join

    def label(self, a: int) -> str:
        if self._labels is not None:
            return str(self._labels[a])
        w = self.witnesses[a]
        if isinstance(w, Formula):
            return to_text(w)
        if w is not None:
            return str(w)
        return self.encoding_text(a)

    def encoding_text(self, a: int) -> str:
        if not self.encoded:
            return str(a)
        parts, off = [], 0
        for size in self.carrier_sizes:
            seg = (self.encodings[a] >> off) & ((1 << size) - 1)
            parts.append("".join("1" if (seg >> i) & 1 else "0" for i in range(size)))
            off += size
        return "|".join(parts)

    def carrier_sets(self, a: int) -> list[set[int]]:
        """Element ``a`` as a vector of subsets of carrier positions."""
        out, off = [], 0
        for size in self.carrier_sizes:
            out.append({i for i in range(size) if (self.encodings[a] >> (off + i)) & 1})
            off += size
        return out

    def complement(self, a: int) -> int | None:
        if self.encoded:
            c = self.index.get(self.full ^ self.encodings[a])
            return c
        for b in range(self.n):
            if self.meet(a, b) == self.bottom and self.join(a, b) == self.top:
                return b
        return None

    def is_boolean(self) -> bool:
        return all(self.complement(a) is not None for a in range(self.n))

    # -- derived structure ----------------------------------------------
    def join_irreducibles(self) -> list[int]:
        if self._jirr is None:
            if self.encoded:
                self._jirr = sorted(set(self._meet_of_position().values()))
            else:
                L = self.leq_matrix
                out = []
                for j in range(self.n):
                    if j == self.bottom:
                        continue
                    below = [a for a in range(self.n) if L[a, j] and a != j]
                    covers = [a for a in below if not any(L[a, b] and a != b for b in below)]
                    if len(covers) == 1:
                        out.append(j)
                self._jirr = out
        return list(self._jirr)

    def _meet_of_position(self) -> dict[int, int]:
        """Position ``u`` -> index of the least element containing ``u``."""
        E = self.bit_matrix()
        P = E.shape[1]
        # m_u misses bit v iff some element contains u but not v
        miss = (E.T.astype(np.int32) @ (~E).astype(np.int32)) > 0
        out = {}
        for u in range(P):
            if not E[:, u].any():
                continue
            enc = 0
            for v in range(P):
                if not miss[u, v]:
                    enc |= 1 << v
            out[u] = self.index[enc]
        return out

    def position_types(self) -> list[int | None]:
        """For every carrier position, the join-irreducible generating its filter."""
        mp = self._meet_of_position()
        return [mp.get(u) for u in range(sum(self.carrier_sizes))]

    def prime_filters(self) -> list["PrimeFilter"]:
        L = self.leq_matrix
        return [PrimeFilter(frozenset(np.nonzero(L[j])[0].tolist()), j) for j in self.join_irreducibles()]

    def upset(self, a: int) -> frozenset[int]:
        return frozenset(np.nonzero(self.leq_matrix[a])[0].tolist())

    def opposite(self) -> "DLattice":
        wit = [_negate(w) for w in self.witnesses]
        labels = self._labels
        if self.encoded:
            enc = [self.full ^ e for e in self.encodings]
            L = DLattice(self.n, encodings=enc, carrier_sizes=self.carrier_sizes,
                         labels=labels, witnesses=wit)
        else:
            L = DLattice(self.n, meet=self._join, join=self._meet, labels=labels,
                         witnesses=wit, bottom=self.top, top=self.bottom)
        return L

    def validate(self) -> "DLattice":
        meet, join = self.tables()
        check_tables(meet, join)
        return self

    # -- export ---------------------------------------------------------
    def to_json(self) -> dict:
        meet, join = self.tables()
        d: dict[str, Any] = {
            "format": "pmt-lattice/1",
            "elements": [self.label(a) for a in range(self.n)],
            "bottom": self.bottom,
            "top": self.top,
            "meet": meet.tolist(),
            "join": join.tolist(),
        }
        if self.encoded:
            d["carrier_sizes"] = list(self.carrier_sizes)
            d["encodings"] = [self.encoding_text(a) for a in range(self.n)]
        if any(w is not None for w in self.witnesses):
            d["witnesses"] = [None if w is None else str(w) for w in self.witnesses]
        return d

    def covers(self) -> list[tuple[int, int]]:
        L = self.leq_matrix
        out = []
        for a in range(self.n):
            for b in range(self.n):
                if a != b and L[a, b]:
                    if not any(L[a, c] and L[c, b] and c not in (a, b) for c in range(self.n)):
                        out.append((a, b))
        return out

    def to_dot(self, name: str = "lattice") -> str:
        lines = [f"digraph {json.dumps(name)} {{", "  rankdir=BT;", "  node [shape=box];"]
        for a in range(self.n):
            lines.append(f"  e{a} [label={json.dumps(self.label(a))}];")
        for a, b in self.covers():
            lines.append(f"  e{a} -> e{b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _negate(w):
    if w is None:
        return None
    if isinstance(w, NegativeFormula):
        return w.body
    if isinstance(w, Formula):
        return NegativeFormula(w)
    return ("not", w) if not (isinstance(w, tuple) and w[:1] == ("not",)) else w[1]


@dataclass(frozen=True)
class PrimeFilter:
    """Set of element indices; ``generator`` is the least element ``j``."""

    members: frozenset[int]
    generator: int

    def __contains__(self, a: int) -> bool:
        return a in self.members

    def __len__(self) -> int:
        return len(self.members)

    def sorted(self) -> list[int]:
        return sorted(self.members)


@dataclass(frozen=True)
class LatticeHom:
    source: DLattice
    target: DLattice
    mapping: tuple[int, ...]

    def __call__(self, a: int) -> int:
        return self.mapping[a]

    def check(self) -> None:
        S, T, h = self.source, self.target, self.mapping
        if len(h) != S.n:
            raise ValueError("mapping must be total")
        if h[S.bottom] != T.bottom or h[S.top] != T.top:
            raise ValueError("bounds not preserved")
        for a in range(S.n):
            for b in range(a + 1, S.n):
                if h[S.meet(a, b)] != T.meet(h[a], h[b]):
                    raise ValueError(f"meet not preserved at ({a},{b})")
                if h[S.join(a, b)] != T.join(h[a], h[b]):
                    raise ValueError(f"join not preserved at ({a},{b})")

    def is_valid(self) -> bool:
        try:
            self.check()
        except ValueError:
            return False
        return True

    def is_isomorphism(self) -> bool:
        return self.is_valid() and len(set(self.mapping)) == self.target.n == self.source.n

    def then(self, g: "LatticeHom") -> "LatticeHom":
        return LatticeHom(self.source, g.target, tuple(g.mapping[x] for x in self.mapping))


# --------------------------------------------------------------------------
# Construction


def _from_closed(carrier_sizes, elems: dict[int, Any], cap: int = DEFAULT_CAP) -> DLattice:
    """Lattice from a closed family of encodings (with witness annotations)."""
    if len(elems) > cap:
        raise ElementCapExceeded(cap)
    sizes = tuple(carrier_sizes)

    def key(e):
        parts, off = [], 0
        for s in sizes:
            parts.append((e >> off) & ((1 << s) - 1))
            off += s
        return tuple(parts)

    order = sorted(elems, key=key)
    return DLattice(len(order), encodings=order, carrier_sizes=sizes,
                    witnesses=[elems[e] for e in order])


def close_family(full: int, gens: Sequence[tuple[int, Any]], cap: int = DEFAULT_CAP,
                 arity: int | None = None) -> dict[int, Any]:
    """Meet-closure then join-closure of ``gens`` with bounds; first witness wins."""
    meets: dict[int, Any] = {full: Top()}
    for e, w in gens:
        meets.setdefault(e, w)
    frontier = list(meets)
    while frontier:
        new = []
        for a in frontier:
            wa = meets[a]
            for e, w in gens:
                c = a & e
                if c not in meets:
                    meets[c] = conj(wa, w) if isinstance(wa, Formula) and isinstance(w, Formula) else None
                    new.append(c)
                    if len(meets) > cap:
                        raise ElementCapExceeded(cap, arity)
        frontier = new
    elems: dict[int, Any] = {0: Bottom()}
    for e, w in meets.items():
        elems.setdefault(e, w)
    mlist = list(meets.items())
    frontier = list(elems)
    while frontier:
        new = []
        for a in frontier:
            wa = elems[a]
            for e, w in mlist:
                c = a | e
                if c not in elems:
                    elems[c] = disj(wa, w) if isinstance(wa, Formula) and isinstance(w, Formula) else None
                    new.append(c)
                    if len(elems) > cap:
                        raise ElementCapExceeded(cap, arity)
        frontier = new
    return elems


def from_set_family(base: Sequence[Sequence], generators: Sequence[Sequence[Iterable]],
                    witnesses: Sequence[Formula] | None = None, cap: int = DEFAULT_CAP) -> DLattice:
    """Sublattice of the product of powersets generated by ``generators``.

    ``base`` lists the carriers; each generator gives one subset per carrier.
    Generator ``i`` is annotated with ``witnesses[i]`` (default: atom ``g{i}``).
    """
    sizes = [len(c) for c in base]
    pos = []
    off = 0
    for c in base:
        pos.append({x: off + i for i, x in enumerate(c)})
        off += len(c)
    gens = []
    for gi, g in enumerate(generators):
        g = list(g)
        if len(g) != len(base):
            raise ValueError(f"generator {gi} has {len(g)} components for {len(base)} carriers")
        enc = 0
        for ci, subset in enumerate(g):
            for x in subset:
                if x not in pos[ci]:
                    raise ValueError(f"generator {gi}: {x!r} not in carrier {ci}")
                enc |= 1 << pos[ci][x]
        w = witnesses[gi] if witnesses is not None else Atom(f"g{gi}")
        gens.append((enc, w))
    full = (1 << off) - 1
    return _from_closed(sizes, close_family(full, gens, cap), cap)


def check_tables(meet: np.ndarray, join: np.ndarray) -> tuple[int, int]:
    """Check lattice identities; returns (bottom, top) or raises LatticeAxiomError."""
    meet, join = np.asarray(meet), np.asarray(join)
    n = meet.shape[0]
    if meet.shape != (n, n) or join.shape != (n, n) or n == 0:
        raise LatticeAxiomError("square tables", ())
    if meet.min() < 0 or meet.max() >= n or join.min() < 0 or join.max() >= n:
        raise LatticeAxiomError("closure", ())
    r = np.arange(n)
    for name, T in (("meet", meet), ("join", join)):
        bad = np.argwhere(T != T.T)
        if len(bad):
            raise LatticeAxiomError(f"{name} commutativity", tuple(int(x) for x in bad[0]))
    for name, T in (("meet", meet), ("join", join)):
        bad = np.nonzero(T[r, r] != r)[0]
        if len(bad):
            raise LatticeAxiomError(f"{name} idempotence", (int(bad[0]),))
    for name, T in (("meet", meet), ("join", join)):
        lhs = T[T[:, :, None], r[None, None, :]]      # (a.b).c
        rhs = T[r[:, None, None], T[None, :, :]]      # a.(b.c)
        bad = np.argwhere(lhs != rhs)
        if len(bad):
            raise LatticeAxiomError(f"{name} associativity", tuple(int(x) for x in bad[0]))
    bad = np.argwhere(meet[r[:, None], join] != r[:, None])
    if len(bad):
        raise LatticeAxiomError("absorption a^(avb)=a", tuple(int(x) for x in bad[0]))
    bad = np.argwhere(join[r[:, None], meet] != r[:, None])
    if len(bad):
        raise LatticeAxiomError("absorption av(a^b)=a", tuple(int(x) for x in bad[0]))
    bots = [a for a in range(n) if np.all(meet[a] == a)]
    tops = [a for a in range(n) if np.all(join[a] == a)]
    if not bots or not tops:
        raise LatticeAxiomError("bounds", ())
    # a^(bvc) = (a^b)v(a^c)
    lhs = meet[r[:, None, None], join[None, :, :]]
    rhs = join[meet[:, :, None], meet[:, None, :]]
    bad = np.argwhere(lhs != rhs)
    if len(bad):
        raise LatticeAxiomError("distributivity", tuple(int(x) for x in bad[0]))
    return bots[0], tops[0]


def validate(meet, join, labels: Sequence[str] | None = None) -> DLattice:
    meet = np.asarray(meet, dtype=np.int32)
    join = np.asarray(join, dtype=np.int32)
    bot, top = check_tables(meet, join)
    return DLattice(meet.shape[0], meet=meet, join=join, labels=list(labels) if labels else None,
                    bottom=bot, top=top)


def prime_filters(L: DLattice) -> list[PrimeFilter]:
    return L.prime_filters()


def join_irreducibles(L: DLattice) -> list[int]:
    return L.join_irreducibles()


def opposite(L: DLattice) -> DLattice:
    return L.opposite()


def prime_filters_bruteforce(L: DLattice, max_elements: int = 20) -> list[frozenset[int]]:
    """Every subset passing the prime-filter axioms, by exhaustive scan."""
    n = L.n
    if n > max_elements:
        raise ValueError(f"{n} elements is too many for an exhaustive scan")
    meet, join = L.tables()
    subsets = np.arange(1 << n, dtype=np.int64)
    mem = ((subsets[:, None] >> np.arange(n)) & 1).astype(bool)
    ok = mem[:, L.top] & ~mem[:, L.bottom]
    for a in range(n):
        for b in range(n):
            m, j = meet[a, b], join[a, b]
            both = mem[:, a] & mem[:, b]
            ok &= ~both | mem[:, m]                         # meet closed
            ok &= ~mem[:, j] | mem[:, a] | mem[:, b]        # prime
            if m == a:                                      # a <= b: up-closed
                ok &= ~mem[:, a] | mem[:, b]
    out = [frozenset(np.nonzero(mem[s])[0].tolist()) for s in np.nonzero(ok)[0]]
    return sorted(out, key=lambda f: (len(f), sorted(f)))


# --------------------------------------------------------------------------
# Standard lattices


def chain(k: int) -> DLattice:
    """``k``-element chain as a set family on one carrier."""
    base = [list(range(k - 1))]
    gens = [[set(range(i, k - 1))] for i in range(1, k - 1)]
    return from_set_family(base, gens)


def boolean(k: int) -> DLattice:
    base = [list(range(k))]
    return from_set_family(base, [[{i}] for i in range(k)])


def free_dl2() -> DLattice:
    """Free bounded distributive lattice on x, y (6 elements)."""
    # one position per join-irreducible: x^y, x, y and the top
    base = [["xy", "x", "y", "top"]]
    return from_set_family(base, [[{"xy", "x"}], [{"xy", "y"}]], [Atom("x"), Atom("y")])


def product(L1: DLattice, L2: DLattice) -> DLattice:
    if not (L1.encoded and L2.encoded):
        raise ValueError("product is defined for encoded lattices")
    shift = sum(L1.carrier_sizes)
    elems = {}
    for a, b in itertools.product(range(L1.n), range(L2.n)):
        elems[L1.encodings[a] | (L2.encodings[b] << shift)] = None
    return _from_closed(L1.carrier_sizes + L2.carrier_sizes, elems, max(DEFAULT_CAP, len(elems)))


def from_json(data: dict | str, cap: int = DEFAULT_CAP) -> DLattice:
    """Load ``pmt-lattice/1`` JSON: either tables or carriers + generators."""
    if isinstance(data, str):
        data = json.loads(data)
    if data.get("format") != "pmt-lattice/1":
        raise ValueError("unsupported lattice format")
    if "meet" in data:
        return validate(data["meet"], data["join"], data.get("elements"))
    if "carriers" in data:
        gens = [[set(_tuplify(x) for x in comp) for comp in g] for g in data.get("generators", [])]
        base = [[_tuplify(x) for x in c] for c in data["carriers"]]
        return from_set_family(base, gens, cap=cap)
    raise ValueError("lattice JSON needs tables or carriers")


def _tuplify(x):
    return tuple(x) if isinstance(x, list) else x
