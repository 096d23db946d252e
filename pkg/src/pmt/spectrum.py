"""Spectral spaces of finite distributive lattices.

Points are prime filters, indexed in the lattice's prime-filter order; point
sets are Python-int bitmasks over point indices.  In a finite spectrum every
open set is a basic open ``[a]``, so the topology is carried by the basis.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .dlattice import DLattice, LatticeHom, PrimeFilter, _from_closed

__all__ = [
    "SpectralSpace", "SpectralMap", "Component", "NotIrreducibleError",
    "spec", "closure", "interior", "irreducible_components", "generic_point",
    "is_hausdorff", "compact_opens", "hochster_dual", "spectral_map_from_hom",
    "mask", "members", "round_trip_points",
]


def mask(points: Iterable[int]) -> int:
    m = 0
    for p in points:
        m |= 1 << p
    return m


def members(m: int) -> list[int]:
    out, i = [], 0
    while m:
        if m & 1:
            out.append(i)
        m >>= 1
        i += 1
    return out


class NotIrreducibleError(ValueError):
    pass


@dataclass(frozen=True)
class Component:
    generic: int
    points: int  # mask

    def members(self) -> list[int]:
        return members(self.points)


class SpectralSpace:
    """``spec(L)``: prime filters of ``L`` with basic opens ``[a]``."""

    def __init__(self, lattice: DLattice):
        self.lattice = L = lattice
        self.points: list[PrimeFilter] = L.prime_filters()
        self.k = len(self.points)
        self.all = (1 << self.k) - 1
        leq = L.leq_matrix
        gens = [p.generator for p in self.points]
        self.opens: list[int] = [mask(i for i, j in enumerate(gens) if leq[j, a]) for a in range(L.n)]
        self._open_set = set(self.opens)
        # below[p] = {q : q subset of p}, i.e. closure of {p}
        self.below = [mask(q for q, jq in enumerate(gens) if leq[jp, jq]) for jp in gens]
        self._components = None
        self._pt_closure = None
        self._nbhd = None

    def point_closures(self) -> list[int]:
        """Closure of each singleton, computed from the basis."""
        if self._pt_closure is None:
            self._pt_closure = [self.closure(1 << p) for p in range(self.k)]
        return self._pt_closure

    def smallest_open(self, p: int) -> int:
        """Intersection of all opens containing ``p``."""
        if self._nbhd is None:
            nb = []
            for q in range(self.k):
                u = self.all
                for o in self._open_set:
                    if (o >> q) & 1:
                        u &= o
                nb.append(u)
            self._nbhd = nb
        return self._nbhd[p]

    def __repr__(self) -> str:
        return f"<SpectralSpace {self.k} points>"

    def __len__(self) -> int:
        return self.k

    def point_of_filter(self, members_: Iterable[int]) -> int:
        target = frozenset(members_)
        for i, p in enumerate(self.points):
            if p.members == target:
                return i
        raise KeyError("not a point of this space")

    def point_of_generator(self, j: int) -> int:
        for i, p in enumerate(self.points):
            if p.generator == j:
                return i
        raise KeyError(j)

    def is_open(self, A: int) -> bool:
        return A in self._open_set

    def is_closed(self, A: int) -> bool:
        return (self.all ^ A) in self._open_set

    def closure(self, A: int) -> int:
        u = 0
        for o in self.opens:
            if o & A == 0:
                u |= o
        return self.all ^ u

    def interior(self, A: int) -> int:
        u = 0
        for o in self.opens:
            if o & ~A == 0:
                u |= o
        return u

    def point_closure(self, p: int) -> int:
        return self.below[p]

    def specializes(self, q: int, p: int) -> bool:
        """``q`` lies in the closure of ``p`` (``q`` is a subset of ``p``)."""
        return bool((self.below[p] >> q) & 1)

    def maximal_points(self) -> list[int]:
        return [p for p in range(self.k)
                if not any(q != p and self.specializes(p, q) for q in range(self.k))]

    def is_irreducible(self, C: int) -> bool:
        """Nonempty and any two nonempty relatively open subsets meet."""
        if C == 0:
            return False
        pts = members(C)
        return all(self.smallest_open(p) & self.smallest_open(q) & C for p in pts for q in pts)

    def components(self) -> list[Component]:
        if self._components is None:
            self._components = [Component(p, self.below[p]) for p in self.maximal_points()]
        return list(self._components)

    def generic_point(self, C: int) -> int:
        if not self.is_closed(C):
            raise NotIrreducibleError("set is not closed")
        if not self.is_irreducible(C):
            raise NotIrreducibleError("set is not irreducible")
        found = [p for p in members(C) if self.below[p] == C]
        if len(found) != 1:
            raise NotIrreducibleError(f"{len(found)} generic points")
        return found[0]

    def is_t0(self) -> bool:
        return len({self.smallest_open(p) for p in range(self.k)}) == self.k

    def is_sober(self) -> bool:
        for o in self._open_set:
            C = self.all ^ o
            if self.is_irreducible(C):
                if sum(1 for p in members(C) if self.point_closures()[p] == C) != 1:
                    return False
        return True

    def hausdorff_report(self) -> dict:
        # p, q have disjoint neighbourhoods iff their smallest opens are disjoint
        separated = all(not (self.smallest_open(p) & self.smallest_open(q))
                        for p in range(self.k) for q in range(p + 1, self.k))
        complemented = self.lattice.is_boolean()
        return {"separated": separated, "complemented": complemented}

    def is_hausdorff(self) -> bool:
        rep = self.hausdorff_report()
        if rep["separated"] != rep["complemented"]:
            raise AssertionError(f"Hausdorff criteria disagree: {rep}")
        return rep["separated"]

    def components_disjoint(self) -> tuple[bool, tuple[int, int, int] | None]:
        """Whether components are pairwise disjoint; else (shared point, g1, g2)."""
        comps = self.components()
        for i, c in enumerate(comps):
            for d in comps[i + 1:]:
                common = c.points & d.points
                if common:
                    return False, (members(common)[0], c.generic, d.generic)
        return True, None

    def is_dense(self, A: int) -> bool:
        return self.closure(A) == self.all

    def dense_opens(self) -> list[int]:
        return sorted(a for a, o in enumerate(self.opens) if self.is_dense(o))

    def baire_check(self) -> bool:
        """The intersection of all dense open sets is dense."""
        inter = self.all
        for a in self.dense_opens():
            inter &= self.opens[a]
        return self.is_dense(inter)

    def somewhere_dense_points(self) -> int:
        return mask(p for p in range(self.k) if self.interior(self.below[p]))

    # -- export ---------------------------------------------------------
    def flags(self) -> dict:
        return {"t0": self.is_t0(), "sober": self.is_sober(), "hausdorff": self.is_hausdorff()}

    def to_json(self) -> dict:
        L = self.lattice
        return {
            "points": [{"id": f"p{i}", "filter": p.sorted(), "generator": p.generator,
                        "generator_label": L.label(p.generator)} for i, p in enumerate(self.points)],
            "opens": [{"element": a, "label": L.label(a), "points": members(o)}
                      for a, o in enumerate(self.opens)],
            "components": [{"generic": f"p{c.generic}", "points": [f"p{q}" for q in c.members()]}
                           for c in self.components()],
            "flags": self.flags(),
        }

    def specialization_edges(self) -> list[tuple[int, int]]:
        """Covering pairs ``(q, p)`` with ``q`` in the closure of ``p``."""
        out = []
        for p in range(self.k):
            for q in members(self.below[p]):
                if q == p:
                    continue
                if not any(r not in (p, q) and self.specializes(q, r) and self.specializes(r, p)
                           for r in range(self.k)):
                    out.append((q, p))
        return sorted(out)

    def to_dot(self, name: str = "spectrum") -> str:
        L = self.lattice
        comps = self.components()
        lines = [f"digraph {json.dumps(name)} {{", "  rankdir=BT;", "  node [shape=ellipse];"]
        placed = set()
        for ci, c in enumerate(comps):
            own = [q for q in c.members()
                   if sum(1 for d in comps if (d.points >> q) & 1) == 1]
            lines.append(f"  subgraph cluster_{ci} {{")
            lines.append(f"    label={json.dumps('component of p%d' % c.generic)};")
            for q in own:
                lines.append("    " + self._dot_node(q, q == c.generic, L))
                placed.add(q)
            lines.append("  }")
        for q in range(self.k):
            if q not in placed:
                lines.append("  " + self._dot_node(q, any(c.generic == q for c in comps), L))
        for q, p in self.specialization_edges():
            lines.append(f"  p{q} -> p{p};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def _dot_node(self, q: int, generic: bool, L: DLattice) -> str:
        label = f"p{q}: up({L.label(self.points[q].generator)})"
        style = ", peripheries=2, style=bold" if generic else ""
        return f"p{q} [label={json.dumps(label)}{style}];"


@dataclass(frozen=True)
class SpectralMap:
    source: SpectralSpace
    target: SpectralSpace
    mapping: tuple[int, ...]

    def __call__(self, p: int) -> int:
        return self.mapping[p]

    def image(self, A: int) -> int:
        return mask(self.mapping[p] for p in members(A))

    def preimage(self, B: int) -> int:
        return mask(p for p, q in enumerate(self.mapping) if (B >> q) & 1)

    def is_continuous(self) -> bool:
        return all(self.source.is_open(self.preimage(o)) for o in self.target._open_set)

    is_spectral = is_continuous  # finite: every open is compact

    def openness_report(self) -> dict:
        bad = [a for a, o in enumerate(self.source.opens) if not self.target.is_open(self.image(o))]
        return {"open": not bad, "non_open_images": bad}

    def is_open(self) -> bool:
        return self.openness_report()["open"]

    def then(self, g: "SpectralMap") -> "SpectralMap":
        """``g o self``."""
        return SpectralMap(self.source, g.target, tuple(g.mapping[q] for q in self.mapping))

    def is_homeomorphism(self) -> bool:
        if len(set(self.mapping)) != self.source.k or self.source.k != self.target.k:
            return False
        return self.is_continuous() and self.is_open()


def spec(L: DLattice) -> SpectralSpace:
    return SpectralSpace(L)


def closure(S: SpectralSpace, A: int) -> int:
    return S.closure(A)


def interior(S: SpectralSpace, A: int) -> int:
    return S.interior(A)


def irreducible_components(S: SpectralSpace) -> list[int]:
    return [c.points for c in S.components()]


def generic_point(S: SpectralSpace, C: int) -> int:
    return S.generic_point(C)


def is_hausdorff(S: SpectralSpace) -> bool:
    return S.is_hausdorff()


def compact_opens(S: SpectralSpace) -> tuple[DLattice, LatticeHom]:
    """Lattice of (compact) opens, with the natural map ``a -> [a]``."""
    opens = sorted(S._open_set)
    elems = {o: None for o in opens}
    K = _from_closed((S.k,), elems, cap=max(len(elems), 1))
    K.witnesses = [None] * K.n
    hom = LatticeHom(S.lattice, K, tuple(K.index[o] for o in S.opens))
    return K, hom


def round_trip_points(S: SpectralSpace) -> SpectralMap:
    """``S -> spec(compact_opens(S))``, ``p -> {opens containing p}``."""
    K, _ = compact_opens(S)
    T = spec(K)
    m = []
    for p in range(S.k):
        f = [a for a in range(K.n) if (K.encodings[a] >> p) & 1]
        m.append(T.point_of_filter(f))
    return SpectralMap(S, T, tuple(m))


def hochster_dual(S: SpectralSpace) -> SpectralSpace:
    return spec(S.lattice.opposite())


def spectral_map_from_hom(h: LatticeHom, source: SpectralSpace | None = None,
                          target: SpectralSpace | None = None) -> SpectralMap:
    """``spec(h.target) -> spec(h.source)``, ``p -> h^{-1}(p)``."""
    S = source if source is not None else spec(h.target)
    T = target if target is not None else spec(h.source)
    m = []
    for p in S.points:
        pre = frozenset(a for a in range(h.source.n) if h.mapping[a] in p.members)
        try:
            m.append(T.point_of_filter(pre))
        except KeyError:
            raise AssertionError("preimage of a prime filter is not prime; broken hom") from None
    return SpectralMap(S, T, tuple(m))
