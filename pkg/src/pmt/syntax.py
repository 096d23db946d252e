"""Signatures, positive formulas, substitution, normal forms and Morleisation.

Formulas are immutable trees.  Free variables that live in a type-space
context are named ``x0, x1, ...``; bound variables may carry any name and
are compared up to alpha-renaming through :func:`alpha_key`.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "Signature", "Formula", "Bottom", "Top", "Atom", "Equal", "And", "Or",
    "Exists", "Not", "NegativeFormula", "HInductiveSentence", "OrdinalMap",
    "ParseError", "SubstitutionError", "MorleisationError", "Morleisation",
    "var", "var_index", "var_key", "free_vars", "all_vars", "is_positive",
    "conj", "disj", "rename_free", "substitute", "alpha_key", "alpha_equal",
    "pp_normal_form", "to_text", "parse_formula", "parse_fo_formula",
    "parse_axiom", "subformula_closure", "morleise", "variable_count",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_CANON_VAR = re.compile(r"x(\d+)\Z")
KEYWORDS = frozenset({
    "true", "false", "exists", "sig", "axiom", "model", "universe",
    "morleise", "pitype", "enumerate",
})


def var(i: int) -> str:
    return f"x{i}"


def var_index(name: str) -> int | None:
    m = _CANON_VAR.match(name)
    return int(m.group(1)) if m else None


def var_key(name: str) -> tuple:
    """Sort key putting x0, x1, ..., x10 in numeric order before other names."""
    i = var_index(name)
    return (0, i, name) if i is not None else (1, 0, name)


# --------------------------------------------------------------------------
# Signatures


@dataclass(frozen=True)
class Signature:
    """Purely relational signature; equality is implicit."""

    symbols: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        seen = set()
        for name, arity in self.symbols:
            if not _IDENT.match(name) or name in KEYWORDS:
                raise ValueError(f"invalid relation symbol name {name!r}")
            if name in seen:
                raise ValueError(f"duplicate relation symbol {name!r}")
            if not isinstance(arity, int) or arity < 0:
                raise ValueError(f"bad arity {arity!r} for {name!r}")
            seen.add(name)
        object.__setattr__(self, "symbols", tuple(sorted(self.symbols)))

    @classmethod
    def of(cls, **arities: int) -> "Signature":
        return cls(tuple(arities.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.symbols)

    def arity(self, name: str) -> int:
        for n, a in self.symbols:
            if n == name:
                return a
        raise KeyError(name)

    def __contains__(self, name: object) -> bool:
        return any(n == name for n, _ in self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def extend(self, more: Iterable[tuple[str, int]]) -> "Signature":
        return Signature(self.symbols + tuple(more))

    def to_text(self) -> str:
        return "sig " + " ".join(f"{n}/{a}" for n, a in self.symbols) + ";"


# --------------------------------------------------------------------------
# Formulas


class Formula:
    """Base class of formula nodes.  Hashes are cached; trees are shared."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)

    def __and__(self, other: "Formula") -> "Formula":
        return conj(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return disj(self, other)


def _cached_hash(self) -> int:
    h = self.__dict__.get("_h")
    if h is None:
        h = hash((type(self).__name__,) + tuple(
            getattr(self, f) for f in self.__dataclass_fields__ if f != "_h"))
        object.__setattr__(self, "_h", h)
    return h


@dataclass(frozen=True, eq=True)
class Bottom(Formula):
    __hash__ = _cached_hash


@dataclass(frozen=True, eq=True)
class Top(Formula):
    __hash__ = _cached_hash


@dataclass(frozen=True, eq=True)
class Atom(Formula):
    symbol: str
    args: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
    __hash__ = _cached_hash


@dataclass(frozen=True, eq=True)
class Equal(Formula):
    left: str
    right: str
    __hash__ = _cached_hash


@dataclass(frozen=True, eq=True)
class And(Formula):
    parts: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("And needs at least one conjunct")
    __hash__ = _cached_hash


@dataclass(frozen=True, eq=True)
class Or(Formula):
    parts: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("Or needs at least one disjunct")
    __hash__ = _cached_hash


@dataclass(frozen=True, eq=True)
class Exists(Formula):
    variable: str
    body: Formula
    __hash__ = _cached_hash


@dataclass(frozen=True, eq=True)
class Not(Formula):
    """Negation; only legal in first-order input to :func:`morleise`."""

    body: Formula
    __hash__ = _cached_hash


@dataclass(frozen=True)
class NegativeFormula:
    """A positive formula read negatively (an element of Pi)."""

    body: Formula

    def __post_init__(self):
        if not is_positive(self.body):
            raise ValueError("NegativeFormula must wrap a positive formula")

    def __str__(self) -> str:
        return "~" + _wrap(self.body, _NOT_CHILD)


@dataclass(frozen=True)
class HInductiveSentence:
    """``forall variables (antecedent -> consequent)``."""

    antecedent: Formula
    consequent: Formula
    variables: tuple[str, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        fv = free_vars(self.antecedent) | free_vars(self.consequent)
        if self.variables is None:
            object.__setattr__(self, "variables", tuple(sorted(fv, key=var_key)))
        else:
            object.__setattr__(self, "variables", tuple(self.variables))
            missing = fv - set(self.variables)
            if missing:
                raise ValueError(f"unquantified variables {sorted(missing)}")
        if not (is_positive(self.antecedent) and is_positive(self.consequent)):
            raise ValueError("h-inductive sentences relate positive formulas")

    def __str__(self) -> str:
        return f"axiom {to_text(self.antecedent)} -> {to_text(self.consequent)};"


@dataclass(frozen=True)
class OrdinalMap:
    """A function ``{0..source-1} -> {0..target-1}``."""

    source: int
    target: int
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) != self.source:
            raise ValueError("ordinal map must be total on its source")
        if any(not 0 <= v < self.target for v in self.values):
            raise ValueError("ordinal map value out of range")

    def __call__(self, i: int) -> int:
        return self.values[i]

    @classmethod
    def identity(cls, n: int) -> "OrdinalMap":
        return cls(n, n, tuple(range(n)))

    @classmethod
    def all_maps(cls, n: int, m: int) -> Iterator["OrdinalMap"]:
        for vals in itertools.product(range(m), repeat=n):
            yield cls(n, m, vals)

    def then(self, g: "OrdinalMap") -> "OrdinalMap":
        """Composite ``g o self``."""
        if g.source != self.target:
            raise ValueError("maps do not compose")
        return OrdinalMap(self.source, g.target, tuple(g.values[v] for v in self.values))


def conj(*parts: Formula) -> Formula:
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, Top):
            continue
        flat.extend(p.parts if isinstance(p, And) else (p,))
    if any(isinstance(p, Bottom) for p in flat):
        return Bottom()
    if not flat:
        return Top()
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*parts: Formula) -> Formula:
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, Bottom):
            continue
        flat.extend(p.parts if isinstance(p, Or) else (p,))
    if any(isinstance(p, Top) for p in flat):
        return Top()
    if not flat:
        return Bottom()
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


_FV_CACHE: dict[int, tuple[Formula, frozenset]] = {}


def free_vars(phi: Formula) -> frozenset[str]:
    fv = phi.__dict__.get("_fv")
    if fv is not None:
        return fv
    if isinstance(phi, (Bottom, Top)):
        fv = frozenset()
    elif isinstance(phi, Atom):
        fv = frozenset(phi.args)
    elif isinstance(phi, Equal):
        fv = frozenset((phi.left, phi.right))
    elif isinstance(phi, (And, Or)):
        fv = frozenset().union(*(free_vars(p) for p in phi.parts))
    elif isinstance(phi, Exists):
        fv = free_vars(phi.body) - {phi.variable}
    elif isinstance(phi, Not):
        fv = free_vars(phi.body)
    else:
        raise TypeError(f"not a formula: {phi!r}")
    object.__setattr__(phi, "_fv", fv)
    return fv


def all_vars(phi: Formula) -> set[str]:
    if isinstance(phi, (Bottom, Top)):
        return set()
    if isinstance(phi, Atom):
        return set(phi.args)
    if isinstance(phi, Equal):
        return {phi.left, phi.right}
    if isinstance(phi, (And, Or)):
        return set().union(*(all_vars(p) for p in phi.parts))
    if isinstance(phi, Exists):
        return all_vars(phi.body) | {phi.variable}
    if isinstance(phi, Not):
        return all_vars(phi.body)
    raise TypeError(f"not a formula: {phi!r}")


def is_positive(phi: Formula) -> bool:
    if isinstance(phi, Not):
        return False
    if isinstance(phi, (And, Or)):
        return all(is_positive(p) for p in phi.parts)
    if isinstance(phi, Exists):
        return is_positive(phi.body)
    return isinstance(phi, Formula)


def check_formula(phi: Formula, sig: Signature) -> None:
    """Raise ``ValueError`` if an atom is unknown or has the wrong arity."""
    if isinstance(phi, Atom):
        if phi.symbol not in sig:
            raise ValueError(f"unknown relation symbol {phi.symbol!r}")
        if sig.arity(phi.symbol) != len(phi.args):
            raise ValueError(
                f"{phi.symbol} has arity {sig.arity(phi.symbol)}, got {len(phi.args)} arguments")
    elif isinstance(phi, (And, Or)):
        for p in phi.parts:
            check_formula(p, sig)
    elif isinstance(phi, (Exists, Not)):
        check_formula(phi.body, sig)


def _fresh(base: str, avoid: set[str]) -> str:
    stem = re.sub(r"\d+\Z", "", base) or "y"
    if var_index(base) is not None:
        stem = "y"
    for i in itertools.count():
        cand = f"{stem}{i}"
        if cand not in avoid:
            return cand
    raise AssertionError


def rename_free(phi: Formula, mapping: Mapping[str, str]) -> Formula:
    """Simultaneously rename free variables, renaming binders to avoid capture."""
    if not mapping:
        return phi
    if isinstance(phi, (Bottom, Top)):
        return phi
    if isinstance(phi, Atom):
        return Atom(phi.symbol, tuple(mapping.get(a, a) for a in phi.args))
    if isinstance(phi, Equal):
        return Equal(mapping.get(phi.left, phi.left), mapping.get(phi.right, phi.right))
    if isinstance(phi, And):
        return And(tuple(rename_free(p, mapping) for p in phi.parts))
    if isinstance(phi, Or):
        return Or(tuple(rename_free(p, mapping) for p in phi.parts))
    if isinstance(phi, Not):
        return Not(rename_free(phi.body, mapping))
    if isinstance(phi, Exists):
        v = phi.variable
        body_fv = free_vars(phi.body) - {v}
        inner = {k: val for k, val in mapping.items() if k != v and k in body_fv}
        incoming = {inner.get(u, u) for u in body_fv}
        if v in incoming:
            nv = _fresh(v, incoming | all_vars(phi.body) | set(inner.values()))
            inner[v] = nv
            v = nv
        return Exists(v, rename_free(phi.body, inner))
    raise TypeError(f"not a formula: {phi!r}")


class SubstitutionError(ValueError):
    pass


def substitute(phi: Formula, f: OrdinalMap) -> Formula:
    """Replace ``x_i`` by ``x_{f(i)}``; free variables must be among x0..x_{n-1}."""
    for v in free_vars(phi):
        i = var_index(v)
        if i is None or i >= f.source:
            raise SubstitutionError(f"free variable {v} outside x0..x{f.source - 1}")
    return rename_free(phi, {var(i): var(f.values[i]) for i in range(f.source)})


def alpha_key(phi: Formula) -> Formula:
    """Canonical representative: bound variables renamed ``_0, _1, ...`` in order."""
    counter = itertools.count()

    def go(p: Formula, env: dict[str, str]) -> Formula:
        if isinstance(p, (Bottom, Top)):
            return p
        if isinstance(p, Atom):
            return Atom(p.symbol, tuple(env.get(a, a) for a in p.args))
        if isinstance(p, Equal):
            return Equal(env.get(p.left, p.left), env.get(p.right, p.right))
        if isinstance(p, And):
            return And(tuple(go(q, env) for q in p.parts))
        if isinstance(p, Or):
            return Or(tuple(go(q, env) for q in p.parts))
        if isinstance(p, Not):
            return Not(go(p.body, env))
        if isinstance(p, Exists):
            nv = f"_{next(counter)}"
            return Exists(nv, go(p.body, {**env, p.variable: nv}))
        raise TypeError(p)

    return go(phi, {})


def alpha_equal(a: Formula, b: Formula) -> bool:
    return alpha_key(a) == alpha_key(b)


def variable_count(phi: Formula) -> int:
    """Variables (free plus bound) used by the widest pp disjunct of ``phi``."""
    best = 0
    for pp in _pp_terms(phi):
        bound, atoms = pp
        used = set()
        for a in atoms:
            used |= free_vars(a)
        best = max(best, len(used | set(bound) | free_vars(phi)))
    return max(best, len(free_vars(phi)))


# --------------------------------------------------------------------------
# primitive-positive normal form


def _rename_apart(phi: Formula) -> Formula:
    """Make every binder distinct and distinct from the free variables."""
    used = set(free_vars(phi))

    def go(p: Formula, env: dict[str, str]) -> Formula:
        if isinstance(p, (Bottom, Top)):
            return p
        if isinstance(p, Atom):
            return Atom(p.symbol, tuple(env.get(a, a) for a in p.args))
        if isinstance(p, Equal):
            return Equal(env.get(p.left, p.left), env.get(p.right, p.right))
        if isinstance(p, And):
            return And(tuple(go(q, env) for q in p.parts))
        if isinstance(p, Or):
            return Or(tuple(go(q, env) for q in p.parts))
        if isinstance(p, Exists):
            v = p.variable
            nv = v if v not in used else _fresh(v, used | all_vars(phi))
            used.add(nv)
            return Exists(nv, go(p.body, {**env, v: nv}))
        raise ValueError("pp normal form needs a positive formula")

    return go(phi, {})


def _pp_terms(phi: Formula) -> list[tuple[tuple[str, ...], tuple[Formula, ...]]]:
    phi = _rename_apart(phi)

    def go(p: Formula) -> list[tuple[tuple[str, ...], tuple[Formula, ...]]]:
        if isinstance(p, Bottom):
            return []
        if isinstance(p, Top):
            return [((), ())]
        if isinstance(p, (Atom, Equal)):
            return [((), (p,))]
        if isinstance(p, Or):
            return [t for q in p.parts for t in go(q)]
        if isinstance(p, And):
            acc = [((), ())]
            for q in p.parts:
                acc = [(b1 + b2, a1 + a2) for b1, a1 in acc for b2, a2 in go(q)]
            return acc
        if isinstance(p, Exists):
            out = []
            for b, atoms in go(p.body):
                if any(p.variable in free_vars(a) for a in atoms):
                    b = (p.variable,) + b
                out.append((b, atoms))
            return out
        raise ValueError("pp normal form needs a positive formula")

    return go(phi)


def pp_normal_form(phi: Formula) -> list[Formula]:
    """Disjuncts ``exists y1..yk. (a1 & ... & am)`` whose disjunction is ``phi``."""
    out = []
    for bound, atoms in _pp_terms(phi):
        body = conj(*atoms) if atoms else Top()
        for v in reversed(bound):
            body = Exists(v, body)
        out.append(body)
    return out


# --------------------------------------------------------------------------
# Printing

_TOP, _OR_CHILD, _AND_CHILD, _NOT_CHILD = range(4)


def _wrap(phi: Formula, ctx: int) -> str:
    s = to_text(phi)
    if isinstance(phi, Exists) and ctx != _TOP:
        return f"({s})"
    if isinstance(phi, Or) and ctx in (_OR_CHILD, _AND_CHILD, _NOT_CHILD):
        return f"({s})"
    if isinstance(phi, And) and ctx in (_AND_CHILD, _NOT_CHILD):
        return f"({s})"
    if isinstance(phi, Equal) and ctx == _NOT_CHILD:
        return f"({s})"
    return s


def to_text(phi: Formula) -> str:
    """Canonical concrete syntax; re-parses to an equal tree."""
    if isinstance(phi, Bottom):
        return "false"
    if isinstance(phi, Top):
        return "true"
    if isinstance(phi, Atom):
        return phi.symbol if not phi.args else f"{phi.symbol}({','.join(phi.args)})"
    if isinstance(phi, Equal):
        return f"{phi.left} = {phi.right}"
    if isinstance(phi, And):
        return " & ".join(_wrap(p, _AND_CHILD) for p in phi.parts)
    if isinstance(phi, Or):
        return " | ".join(_wrap(p, _OR_CHILD) for p in phi.parts)
    if isinstance(phi, Exists):
        return f"exists {phi.variable}. {to_text(phi.body)}"
    if isinstance(phi, Not):
        return "~" + _wrap(phi.body, _NOT_CHILD)
    raise TypeError(f"not a formula: {phi!r}")


# --------------------------------------------------------------------------
# Lexing and parsing


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message, self.line, self.col = message, line, col
        super().__init__(f"{line}:{col}: {message}" if line else message)


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, INT, PUNCT, EOF
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
  | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<INT>\d+)
  | (?P<PUNCT>->|[()\[\]{},.;&|=~/])
""", re.VERBOSE)


def tokenize(text: str) -> list[Token]:
    tokens, line, line_start, pos = [], 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


class Parser:
    """Recursive-descent parser over a token list; shared with the file DSL."""

    def __init__(self, text: str, sig: Signature | None = None, *, allow_not: bool = False):
        self.toks = tokenize(text)
        self.i = 0
        self.sig = sig
        self.allow_not = allow_not

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        t = tok or self.tok
        return ParseError(msg, t.line, t.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind != "EOF"

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self, what: str = "identifier") -> str:
        t = self.tok
        if t.kind != "IDENT" or t.text in KEYWORDS:
            raise self.error(f"expected {what}, found {t.text or 'end of input'!r}")
        self.i += 1
        return t.text

    def integer(self) -> int:
        t = self.tok
        if t.kind != "INT":
            raise self.error(f"expected integer, found {t.text or 'end of input'!r}")
        self.i += 1
        return int(t.text)

    def done(self) -> None:
        if self.tok.kind != "EOF":
            raise self.error(f"unexpected {self.tok.text!r}")

    # formula := disj ; disj := conj ('|' conj)* ; conj := unary ('&' unary)*
    def formula(self) -> Formula:
        parts = [self.conjunction()]
        while self.accept("|"):
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self) -> Formula:
        parts = [self.unary()]
        while self.accept("&"):
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self) -> Formula:
        t = self.tok
        if self.accept("exists"):
            v = self.ident("variable")
            self.expect(".")
            return Exists(v, self.formula())
        if self.accept("~"):
            if not self.allow_not:
                raise self.error("negation is not allowed in positive formulas", t)
            return Not(self.unary())
        if self.accept("("):
            phi = self.formula()
            self.expect(")")
            return phi
        if self.accept("true"):
            return Top()
        if self.accept("false"):
            return Bottom()
        name = self.ident("formula")
        if self.accept("="):
            return Equal(name, self.ident("variable"))
        args: list[str] = []
        if self.accept("("):
            if not self.at(")"):
                args.append(self.ident("variable"))
                while self.accept(","):
                    args.append(self.ident("variable"))
            self.expect(")")
        if self.sig is not None:
            if name not in self.sig:
                raise self.error(f"unknown relation symbol {name!r}", t)
            if self.sig.arity(name) != len(args):
                raise self.error(
                    f"arity mismatch: {name} has arity {self.sig.arity(name)}, "
                    f"got {len(args)} argument(s)", t)
        return Atom(name, tuple(args))


def parse_formula(text: str, sig: Signature | None = None) -> Formula:
    p = Parser(text, sig)
    phi = p.formula()
    p.done()
    return phi


def parse_fo_formula(text: str, sig: Signature | None = None) -> Formula:
    """Like :func:`parse_formula` but accepts ``~`` (first-order input)."""
    p = Parser(text, sig, allow_not=True)
    phi = p.formula()
    p.done()
    return phi


def parse_axiom(text: str, sig: Signature | None = None) -> HInductiveSentence:
    """Parse ``phi -> psi`` (optionally prefixed by ``axiom`` and ending in ``;``)."""
    p = Parser(text, sig)
    p.accept("axiom")
    ante = p.formula()
    p.expect("->")
    cons = p.formula()
    p.accept(";")
    p.done()
    return HInductiveSentence(ante, cons)


# --------------------------------------------------------------------------
# Morleisation


class MorleisationError(ValueError):
    pass


def _immediate_subformulas(phi: Formula) -> tuple[Formula, ...]:
    if isinstance(phi, (And, Or)):
        return phi.parts
    if isinstance(phi, (Exists, Not)):
        return (phi.body,)
    return ()


def subformula_closure(formulas: Iterable[Formula]) -> list[Formula]:
    """Close under immediate subformulas and single negation, deterministically."""
    out: dict[Formula, None] = {}
    todo = list(formulas)
    while todo:
        phi = todo.pop()
        if phi in out:
            continue
        out[phi] = None
        todo.extend(_immediate_subformulas(phi))
        if not isinstance(phi, Not):
            todo.append(Not(phi))
    return sorted(out, key=to_text)


@dataclass(frozen=True)
class Morleisation:
    signature: Signature
    axioms: tuple[HInductiveSentence, ...]
    symbol_of: tuple[tuple[Formula, str], ...]

    def symbol(self, phi: Formula) -> str:
        for f, s in self.symbol_of:
            if f == phi:
                return s
        raise KeyError(to_text(phi))

    @property
    def new_symbols(self) -> tuple[str, ...]:
        return tuple(s for _, s in self.symbol_of)


def morleise(formulas: Iterable[Formula], sig: Signature) -> Morleisation:
    """Add a symbol per listed first-order formula plus linking h-inductive axioms.

    ``R_phi <-> R_psi`` equivalences are split into two sentences; negation is
    rendered by ``T -> R_phi | R_~phi`` and ``R_phi & R_~phi -> F``.
    """
    fs = sorted(set(formulas), key=to_text)
    fset = set(fs)
    for phi in fs:
        check_formula(phi, sig)
        for sub in _immediate_subformulas(phi):
            if sub not in fset:
                raise MorleisationError(
                    f"not subformula-closed: {to_text(sub)} missing (from {to_text(phi)})")
        if not isinstance(phi, Not) and Not(phi) not in fset:
            raise MorleisationError(f"not closed under negation: ~({to_text(phi)}) missing")

    names: dict[Formula, str] = {}
    for i, phi in enumerate(fs):
        name = f"M{i}"
        while name in sig:
            name = "_" + name
        names[phi] = name

    def atom(phi: Formula) -> Formula:
        return Atom(names[phi], tuple(sorted(free_vars(phi), key=var_key)))

    axioms: list[HInductiveSentence] = []

    def iff(a: Formula, b: Formula, xs: tuple[str, ...]) -> None:
        axioms.append(HInductiveSentence(a, b, xs))
        axioms.append(HInductiveSentence(b, a, xs))

    for phi in fs:
        xs = tuple(sorted(free_vars(phi), key=var_key))
        r = atom(phi)
        if isinstance(phi, Top):
            axioms.append(HInductiveSentence(Top(), r, xs))
        elif isinstance(phi, Bottom):
            axioms.append(HInductiveSentence(r, Bottom(), xs))
        elif isinstance(phi, (Atom, Equal)):
            iff(r, phi, xs)
        elif isinstance(phi, And):
            iff(r, And(tuple(atom(p) for p in phi.parts)), xs)
        elif isinstance(phi, Or):
            iff(r, Or(tuple(atom(p) for p in phi.parts)), xs)
        elif isinstance(phi, Exists):
            inner = atom(phi.body)
            body = Exists(phi.variable, inner) if phi.variable in free_vars(phi.body) else inner
            iff(r, body, xs)
        elif isinstance(phi, Not):
            pos = atom(phi.body)
            axioms.append(HInductiveSentence(Top(), Or((pos, r)), xs))
            axioms.append(HInductiveSentence(And((pos, r)), Bottom(), xs))
    new_sig = sig.extend((names[phi], len(free_vars(phi))) for phi in fs)
    return Morleisation(new_sig, tuple(axioms), tuple((phi, names[phi]) for phi in fs))
