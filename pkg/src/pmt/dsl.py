"""Theory files: signature, models, axioms, Morleisation and Pi-type blocks.

    sig P/1 Q/1 B/0;
    model N1 { universe 1; P = {(0)}; B = true; }
    axiom P(x) & Q(x) -> false;
    enumerate 4;                 # add all models of the axioms up to size 4
    morleise P(x), exists y. Q(y);
    pitype neither(x0) { ~P(x0); ~Q(x0); }

Statements may appear in any order; ``sig`` must come first.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .semantics import Evaluator, FiniteStructure, ModelClass, are_isomorphic, find_models, satisfies_axiom
from .syntax import (
    Formula, HInductiveSentence, Morleisation, NegativeFormula, Parser, ParseError,
    Signature, check_formula, free_vars, morleise, rename_free, subformula_closure, var,
    var_key,
)

__all__ = ["Theory", "PiBlock", "parse_theory", "load_theory", "parse_structure"]


@dataclass(frozen=True)
class PiBlock:
    name: str
    arity: int
    formulas: tuple[Formula, ...]

    def negatives(self) -> list[NegativeFormula]:
        return [NegativeFormula(f) for f in self.formulas]


@dataclass
class Theory:
    signature: Signature
    models: list[FiniteStructure]
    axioms: list[HInductiveSentence]
    pitypes: list[PiBlock] = field(default_factory=list)
    morleisation: Morleisation | None = None
    enumerate_size: int | None = None

    def model_class(self) -> ModelClass:
        return ModelClass(self.signature, tuple(self.models), tuple(self.axioms))

    def pitype(self, name: str) -> PiBlock:
        for p in self.pitypes:
            if p.name == name:
                return p
        raise KeyError(f"no pitype named {name!r}")


class _TheoryParser(Parser):
    def __init__(self, text: str):
        super().__init__(text)
        self.sig: Signature | None = None

    def statement_sig(self):
        start = self.expect("sig")
        if self.sig is not None:
            raise self.error("signature declared twice", start)
        syms = []
        while not self.at(";"):
            t = self.tok
            name = self.ident("relation symbol")
            self.expect("/")
            ar = self.integer()
            if any(n == name for n, _ in syms):
                raise self.error(f"duplicate relation symbol {name!r}", t)
            syms.append((name, ar))
        self.expect(";")
        self.sig = Signature(tuple(syms))

    def need_sig(self):
        if self.sig is None:
            raise self.error("'sig' must come before other statements")

    def statement_model(self) -> FiniteStructure:
        start = self.expect("model")
        self.need_sig()
        name = self.ident("model name")
        self.expect("{")
        self.expect("universe")
        size_tok = self.tok
        size = self.integer()
        if size < 1:
            raise self.error("universes are nonempty", size_tok)
        self.expect(";")
        rels: dict[str, set] = {}
        while not self.at("}"):
            t = self.tok
            sym = self.ident("relation symbol")
            if sym not in self.sig:
                raise self.error(f"unknown relation symbol {sym!r}", t)
            if sym in rels:
                raise self.error(f"{sym} assigned twice", t)
            ar = self.sig.arity(sym)
            self.expect("=")
            rels[sym] = self.relation_value(ar, size)
            self.expect(";")
        self.expect("}")
        try:
            return FiniteStructure(self.sig, size, rels, name)
        except ValueError as e:
            raise self.error(str(e), start) from None

    def relation_value(self, ar: int, size: int) -> set:
        if self.accept("true"):
            if ar:
                raise self.error("'true' only for arity-0 symbols")
            return {()}
        if self.accept("false"):
            if ar:
                raise self.error("'false' only for arity-0 symbols")
            return set()
        self.expect("{")
        out = set()
        while not self.at("}"):
            t = self.tok
            self.expect("(")
            tup = []
            if not self.at(")"):
                tup.append(self.integer())
                while self.accept(","):
                    tup.append(self.integer())
            self.expect(")")
            if len(tup) != ar:
                raise self.error(f"tuple of length {len(tup)} for arity {ar}", t)
            if any(e >= size for e in tup):
                raise self.error(f"element outside universe of size {size}", t)
            out.add(tuple(tup))
            if not self.accept(","):
                break
        self.expect("}")
        return out

    def statement_axiom(self) -> HInductiveSentence:
        self.expect("axiom")
        self.need_sig()
        self.allow_not = False
        ante = self.formula()
        self.expect("->")
        cons = self.formula()
        self.expect(";")
        return HInductiveSentence(ante, cons)

    def statement_morleise(self) -> list[Formula]:
        self.expect("morleise")
        self.need_sig()
        self.allow_not = True
        fs = [self.formula()]
        while self.accept(","):
            fs.append(self.formula())
        self.allow_not = False
        self.expect(";")
        return fs

    def statement_pitype(self) -> PiBlock:
        self.expect("pitype")
        self.need_sig()
        name = self.ident("pitype name")
        self.expect("(")
        vs = []
        if not self.at(")"):
            vs.append(self.ident("variable"))
            while self.accept(","):
                vs.append(self.ident("variable"))
        self.expect(")")
        if len(set(vs)) != len(vs):
            raise self.error("repeated variable in pitype header")
        ren = {v: var(i) for i, v in enumerate(vs)}
        self.expect("{")
        fs = []
        while not self.at("}"):
            t = self.tok
            self.expect("~")
            phi = self.formula()
            stray = free_vars(phi) - set(vs)
            if stray:
                raise self.error(f"variables {sorted(stray)} not in the pitype header", t)
            fs.append(rename_free(phi, ren))
            self.expect(";")
        self.expect("}")
        return PiBlock(name, len(vs), tuple(fs))

    def statement_enumerate(self) -> int:
        self.expect("enumerate")
        self.need_sig()
        t = self.tok
        n = self.integer()
        if n < 1:
            raise self.error("enumeration bound must be at least 1", t)
        self.expect(";")
        return n


def parse_theory(text: str) -> Theory:
    p = _TheoryParser(text)
    models, axioms, pis, fo = [], [], [], []
    enum_size = None
    names = set()
    while p.tok.kind != "EOF":
        t = p.tok
        if p.at("sig"):
            p.statement_sig()
        elif p.at("model"):
            M = p.statement_model()
            if M.name in names:
                raise ParseError(f"model {M.name} defined twice", t.line, t.col)
            names.add(M.name)
            models.append(M)
        elif p.at("axiom"):
            axioms.append(p.statement_axiom())
        elif p.at("morleise"):
            fo.append((t, p.statement_morleise()))
        elif p.at("pitype"):
            pis.append((t, p.statement_pitype()))
        elif p.at("enumerate"):
            enum_size = p.statement_enumerate()
        else:
            raise p.error(f"expected a statement, found {t.text or 'end of input'!r}")
    if p.sig is None:
        raise ParseError("missing 'sig' declaration", 1, 1)
    sig = p.sig

    for ax in axioms:
        for M in models:
            if not satisfies_axiom(M, ax):
                raise ParseError(f"model {M.name} violates {ax}", 1, 1)
    if enum_size is not None:
        for M in find_models(axioms, sig, enum_size):
            if not any(are_isomorphic(M, N) for N in models):
                models.append(M.renamed(f"G{len(models)}"))

    mor = None
    if fo:
        tok = fo[0][0]
        formulas = [f for _, fs in fo for f in fs]
        closed = subformula_closure(formulas)
        try:
            mor = morleise(closed, sig)
        except ValueError as e:
            raise ParseError(str(e), tok.line, tok.col) from None
        models = [_expand(M, mor) for M in models]
        axioms = axioms + list(mor.axioms)
        sig = mor.signature
    if not models:
        raise ParseError("the theory has no models (add 'model' blocks or 'enumerate')", 1, 1)
    blocks = []
    for tok, b in pis:
        for phi in b.formulas:
            try:
                check_formula(phi, sig)
            except ValueError as e:
                raise ParseError(str(e), tok.line, tok.col) from None
        blocks.append(b)
    return Theory(sig, models, axioms, blocks, mor, enum_size)


def _expand(M: FiniteStructure, mor: Morleisation) -> FiniteStructure:
    """Interpret every new symbol by the first-order formula it names."""
    ev = Evaluator(M)
    rels = {s: set(M.relations[s]) for s in M.signature.names}
    for phi, sym in mor.symbol_of:
        vs = sorted(free_vars(phi), key=var_key)
        arr = ev.tensor(phi, vs)
        if not vs:
            rels[sym] = {()} if bool(arr) else set()
        else:
            rels[sym] = {tuple(int(x) for x in t) for t in zip(*np.nonzero(arr))}
    return FiniteStructure(mor.signature, M.size, rels, M.name)


def load_theory(path: str) -> Theory:
    with open(path, encoding="utf-8") as fh:
        return parse_theory(fh.read())


def parse_structure(text: str, sig: Signature) -> FiniteStructure:
    """Parse a single ``model`` block over ``sig``."""
    p = _TheoryParser(text)
    p.sig = sig
    M = p.statement_model()
    p.done()
    return M
