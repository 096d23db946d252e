import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from pmt.semantics import FiniteStructure
from pmt.syntax import (
    And, Atom, Bottom, Equal, Exists, HInductiveSentence, Not, OrdinalMap, Or,
    ParseError, Signature, SubstitutionError, Top, alpha_equal, alpha_key, conj,
    disj, free_vars, is_positive, morleise, parse_axiom, parse_fo_formula,
    parse_formula, pp_normal_form, rename_free, subformula_closure, substitute,
    to_text, var, variable_count,
)

from conftest import naive_holds

SIG = Signature.of(P=1, R=2, B=0)
VARS = ["x0", "x1", "x2", "y"]


def formulas(depth=3, allow_not=False):
    leaves = st.one_of(
        st.just(Top()), st.just(Bottom()),
        st.builds(lambda v: Atom("P", (v,)), st.sampled_from(VARS)),
        st.builds(lambda a, b: Atom("R", (a, b)), st.sampled_from(VARS), st.sampled_from(VARS)),
        st.just(Atom("B", ())),
        st.builds(lambda a, b: Equal(a, b), st.sampled_from(VARS), st.sampled_from(VARS)),
    )

    def extend(children):
        opts = [
            st.builds(lambda a, b: And((a, b)), children, children),
            st.builds(lambda a, b: Or((a, b)), children, children),
            st.builds(Exists, st.sampled_from(VARS), children),
        ]
        if allow_not:
            opts.append(st.builds(Not, children))
        return st.one_of(*opts)

    return st.recursive(leaves, extend, max_leaves=8)


def random_structure(rng, size):
    rels = {
        "P": {(a,) for a in range(size) if rng.random() < 0.5},
        "R": {(a, b) for a in range(size) for b in range(size) if rng.random() < 0.4},
        "B": {()} if rng.random() < 0.5 else set(),
    }
    return FiniteStructure(SIG, size, rels)


STRUCTS = [random_structure(random.Random(s), 1 + s % 3) for s in range(6)]


def agree(phi, psi, vs):
    for M in STRUCTS:
        for vals in itertools.product(range(M.size), repeat=len(vs)):
            env = dict(zip(vs, vals))
            if naive_holds(M, phi, env) != naive_holds(M, psi, env):
                return False
    return True


@settings(max_examples=150, deadline=None)
@given(formulas())
def test_print_parse_roundtrip(phi):
    assert parse_formula(to_text(phi), SIG) == phi


@settings(max_examples=80, deadline=None)
@given(formulas(allow_not=True))
def test_fo_print_parse_roundtrip(phi):
    assert parse_fo_formula(to_text(phi), SIG) == phi


@settings(max_examples=80, deadline=None)
@given(formulas())
def test_alpha_key_preserves_meaning(phi):
    k = alpha_key(phi)
    assert alpha_equal(k, phi)
    assert free_vars(k) == free_vars(phi)
    assert agree(phi, k, sorted(free_vars(phi)))


@settings(max_examples=80, deadline=None)
@given(formulas())
def test_pp_normal_form_is_equivalent(phi):
    parts = pp_normal_form(phi)
    for p in parts:
        assert "Or" not in repr(p)
    nf = disj(*parts) if parts else Bottom()
    assert agree(phi, nf, sorted(free_vars(phi)))


@settings(max_examples=80, deadline=None)
@given(formulas(), st.dictionaries(st.sampled_from(VARS), st.sampled_from(VARS)))
def test_rename_free_is_capture_avoiding(phi, ren):
    psi = rename_free(phi, ren)
    fv = sorted(free_vars(phi))
    for M in STRUCTS:
        for vals in itertools.product(range(M.size), repeat=len(VARS)):
            env = dict(zip(VARS, vals))
            moved = {v: env[ren.get(v, v)] for v in fv}
            assert naive_holds(M, psi, env) == naive_holds(M, phi, moved)


def test_substitute_along_ordinal_maps():
    phi = parse_formula("R(x0, x1) & exists x2. R(x1, x2)", SIG)
    for f in OrdinalMap.all_maps(2, 3):
        psi = substitute(phi, f)
        assert free_vars(psi) <= {var(i) for i in range(3)}
        for M in STRUCTS:
            for t in itertools.product(range(M.size), repeat=3):
                env_psi = {var(i): t[i] for i in range(3)}
                env_phi = {var(i): t[f.values[i]] for i in range(2)}
                assert naive_holds(M, psi, env_psi) == naive_holds(M, phi, env_phi)


def test_substitute_rejects_out_of_range():
    with pytest.raises(SubstitutionError):
        substitute(parse_formula("R(x0, x2)", SIG), OrdinalMap(2, 2, (0, 1)))


def test_ordinal_maps_compose():
    f = OrdinalMap(2, 3, (2, 0))
    g = OrdinalMap(3, 2, (1, 1, 0))
    assert f.then(g).values == (0, 1)
    assert OrdinalMap.identity(3).then(g) == g
    assert len(list(OrdinalMap.all_maps(2, 3))) == 9


def test_conj_disj_simplify():
    p = parse_formula("P(x)")
    assert conj() == Top() and disj() == Bottom()
    assert conj(p, Top()) == p
    assert disj(p, Bottom()) == p
    assert conj(p, Bottom()) == Bottom()


def test_positivity_and_counts():
    assert is_positive(parse_formula("exists y. R(x, y) | P(x)"))
    assert not is_positive(parse_fo_formula("~P(x)"))
    assert variable_count(parse_formula("exists y. exists z. R(y, z) & P(x)")) == 3


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as ei:
        parse_formula("P(x) &\n  R(x)", SIG)
    assert (ei.value.line, ei.value.col) == (2, 3)
    with pytest.raises(ParseError):
        parse_formula("Q(x)", SIG)
    with pytest.raises(ParseError):
        parse_formula("~P(x)", SIG)
    with pytest.raises(ParseError):
        parse_formula("P(x", SIG)


def test_axiom_parsing():
    ax = parse_axiom("P(x) -> exists y. R(x, y)", SIG)
    assert isinstance(ax, HInductiveSentence)
    assert ax.variables == ("x",)
    assert parse_axiom(str(ax).removeprefix("axiom ").rstrip(";"), SIG) == ax


def test_subformula_closure():
    phi = parse_fo_formula("~(exists y. R(x, y) & P(y))", SIG)
    texts = {to_text(p) for p in subformula_closure([phi])}
    assert "R(x,y)" in {t.replace(" ", "") for t in texts}
    assert any(isinstance(p, Exists) for p in subformula_closure([phi]))


def test_morleise_adds_complement_symbols():
    closed = subformula_closure([parse_fo_formula("~P(x)", SIG)])
    m = morleise(closed, SIG)
    assert len(m.new_symbols) == 2
    assert set(SIG.names) < set(m.signature.names)
    # every expanded structure satisfies the new axioms
    from pmt.dsl import _expand
    from pmt.semantics import satisfies_all
    for M in STRUCTS:
        assert satisfies_all(_expand(M, m), m.axioms)


def test_signature_helpers():
    s = Signature.of(R=2, P=1)
    assert s.names == ("P", "R")
    assert s.arity("R") == 2
    assert "P" in s and "Q" not in s
    with pytest.raises(KeyError):
        s.arity("Q")
