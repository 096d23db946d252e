import itertools

import pytest

from pmt.dsl import load_theory, parse_theory
from pmt.semantics import (
    FiniteStructure, are_isomorphic, homomorphisms, is_positively_closed_semantic,
)
from pmt.syntax import (
    Atom, Equal, Exists, OrdinalMap, Signature, conj, parse_formula, var,
)
from pmt.typespace import (
    Interpretation, PiType, amalgam_search, build, certificate_span, check_amalgamation,
    check_jcp, check_pmc, f_star, f_star_report, is_atomic, maximal_type_pc_check,
    natural_iso_check, omitting_search, pc_and_prime_report, satisfies_theory,
    support_of, theory_types, tp, verify_interpretation,
)

from conftest import context, corpus, naive_holds


# --------------------------------------------------------------------------
# Oracle: definable sets from syntactically enumerated pp formulas


def pp_candidates(sig, n, extra, max_atoms):
    """Existential closures of conjunctions of at most ``max_atoms`` atoms."""
    xs = [var(i) for i in range(n)]
    ys = [f"y{i}" for i in range(extra)]
    vs = xs + ys
    atoms = [Equal(a, b) for a, b in itertools.combinations(vs, 2)]
    for s, ar in sig.symbols:
        atoms += [Atom(s, t) for t in itertools.product(vs, repeat=ar)]
    for k in range(max_atoms + 1):
        for combo in itertools.combinations(atoms, k):
            phi = conj(*combo)
            for y in ys:
                phi = Exists(y, phi)
            yield phi


def extension(ctx, phi, n):
    bits = 0
    for i, M in enumerate(ctx.cls):
        for t in itertools.product(range(M.size), repeat=n):
            if naive_holds(M, phi, {var(j): t[j] for j in range(n)}):
                bits |= 1 << ctx.layout.tuple_index(i, t)
    return bits


def union_closure(sets):
    out = set(sets) | {0}
    frontier = list(out)
    while frontier:
        new = []
        for a in frontier:
            for b in list(out):
                c = a | b
                if c not in out:
                    out.add(c)
                    new.append(c)
        frontier = new
    return out


@pytest.mark.parametrize("name", ["redge.pmt", "pq.pmt", "switch.pmt", "morley_p.pmt"])
def test_lattice_contains_enumerated_pp_sets(name):
    ctx = context(name)
    for n in range(ctx.n_max + 1):
        L = ctx.lattice(n)
        found = {extension(ctx, phi, n) for phi in pp_candidates(ctx.signature, n, 1, 2)}
        assert found <= set(L.encodings), n


@pytest.mark.parametrize("name,sizes", [("redge.pmt", [2, 4, 16]), ("pq.pmt", [5, 5, 5]),
                                        ("switch.pmt", [3, 3, 3])])
def test_lattice_sizes_match_enumeration(name, sizes):
    ctx = context(name)
    got = []
    for n in range(ctx.n_max + 1):
        found = {extension(ctx, phi, n) for phi in pp_candidates(ctx.signature, n, 2, 2)}
        full = ctx.layout.P(n)
        closed = union_closure(found | {(1 << full) - 1})
        assert closed == set(ctx.lattice(n).encodings), n
        got.append(len(closed))
    assert got == sizes


def test_witness_formulas_denote_their_elements():
    for name in ("redge.pmt", "pq.pmt", "morley_p.pmt"):
        ctx = context(name)
        for n in range(ctx.n_max + 1):
            L = ctx.lattice(n)
            for a in range(L.n):
                assert extension(ctx, L.witnesses[a], n) == L.encodings[a], (name, n, a)


def test_stability_flags():
    assert context("redge.pmt").stable is True
    assert context("pq.pmt").stable is True
    assert context("morley_edge.pmt").stable is None


def test_tp_matches_filter_membership():
    ctx = context("redge.pmt")
    for n in range(3):
        L, S = ctx.lattice(n), ctx.space(n)
        for i, M in enumerate(ctx.cls):
            for t in itertools.product(range(M.size), repeat=n):
                p = tp(ctx, M, t)
                u = ctx.layout.tuple_index(i, t)
                want = {a for a in range(L.n) if (L.encodings[a] >> u) & 1}
                assert S.points[p].members == want


def test_tp_rejects_non_members():
    ctx = context("redge.pmt")
    other = FiniteStructure(ctx.signature, 3, {"R": set()})
    with pytest.raises(ValueError):
        tp(ctx, other, (0,))


def test_pq_points_and_checks():
    ctx = context("pq.pmt")
    S1 = ctx.space(1)
    assert S1.k == 3
    pmc = check_pmc(ctx)
    assert all(not pmc[n]["pmc"] for n in range(3))
    amal = check_amalgamation(ctx)
    assert not amal[1]["amalgamation"]
    w = amal[1]["witness"]
    comps = {c.generic: c.points for c in S1.components()}
    g1, g2 = w["generic"]
    assert (comps[g1] >> w["shared"]) & 1 and (comps[g2] >> w["shared"]) & 1
    jcp = check_jcp(ctx)
    assert jcp["jcp"] is False
    L0 = ctx.lattice(0)
    a, b = jcp["witness"]
    assert L0.meet(a, b) == L0.bottom


def test_redge_is_pmc_and_amalgamating():
    ctx = context("redge.pmt")
    assert all(r["pmc"] for r in check_pmc(ctx).values())
    assert all(r["amalgamation"] for r in check_amalgamation(ctx).values())
    assert check_jcp(ctx) == {"jcp": True}


def test_switch_jcp_and_morleised_switch():
    assert check_jcp(context("switch.pmt"))["jcp"] is True
    assert check_jcp(context("switch_morley.pmt"))["jcp"] is False


def test_f_star_identity_and_composition():
    ctx = context("redge.pmt")
    for n in range(3):
        idm = f_star(ctx, OrdinalMap.identity(n))
        assert idm.mapping == tuple(range(ctx.space(n).k))
    for n, m, k in itertools.product(range(3), repeat=3):
        for f in OrdinalMap.all_maps(n, m):
            for g in OrdinalMap.all_maps(m, k):
                gf = f.then(g)
                assert f_star(ctx, gf).mapping == f_star(ctx, g).then(f_star(ctx, f)).mapping


def test_f_star_against_tuple_types():
    # f*(tp(a)) = tp(a o f) for realized types
    ctx = context("redge.pmt")
    for n, m in itertools.product(range(3), repeat=2):
        for f in OrdinalMap.all_maps(n, m):
            fs = f_star(ctx, f)
            for M in ctx.cls:
                for t in itertools.product(range(M.size), repeat=m):
                    s = tuple(t[f.values[i]] for i in range(n))
                    assert fs(tp(ctx, M, t)) == tp(ctx, M, s)


def test_f_star_report_redge():
    ctx = context("redge.pmt")
    for f in OrdinalMap.all_maps(1, 2):
        r = f_star_report(ctx, f)
        assert r["spectral"] and r["open"] and r["preimage_identity"] and r["image_identity"]


def test_support_certificate_verified_semantically():
    ctx = context("pq.pmt")
    th = load_theory(corpus("pq.pmt"))
    b = th.pitype("notp")
    p = PiType.from_formulas(ctx, b.arity, b.formulas, b.name)
    sup = support_of(ctx, p)
    assert sup.supported
    psi = sup.witness
    realized = False
    for M in ctx.cls:
        for t in itertools.product(range(M.size), repeat=1):
            env = {"x0": t[0]}
            if naive_holds(M, psi, env):
                realized = True
                assert not any(naive_holds(M, phi, env) for phi in b.formulas)
    assert realized


def test_unsupported_pitype_is_nowhere_dense():
    ctx = context("pq.pmt")
    b = load_theory(corpus("pq.pmt")).pitype("neither")
    sup = support_of(ctx, PiType.from_formulas(ctx, b.arity, b.formulas, b.name))
    assert not sup.supported and sup.nowhere_dense


def test_members_satisfy_theory():
    for name in ("pq.pmt", "redge.pmt", "switch.pmt", "constants.pmt"):
        ctx = context(name)
        for M in ctx.cls:
            assert satisfies_theory(ctx, M)


def test_non_model_detected():
    ctx = context("pq.pmt")
    both = FiniteStructure(ctx.signature, 2, {"P": {(0,)}, "Q": {(1,)}})
    # (exists x P(x)) & (exists y Q(y)) -> false holds in every member
    assert not satisfies_theory(ctx, both)
    assert theory_types(ctx, both) is None


def test_pc_flags_agree_with_semantic_oracle():
    for name in ("pq.pmt", "switch.pmt", "switch_morley.pmt", "redge.pmt", "constants.pmt"):
        ctx = context(name)
        for M in ctx.cls:
            assert maximal_type_pc_check(ctx, M) == is_positively_closed_semantic(M, ctx.cls, ctx)


def test_pq_model_flags():
    rep = pc_and_prime_report(context("pq.pmt"))
    flags = {m["name"]: m for m in rep["models"]}
    assert not flags["M"]["positively_closed"]
    assert flags["N1"]["positively_closed"] and flags["N2"]["positively_closed"]
    assert not any(m["prime"] for m in rep["models"])
    assert rep["prime_iff_atomic"] is None


def test_prime_means_continues_into_every_pc_model():
    for name in ("constants.pmt", "switch.pmt", "switch_morley.pmt", "pq.pmt"):
        ctx = context(name)
        rep = pc_and_prime_report(ctx)
        pcs = [M for M, r in zip(ctx.cls, rep["models"]) if r["positively_closed"]]
        for M, r in zip(ctx.cls, rep["models"]):
            want = r["positively_closed"] and all(homomorphisms(M, N) for N in pcs)
            assert r["prime"] == want, (name, M.name)


def test_omitting_search_pq():
    ctx = context("pq.pmt")
    th = load_theory(corpus("pq.pmt"))
    b = th.pitype("neither")
    target = PiType.from_formulas(ctx, b.arity, b.formulas, b.name)
    D = omitting_search(ctx, [target], 4)
    assert D is not None
    assert satisfies_theory(ctx, D)
    # positively closed: isomorphic to one of the pc members N1, N2
    _, N1, N2 = ctx.cls.models
    assert are_isomorphic(D, N1) or are_isomorphic(D, N2)
    # the type {~P, ~Q} is omitted: every element satisfies one of its formulas
    for e in range(D.size):
        assert any(naive_holds(D, phi, {"x0": e}) for phi in b.formulas)


def test_certificate_span_has_no_amalgam():
    ctx = context("pq.pmt")
    span = certificate_span(ctx, 1)
    assert span is not None
    f1, f2 = span
    assert f1.source == f2.source
    assert amalgam_search(ctx, f1, f2, 4) is None


def test_renaming_interpretation():
    src = context("redge.pmt")
    tgt = build(parse_theory("sig F/2;\nmodel E { universe 2; F = {(0,1)}; }\n").model_class())
    g = Interpretation.of(src.signature, tgt.signature, {"R": parse_formula("F(x0,x1)")})
    inv = Interpretation.of(tgt.signature, src.signature, {"F": parse_formula("R(x0,x1)")})
    assert verify_interpretation(g, tgt.cls, (), src)
    rep = natural_iso_check(g, src, tgt, inverse=inv)
    assert rep["ok"], rep["reason"]
    assert rep["squares"] == 11


def test_symmetrizing_interpretation_rejected():
    src = context("redge.pmt")
    tgt = build(parse_theory("sig F/2;\nmodel E { universe 2; F = {(0,1)}; }\n").model_class())
    g = Interpretation.of(src.signature, tgt.signature, {"R": parse_formula("F(x0,x1) | F(x1,x0)")})
    assert not verify_interpretation(g, tgt.cls, (), src)
    rep = natural_iso_check(g, src, tgt)
    assert not rep["ok"] and rep["reason"]


def test_interpretation_arity_checked():
    s, t = Signature.of(R=2), Signature.of(F=2)
    with pytest.raises(ValueError):
        Interpretation.of(s, t, {"R": parse_formula("F(x0,x2)")})
    with pytest.raises(ValueError):
        Interpretation.of(s, t, {})


def test_atomic_requires_support_only():
    ctx = context("constants.pmt")
    flags = pc_and_prime_report(ctx)["models"]
    for M, r in zip(ctx.cls, flags):
        assert r["atomic"] == (r["positively_closed"] and is_atomic(ctx, M))
