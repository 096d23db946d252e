import itertools
import os
import random
import sys

import pytest

from pmt import dlattice
from pmt.dsl import load_theory
from pmt.syntax import And, Atom, Bottom, Equal, Exists, Not, Or, Top
from pmt.typespace import build

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CORPUS = os.path.join(ROOT, "corpus")

_CTX = {}


def corpus(name):
    return os.path.join(CORPUS, name)


def context(name, n_max=2, **kw):
    """Cached theory context for a corpus file."""
    key = (name, n_max, tuple(sorted(kw.items())))
    if key not in _CTX:
        th = load_theory(corpus(name))
        _CTX[key] = build(th.model_class(), n_max=n_max, **kw)
    return _CTX[key]


# --------------------------------------------------------------------------
# Naive oracles


def naive_holds(M, phi, env):
    """Direct recursive evaluation under an assignment dict."""
    if isinstance(phi, Top):
        return True
    if isinstance(phi, Bottom):
        return False
    if isinstance(phi, Atom):
        return tuple(env[a] for a in phi.args) in M.relations[phi.symbol]
    if isinstance(phi, Equal):
        return env[phi.left] == env[phi.right]
    if isinstance(phi, And):
        return all(naive_holds(M, p, env) for p in phi.parts)
    if isinstance(phi, Or):
        return any(naive_holds(M, p, env) for p in phi.parts)
    if isinstance(phi, Not):
        return not naive_holds(M, phi.body, env)
    if isinstance(phi, Exists):
        return any(naive_holds(M, phi.body, {**env, phi.variable: e}) for e in range(M.size))
    raise TypeError(phi)


def naive_homs(M, N):
    """All homomorphisms by enumerating every function."""
    out = []
    for h in itertools.product(range(N.size), repeat=M.size):
        if all(tuple(h[e] for e in t) in N.relations[s]
               for s in M.signature.names for t in M.relations[s]):
            out.append(h)
    return out


# --------------------------------------------------------------------------
# Lattice suite


def random_set_family_lattice(rng, base_size=None, gens=None, cap=20):
    """Lattice generated by random subsets of a small base set, at most ``cap`` elements."""
    while True:
        b = base_size or rng.randint(3, 6)
        k = gens or rng.randint(2, 5)
        fam = [[{e for e in range(b) if rng.random() < 0.5}] for _ in range(k)]
        try:
            L = dlattice.from_set_family([list(range(b))], fam, cap=cap)
        except dlattice.ElementCapExceeded:
            continue
        return L


def lattice_suite(n_random=50, seed=7):
    out = [("chain%d" % k, dlattice.chain(k)) for k in range(1, 7)]
    out += [("boolean%d" % k, dlattice.boolean(k)) for k in range(0, 5)]
    out += [("free2", dlattice.free_dl2())]
    out += [("chain2xchain3", dlattice.product(dlattice.chain(2), dlattice.chain(3))),
            ("chain3xchain3", dlattice.product(dlattice.chain(3), dlattice.chain(3))),
            ("boolean1xfree2", dlattice.product(dlattice.boolean(1), dlattice.free_dl2())),
            ("chain4xboolean2", dlattice.product(dlattice.chain(4), dlattice.boolean(2)))]
    rng = random.Random(seed)
    out += [("random%d" % i, random_set_family_lattice(rng)) for i in range(n_random)]
    return out


@pytest.fixture(scope="session")
def suite():
    return lattice_suite()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
