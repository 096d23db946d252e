import itertools
import os
import random
import subprocess
import sys

import pytest

from pmt import _pykernels, kernels
from pmt.semantics import FiniteStructure, _perm_maps, _positions, _search_args
from pmt.syntax import Signature

from conftest import naive_homs

try:
    from pmt import _kernels
except ImportError:
    _kernels = None

BACKENDS = [_pykernels] + ([_kernels] if _kernels is not None else [])
SIG = Signature.of(P=1, E=2)


def rand_struct(rng, size, p):
    return FiniteStructure(SIG, size, {
        "P": {(a,) for a in range(size) if rng.random() < p},
        "E": {t for t in itertools.product(range(size), repeat=2) if rng.random() < p},
    })


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
def test_hom_search_matches_bruteforce(backend):
    rng = random.Random(42)
    for _ in range(150):
        M = rand_struct(rng, rng.randint(1, 4), 0.3)
        N = rand_struct(rng, rng.randint(1, 4), 0.6)
        args = _search_args(M, N)
        got = [] if args is None else sorted(backend.hom_search(*args))
        assert got == sorted(naive_homs(M, N))


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
def test_hom_search_limit(backend):
    M = FiniteStructure(SIG, 2, {"P": set(), "E": set()})
    N = FiniteStructure(SIG, 3, {"P": set(), "E": set()})
    args = _search_args(M, N)
    assert len(backend.hom_search(*args)) == 9
    assert len(backend.hom_search(*args, limit=1)) == 1


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
def test_canonical_codes_are_orbit_minima(backend):
    for size in (1, 2, 3):
        B = len(_positions(SIG, size))
        maps = _perm_maps(SIG, size)
        got = list(backend.canonical_codes(B, maps))
        want = []
        for code in range(1 << B):
            orbit = [code]
            for pm in maps:
                c = 0
                for p in range(B):
                    if (code >> (B - 1 - p)) & 1:
                        c |= 1 << (B - 1 - pm[p])
                orbit.append(c)
            if code == min(orbit):
                want.append(code)
        assert got == want


@pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")
def test_backends_agree_on_canonical_ranges():
    B = len(_positions(SIG, 3))
    maps = _perm_maps(SIG, 3)
    assert list(_kernels.canonical_codes(B, maps, 100, 3000)) == \
        list(_pykernels.canonical_codes(B, maps, 100, 3000))


def test_pure_python_switch():
    env = dict(os.environ, PMT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from pmt import kernels; print(kernels.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


def test_default_backend_is_compiled_when_built():
    if _kernels is not None and os.environ.get("PMT_PURE_PYTHON", "0") == "0":
        assert kernels.BACKEND == "cython"
    else:
        assert kernels.BACKEND == "python"
