"""Compare the compiled and pure-Python kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--seed 0]

Both backends are imported directly, so this works regardless of
PMT_PURE_PYTHON.  Every workload checks that the two outputs agree before
reporting timings.
"""
from __future__ import annotations

import argparse
import random
import sys
import time

from pmt import _pykernels
from pmt.semantics import FiniteStructure, _perm_maps, _positions, _search_args
from pmt.syntax import Signature

try:
    from pmt import _kernels
except ImportError:  # extension not built
    _kernels = None


def random_digraph(rng, size, p, name):
    sig = Signature.of(E=2)
    edges = {(a, b) for a in range(size) for b in range(size) if rng.random() < p}
    return FiniteStructure(sig, size, {"E": edges}, name)


def hom_workloads(rng):
    out = []
    for src, tgt, p in [(5, 4, 0.3), (6, 5, 0.35), (7, 6, 0.3), (8, 6, 0.25)]:
        M = random_digraph(rng, src, p, "M")
        N = random_digraph(rng, tgt, 0.6, "N")
        args = _search_args(M, N)
        if args is not None:
            out.append((f"hom {src}->{tgt}", args))
    return out


def canon_workloads():
    out = []
    for size in (3, 4):
        sig = Signature.of(E=2)
        B = len(_positions(sig, size))
        out.append((f"canonical E/2 size {size} ({1 << B} codes)", (B, _perm_maps(sig, size))))
    sig = Signature.of(P=1, E=2)
    B = len(_positions(sig, 3))
    out.append((f"canonical P/1 E/2 size 3 ({1 << B} codes)", (B, _perm_maps(sig, 3))))
    return out


def timed(fn, args, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t)
    return best, result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`",
              file=sys.stderr)
        return 1
    rng = random.Random(args.seed)
    rows = []
    for label, a in hom_workloads(rng):
        rows.append((label, a, "hom_search"))
    for label, a in canon_workloads():
        rows.append((label, a, "canonical_codes"))
    print(f"{'workload':42} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    for label, a, fname in rows:
        tp, rp = timed(getattr(_pykernels, fname), a, args.repeat)
        tc, rc = timed(getattr(_kernels, fname), a, args.repeat)
        if list(rp) != list(rc):
            print(f"{label}: backends disagree", file=sys.stderr)
            return 2
        print(f"{label:42} {tp:10.4f} {tc:10.4f} {tp / max(tc, 1e-9):7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
