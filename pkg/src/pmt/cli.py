"""Command-line front end: ``pmt report``, ``pmt spectrum`` and ``pmt omit``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

from . import __version__
from .dlattice import DEFAULT_CAP, ElementCapExceeded, LatticeAxiomError, from_json
from .dsl import Theory, load_theory
from .semantics import ModelSearchLimit
from .spectrum import spec
from .syntax import Formula, ParseError, to_text
from .typespace import (
    PiType, SupportedTargetError, TheoryContext, build, check_amalgamation,
    check_countcat_condition, check_jcp, check_pmc, check_somewhere_dense_density,
    omitting_search, pc_and_prime_report, support_of,
)

EXIT_OK = 0
EXIT_NOT_FOUND = 1
EXIT_PARSE = 2
EXIT_CAP = 3
EXIT_DISTRIBUTIVITY = 4
EXIT_SUPPORTED = 5


@dataclass
class RunConfig:
    inputs: list[str]
    n_max: int = 2
    budget: int = 2
    max_model_size: int = 4
    element_cap: int = DEFAULT_CAP
    fmt: str = "text"
    output: str | None = None
    targets: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.n_max < 0 or self.budget < 0 or self.max_model_size < 0:
            raise ValueError("bounds must be nonnegative")
        if self.element_cap < 2:
            raise ValueError("element cap must be at least 2")


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _join(cfg: RunConfig, parts: list) -> str:
    """JSON: one object per input, an array when there are several."""
    if cfg.fmt == "json":
        return _dump(parts[0] if len(parts) == 1 else parts)
    return "".join(parts)


def _wtext(w) -> str | None:
    if w is None:
        return None
    return to_text(w) if isinstance(w, Formula) else str(w)


def _load(path: str) -> Theory:
    try:
        return load_theory(path)
    except ParseError as e:
        raise ParseError(e.message, e.line, e.col) from None


def _context(cfg: RunConfig, th: Theory) -> TheoryContext:
    return build(th.model_class(), cfg.n_max, cfg.budget, cfg.element_cap)


# --------------------------------------------------------------------------
# report


def build_report(cfg: RunConfig, path: str, th: Theory, ctx: TheoryContext) -> dict:
    pmc = check_pmc(ctx)
    amal = check_amalgamation(ctx)
    cc = check_countcat_condition(ctx)
    sd = check_somewhere_dense_density(ctx)
    flags = pc_and_prime_report(ctx)
    arities = []
    for n in range(ctx.n_max + 1):
        S, L = ctx.space(n), ctx.lattice(n)
        rec = {
            "n": n,
            "lattice_size": L.n,
            "points": S.k,
            "pmc": pmc[n]["pmc"],
            "hausdorff": pmc[n]["separated"],
            "complemented": pmc[n]["complemented"],
            "amalgamation": amal[n]["amalgamation"],
            "countcat_condition": cc[n],
            "somewhere_dense_density": sd[n],
            "components": [{"generic": f"p{c.generic}", "points": [f"p{q}" for q in c.members()]}
                           for c in S.components()],
            "point_generators": [L.label(p.generator) for p in S.points],
        }
        if not amal[n]["amalgamation"]:
            w = amal[n]["witness"]
            rec["amalgamation_witness"] = {"shared": f"p{w['shared']}",
                                           "generic": [f"p{g}" for g in w["generic"]]}
        arities.append(rec)
    jcp = check_jcp(ctx)
    L0 = ctx.lattice(0)
    jrep = {"jcp": jcp["jcp"]}
    if "witness" in jcp:
        jrep["witness"] = [L0.label(a) for a in jcp["witness"]]
    pis = []
    for b in th.pitypes:
        rec = {"name": b.name, "arity": b.arity, "formulas": [str(w) for w in b.negatives()]}
        if b.arity > ctx.n_max:
            rec["status"] = "arity above n_max"
        else:
            try:
                p = PiType.from_formulas(ctx, b.arity, b.formulas, b.name)
            except KeyError as e:
                rec["status"] = str(e.args[0])
            else:
                sup = support_of(ctx, p)
                rec.update({"status": "ok", "supported": sup.supported,
                            "support": _wtext(sup.witness), "nowhere_dense": sup.nowhere_dense})
        pis.append(rec)
    return {
        "input": os.path.basename(path),
        "window": {"n_max": ctx.n_max, "budget": ctx.V, "working_arity": ctx.N,
                   "stable": ctx.stable, "element_cap": ctx.cap},
        "signature": [{"name": s, "arity": a} for s, a in ctx.signature.symbols],
        "models": [{"name": ctx.cls.name_of(i), "size": M.size} for i, M in enumerate(ctx.cls)],
        "arities": arities,
        "jcp": jrep,
        "model_flags": flags["models"],
        "prime_iff_atomic": flags["prime_iff_atomic"],
        "pitypes": pis,
    }


def report_text(rep: dict) -> str:
    w = rep["window"]
    lines = [f"theory {rep['input']}",
             f"window: n_max={w['n_max']} budget={w['budget']} working arity={w['working_arity']} "
             f"stable={w['stable']}",
             "models: " + ", ".join(f"{m['name']}({m['size']})" for m in rep["models"])]
    for a in rep["arities"]:
        line = (f"n={a['n']}: |L|={a['lattice_size']} points={a['points']} pmc={a['pmc']} "
                f"amalgamation={a['amalgamation']} countcat={a['countcat_condition']} "
                f"somewhere-dense={a['somewhere_dense_density']}")
        if "amalgamation_witness" in a:
            aw = a["amalgamation_witness"]
            line += f" [shared {aw['shared']} in components of {', '.join(aw['generic'])}]"
        lines.append(line)
    lines.append(f"jcp: {rep['jcp']['jcp']}")
    for m in rep["model_flags"]:
        lines.append(f"model {m['name']}: positively_closed={m['positively_closed']} "
                     f"atomic={m['atomic']} prime={m['prime']}")
    for p in rep["pitypes"]:
        if p["status"] == "ok":
            lines.append(f"pitype {p['name']}: supported={p['supported']}"
                         + (f" by {p['support']}" if p["supported"] else " (nowhere dense)"))
        else:
            lines.append(f"pitype {p['name']}: {p['status']}")
    return "\n".join(lines) + "\n"


def report_dot(ctx: TheoryContext, stem: str) -> str:
    return "".join(ctx.space(n).to_dot(f"{stem}_S{n}") for n in range(ctx.n_max + 1))


def cmd_report(cfg: RunConfig) -> int:
    parts = []
    for path in cfg.inputs:
        th = _load(path)
        ctx = _context(cfg, th)
        stem = os.path.splitext(os.path.basename(path))[0]
        if cfg.fmt == "dot":
            parts.append(report_dot(ctx, stem))
        else:
            rep = build_report(cfg, path, th, ctx)
            parts.append(rep if cfg.fmt == "json" else report_text(rep))
    _emit(cfg, _join(cfg, parts))
    return EXIT_OK


# --------------------------------------------------------------------------
# spectrum


def cmd_spectrum(cfg: RunConfig) -> int:
    parts = []
    for path in cfg.inputs:
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise ParseError(e.msg, e.lineno, e.colno) from None
        try:
            L = from_json(data, cap=cfg.element_cap)
        except (KeyError, TypeError) as e:
            raise ParseError(f"malformed lattice file: {e}") from None
        S = spec(L)
        stem = os.path.splitext(os.path.basename(path))[0]
        if cfg.fmt == "dot":
            parts.append(S.to_dot(stem))
        elif cfg.fmt == "json":
            out = {"input": os.path.basename(path), "lattice_size": L.n, **S.to_json()}
            parts.append(out)
        else:
            comps = "; ".join("p%d: {%s}" % (c.generic, ", ".join(f"p{q}" for q in c.members()))
                              for c in S.components())
            parts.append(f"lattice {os.path.basename(path)}: {L.n} elements, {S.k} points\n"
                         f"flags: {S.flags()}\ncomponents: {comps}\n")
    _emit(cfg, _join(cfg, parts))
    return EXIT_OK


# --------------------------------------------------------------------------
# omit


def cmd_omit(cfg: RunConfig) -> int:
    path = cfg.inputs[0]
    th = _load(path)
    ctx = _context(cfg, th)
    targets = []
    for name in cfg.targets:
        try:
            b = th.pitype(name)
        except KeyError as e:
            raise ParseError(str(e.args[0])) from None
        targets.append(PiType.from_formulas(ctx, b.arity, b.formulas, b.name))
    M = omitting_search(ctx, targets, cfg.max_model_size)
    if M is None:
        print(f"no positively closed model omitting the targets within size {cfg.max_model_size}",
              file=sys.stderr)
        return EXIT_NOT_FOUND
    if cfg.fmt == "json":
        _emit(cfg, _dump({"input": os.path.basename(path), "model": M.to_json()}))
    else:
        _emit(cfg, M.to_text("Found") + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pmt", description="Positive model theory workbench")
    p.add_argument("--version", action="version", version=f"pmt {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, many=True):
        sp.add_argument("inputs", nargs="+" if many else 1, metavar="FILE")
        sp.add_argument("--nmax", type=int, default=2, help="largest arity n of S_n (default 2)")
        sp.add_argument("--budget", type=int, default=2, help="extra quantified variables (default 2)")
        sp.add_argument("--max-model-size", type=int, default=4, help="model search bound (default 4)")
        sp.add_argument("--format", choices=("text", "json", "dot"), default="text")
        sp.add_argument("-o", "--output", metavar="PATH")

    common(sub.add_parser("report", help="build the type spaces of a theory and run all checks"))
    common(sub.add_parser("spectrum", help="spectral space of a lattice file (.lat)"))
    om = sub.add_parser("omit", help="search a positively closed model omitting Pi-types")
    common(om, many=False)
    om.add_argument("--target", action="append", default=[], metavar="NAME",
                    help="pitype block to omit (repeatable)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    cap_env = os.environ.get("PMT_ELEMENT_CAP")
    try:
        cfg = RunConfig(
            inputs=list(args.inputs), n_max=args.nmax, budget=args.budget,
            max_model_size=args.max_model_size,
            element_cap=int(cap_env) if cap_env else DEFAULT_CAP,
            fmt=args.format, output=args.output, targets=getattr(args, "target", []),
        )
    except ValueError as e:
        print(f"pmt: {e}", file=sys.stderr)
        return EXIT_PARSE
    cmd = {"report": cmd_report, "spectrum": cmd_spectrum, "omit": cmd_omit}[args.command]
    try:
        return cmd(cfg)
    except ParseError as e:
        loc = f"{e.line}:{e.col}: " if e.line else ""
        print(f"pmt: {cfg.inputs[0]}:{loc}{e.message}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, ValueError) as e:
        if isinstance(e, LatticeAxiomError):
            print(f"pmt: {e}", file=sys.stderr)
            return EXIT_DISTRIBUTIVITY if e.identity == "distributivity" else EXIT_PARSE
        if isinstance(e, SupportedTargetError):
            print(f"pmt: {e}", file=sys.stderr)
            print(_wtext(e.support.witness))
            return EXIT_SUPPORTED
        if isinstance(e, ModelSearchLimit):
            print(f"pmt: {e}", file=sys.stderr)
            return EXIT_CAP
        print(f"pmt: {e}", file=sys.stderr)
        return EXIT_PARSE
    except ElementCapExceeded as e:
        print(f"pmt: {e}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
