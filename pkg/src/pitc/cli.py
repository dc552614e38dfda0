"""Command line front end: `pitc parse|step|lts|eq|normalize|laws`."""

from __future__ import annotations

import argparse
import sys

from .env import NotWeaklyGuarded, UnboundIdentifier, ArityMismatch
from .equivalence import EquivOptions, SearchBudgetExceeded, Truncated, check
from .lts import ALL_FEATURES, FeatureDisabled, Features, build_lts, initial_phase, to_dot, to_json
from .parser import ParseError, parse, parse_defs, parse_model, pretty_print
from .semantics import (MissingKeyMemory, forward_transitions, initial_config, label_str,
                        prob_transitions, reverse_transitions)
from .state import EMPTY, EffectModel
from .syntax import free_names

EX_OK, EX_DIFF, EX_UNKNOWN = 0, 1, 2
EX_USAGE, EX_DATAERR, EX_SOFTWARE = 64, 65, 70


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from None


def _load(path: str, what=parse):
    try:
        return what(_read(path))
    except ParseError as exc:
        raise DataError(f"{path}:{exc}") from None


class _Ctx:
    def __init__(self, args):
        self.env = _load(args.defs, parse_defs) if args.defs else None
        self.model = _load(args.model, parse_model) if args.model else EffectModel()
        try:
            self.features = Features.parse(args.features) if args.features is not None else ALL_FEATURES
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def state(self, name):
        if name is None:
            return self.model.states[0] if self.model.states else EMPTY
        try:
            return self.model.state_named(name)
        except KeyError:
            raise DataError(f"unknown state {name!r}") from None

    def state_text(self, st) -> str:
        return self.model.name_of(st)

    def config_text(self, c) -> str:
        return f"{pretty_print(c.process)} @ {self.state_text(c.state)}"


def _w(w) -> str:
    return f"{w.numerator}/{w.denominator}"


# --- subcommands ------------------------------------------------------------

def cmd_parse(args, ctx, out):
    print(pretty_print(_load(args.file)), file=out)
    return EX_OK


def cmd_step(args, ctx, out):
    p = _load(args.file)
    c = initial_config(p, ctx.state(args.state))
    if args.reverse:
        moves = [(label_str(lab), t) for lab, t in reverse_transitions(c, ctx.model)]
        kind = "reverse"
    elif initial_phase(p) == "prob":
        moves = [(f"p={_w(o.weight)}", o.target) for o in prob_transitions(c, ctx.env)]
        kind = "probabilistic"
    else:
        moves = [(label_str(lab), t) for lab, t in forward_transitions(c, ctx.model, free_names(p))]
        kind = "forward"
    print(f"{len(moves)} {kind} transition(s) from {ctx.config_text(c)}", file=out)
    for i, (lab, t) in enumerate(moves):
        print(f"[{i}] {lab} -> {ctx.config_text(t)}", file=out)
    if args.pick is not None:
        if not 0 <= args.pick < len(moves):
            raise DataError(f"--pick {args.pick} out of range (0..{len(moves) - 1})")
        print(ctx.config_text(moves[args.pick][1]), file=out)
    return EX_OK


def cmd_lts(args, ctx, out):
    p = _load(args.file)
    lts = build_lts(initial_config(p, ctx.state(args.state)), ctx.env, ctx.model,
                    args.max_nodes, args.max_depth, ctx.features)
    if lts.truncated:
        print(f"warning: exploration cut off at {len(lts.truncated)} node(s)", file=sys.stderr)
    out.write(to_dot(lts, ctx.model) if args.format == "dot" else to_json(lts, ctx.model))
    return EX_OK


def cmd_eq(args, ctx, out):
    p, q = _load(args.file1), _load(args.file2)
    opts = EquivOptions(relation=args.relation, max_nodes=args.max_nodes, max_depth=args.max_depth,
                        features=ctx.features, budget=args.budget)
    from .events import UnsupportedRecursion
    from .pomset import UnsupportedTerm
    try:
        res = check(p, q, ctx.env, ctx.model, opts)
    except (Truncated, SearchBudgetExceeded, UnsupportedTerm, UnsupportedRecursion) as exc:
        print(f"inconclusive: {exc}", file=out)
        return EX_UNKNOWN
    if res.equivalent:
        print(f"equivalent ({args.relation})", file=out)
        return EX_OK
    print(f"not equivalent ({args.relation})", file=out)
    for line in res.script:
        print(line, file=out)
    return EX_DIFF


def cmd_normalize(args, ctx, out):
    from .axioms import Trace, normalize
    p = _load(args.file)
    states = [ctx.state(args.state)] if args.state else list(ctx.model.states or (EMPTY,))
    for st in states:
        trace = Trace(enabled=args.trace)
        cf = normalize(p, ctx.env, ctx.model, st, trace=trace)
        print(f"@ {ctx.state_text(st)}: {cf.text()}", file=out)
        for line in trace.lines():
            print("  " + line, file=out)
    return EX_OK


def cmd_laws(args, ctx, out):
    from .laws import run_laws
    rep = run_laws(args.seed, args.cases, pomset_every=args.pomset_every)
    for line in rep.lines():
        print(line, file=out)
    for f in rep.failures:
        print(f"\n{f.law} [{f.relation}]: {f.lhs}  vs  {f.rhs}", file=out)
        for line in f.script:
            print("  " + line, file=out)
    print(f"\nseed {rep.seed}, {rep.cases} cases: {'ok' if rep.ok else 'FAILED ' + ' '.join(rep.failed_laws())}",
          file=out)
    return EX_OK if rep.ok else EX_DIFF


# --- argument parsing ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--defs", default=argparse.SUPPRESS, help="identifier definitions, lines `A(x,y) := proc`")
    common.add_argument("--model", default=argparse.SUPPRESS, help="data-state model file")
    common.add_argument("--features", default=argparse.SUPPRESS, help="comma list out of rev,prob,guards")

    top = _Parser(prog="pitc", description="Reversible probabilistic pi-calculus workbench",
                  parents=[common])
    sub = top.add_subparsers(dest="cmd", parser_class=_Parser)

    def bounds(sp):
        sp.add_argument("--max-nodes", type=int, default=5000)
        sp.add_argument("--max-depth", type=int, default=64)

    sp = sub.add_parser("parse", parents=[common], help="echo the canonical form")
    sp.add_argument("file")
    sp.set_defaults(run=cmd_parse)

    sp = sub.add_parser("step", parents=[common], help="list and apply one transition")
    sp.add_argument("file")
    sp.add_argument("--state")
    sp.add_argument("--reverse", action="store_true")
    sp.add_argument("--pick", type=int)
    sp.set_defaults(run=cmd_step)

    sp = sub.add_parser("lts", parents=[common], help="export the reachable transition system")
    sp.add_argument("file")
    sp.add_argument("--state")
    sp.add_argument("--format", choices=("dot", "json"), default="dot")
    bounds(sp)
    sp.set_defaults(run=cmd_lts)

    sp = sub.add_parser("eq", parents=[common], help="decide a bisimilarity")
    sp.add_argument("file1")
    sp.add_argument("file2")
    sp.add_argument("--relation", choices=("step", "pomset", "hp", "hhp"), default="step")
    sp.add_argument("--budget", type=int, default=200_000)
    bounds(sp)
    sp.set_defaults(run=cmd_eq)

    sp = sub.add_parser("normalize", parents=[common], help="canonical form via the axioms")
    sp.add_argument("file")
    sp.add_argument("--state")
    sp.add_argument("--trace", action="store_true")
    sp.set_defaults(run=cmd_normalize)

    sp = sub.add_parser("laws", parents=[common], help="run the randomized law suite")
    sp.add_argument("--seed", type=int, default=7)
    sp.add_argument("--cases", type=int, default=200)
    sp.add_argument("--pomset-every", type=int, default=0)
    sp.set_defaults(run=cmd_laws)
    return top


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.cmd is None:
            raise UsageError(parser.format_usage().strip())
        for name in ("defs", "model", "features"):
            if not hasattr(args, name):
                setattr(args, name, None)
        if getattr(args, "max_nodes", 1) <= 0 or getattr(args, "max_depth", 1) <= 0:
            raise UsageError("bounds must be positive")
        ctx = _Ctx(args)
        return args.run(args, ctx, out)
    except SystemExit as exc:          # --help
        return exc.code if isinstance(exc.code, int) else EX_USAGE
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EX_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_DATAERR
    except (UnboundIdentifier, ArityMismatch, NotWeaklyGuarded, FeatureDisabled,
            MissingKeyMemory, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EX_DATAERR
    except (AssertionError, RuntimeError) as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EX_SOFTWARE


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
