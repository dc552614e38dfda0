"""Random recursion-free terms and the algebraic law suite checked against bisimilarity."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .axioms import head_normal_form
from .env import IdentifierEnv
from . import refine as rf
from .equivalence import EquivOptions, Truncated, check, fmt_lts_label, lts_pair_graph
from .lts import build_lts
from .parser import pretty_print
from .semantics import initial_config
from .syntax import (NIL, BoxSum, Ident, In, Nil, Out, Par, Process, Res, Sum, Tau,
                     free_names, substitute)

NAMES = ("a", "b", "c", "d")
WEIGHTS = tuple(Fraction(n, d) for n, d in ((1, 2), (1, 3), (2, 3), (1, 4), (3, 4)))


@dataclass
class _Budget:
    prefixes: int
    pars: int
    boxsums: int
    inputs: int


def random_term(rng: random.Random, prefixes: int = 6, pars: int = 1, boxsums: int = 2,
                names=NAMES, restriction: bool = True, inputs: int = 3) -> Process:
    """A random key-free, guard-free, recursion-free term.

    At most `prefixes` prefixes (of which at most `inputs` are inputs), `pars`
    parallel operators (so pars + 1 components) and `boxsums` probabilistic
    choices; free names come from names.
    """
    budget = _Budget(prefixes, pars, boxsums, inputs)
    binders = iter(f"z{i}" for i in range(100))

    def name(scope):
        pool = list(names) + list(scope)
        return rng.choice(pool)

    def gen(depth, scope):
        if budget.prefixes <= 0 or depth > 6:
            return NIL
        r = rng.random()
        if r < 0.12:
            return NIL
        if r < 0.55:
            budget.prefixes -= 1
            kind = rng.choice(("tau", "out", "out", "in", "in"))
            if kind == "in" and budget.inputs <= 0:
                kind = "out"
            if kind == "tau":
                return Tau(gen(depth + 1, scope))
            if kind == "out":
                return Out(name(scope), name(scope), gen(depth + 1, scope))
            budget.inputs -= 1
            z = next(binders)
            return In(name(scope), z, gen(depth + 1, scope + [z]))
        if r < 0.70:
            return Sum(gen(depth + 1, scope), gen(depth + 1, scope))
        if r < 0.80 and budget.boxsums > 0:
            budget.boxsums -= 1
            return BoxSum(rng.choice(WEIGHTS), gen(depth + 1, scope), gen(depth + 1, scope))
        if r < 0.90 and budget.pars > 0:
            budget.pars -= 1
            return Par(gen(depth + 1, scope), gen(depth + 1, scope))
        if restriction:
            y = rng.choice(names)
            return Res(y, gen(depth + 1, [s for s in scope if s != y]))
        return gen(depth + 1, scope)

    return gen(0, [])


def random_prefix(rng, body, avoid=(), subject=None, names=NAMES):
    """A single prefix over body; its names avoid `avoid`, its subject is `subject` if given."""
    pool = [n for n in names if n not in avoid] or ["e"]
    kind = rng.choice(("out", "in") if subject else ("tau", "out", "in"))
    subj = subject or rng.choice(pool)
    if kind == "tau":
        return Tau(body)
    if kind == "out":
        return Out(subj, rng.choice(pool), body)
    z = "zb"
    return In(subj, z, body)


# --- laws ---------------------------------------------------------------------

@dataclass
class Instance:
    law: str
    lhs: Process
    rhs: Process
    env: IdentifierEnv | None = None
    reverse: bool = False          # compare the configurations reached by one forward step


def _w(rng):
    return rng.choice(WEIGHTS)


def _operands(rng, k: int, pars: int = 1, boxsums: int = 2, prefixes: int = 6, inputs: int = 3) -> list:
    """k random terms sharing the generator budget between them."""
    par_at = rng.randrange(k) if pars else -1
    bs = [0] * k
    for _ in range(boxsums):
        bs[rng.randrange(k)] += 1
    ins = [0] * k
    for _ in range(inputs):
        ins[rng.randrange(k)] += 1
    return [random_term(rng, prefixes // k, int(i == par_at), bs[i], inputs=ins[i]) for i in range(k)]


def instances(rng: random.Random) -> list:
    """One instance of every law on freshly drawn terms.

    Operands of a law share one generator budget, so each instance stays within
    the limits of a single random term (associativity needs a third component).
    """
    out = []
    add = out.append
    (p,) = _operands(rng, 1)
    add(Instance("S0", Sum(p, NIL), p))
    add(Instance("S1", Sum(p, p), p))
    p, q = _operands(rng, 2)
    add(Instance("S2", Sum(p, q), Sum(q, p)))
    p, q, r = _operands(rng, 3)
    add(Instance("S3", Sum(p, Sum(q, r)), Sum(Sum(p, q), r)))
    pi, rho = _w(rng), _w(rng)
    (p,) = _operands(rng, 1)
    add(Instance("BS0", BoxSum(pi, p, NIL), p))
    add(Instance("BS1", BoxSum(pi, p, p), p))
    p, q = _operands(rng, 2, boxsums=1)
    add(Instance("BS2", BoxSum(pi, p, q), BoxSum(1 - pi, q, p)))
    p, q, r = _operands(rng, 3, boxsums=0)
    s = pi + rho - pi * rho
    add(Instance("BS3", BoxSum(pi, p, BoxSum(rho, q, r)), BoxSum(s, BoxSum(pi / s, p, q), r)))
    (p,) = _operands(rng, 1)
    fresh = next(n for n in ("y0", "y1", "y2") if n not in free_names(p))
    add(Instance("R0", Res(fresh, p), p))
    x, y = rng.sample(NAMES, 2)
    add(Instance("R1", Res(x, Res(y, p)), Res(y, Res(x, p))))
    p, q = _operands(rng, 2)
    add(Instance("R2", Res(x, Sum(p, q)), Sum(Res(x, p), Res(x, q))))
    (p,) = _operands(rng, 1, prefixes=5)
    alpha = random_prefix(rng, NIL, avoid=(x,))
    add(Instance("R3", Res(x, _reprefix(alpha, p)), _reprefix(alpha, Res(x, p))))
    beta = random_prefix(rng, NIL, subject=x)
    add(Instance("R4", Res(x, _reprefix(beta, p)), NIL))
    p, q = _operands(rng, 2, boxsums=1)
    add(Instance("R-box", Res(x, BoxSum(pi, p, q)), BoxSum(pi, Res(x, p), Res(x, q))))
    (p,) = _operands(rng, 1)
    add(Instance("P-unit", Par(p, NIL), p))
    p, q = _operands(rng, 2, pars=0)
    add(Instance("P-comm", Par(p, q), Par(q, p)))
    p, q, r = _operands(rng, 3, pars=0)
    add(Instance("P-assoc", Par(Par(p, q), r), Par(p, Par(q, r))))
    p, q = _operands(rng, 2, pars=0)
    only = sorted(free_names(p) - free_names(q)) or ["y0"]
    z = rng.choice(only)
    add(Instance("P-res", Res(z, Par(p, q)), Par(Res(z, p), Res(z, q))))
    (p,) = _operands(rng, 1)
    params = tuple(sorted(free_names(p)))
    args = tuple(rng.choice(NAMES) for _ in params)
    env = IdentifierEnv()
    env.define("A", params, p)
    add(Instance("I", Ident("A", args), substitute(p, dict(zip(params, args))), env))
    p, q = _operands(rng, 2, pars=0)
    expanded = head_normal_form(Par(p, q))
    add(Instance("E", Par(p, q), expanded))
    add(Instance("E-rev", Par(p, q), expanded, reverse=True))
    return out


def _reprefix(pfx, body):
    if isinstance(pfx, Tau):
        return Tau(body)
    if isinstance(pfx, Out):
        return Out(pfx.subj, pfx.obj, body)
    return In(pfx.subj, pfx.bind, body)


def _reverse_variant(inst: Instance, opts: EquivOptions) -> tuple:
    """Every first forward step of one side is matched by an equally labelled step
    of the other side into an FR-bisimilar configuration, so that the two
    histories can be undone in lockstep."""
    base = free_names(inst.lhs) | free_names(inst.rhs)
    l1 = build_lts(initial_config(inst.lhs), inst.env, None, opts.max_nodes, opts.max_depth, opts.features, base)
    l2 = build_lts(initial_config(inst.rhs), inst.env, None, opts.max_nodes, opts.max_depth, opts.features, base)
    if l1.truncated or l2.truncated:
        raise Truncated("state space exceeds bounds")
    g, r1, r2 = lts_pair_graph(l1, l2)
    block = rf.refine(g)[-1]

    def first_steps(root):
        return {(lab, block[t]) for _, a in g.prob[root] for lab, t in g.act[a] if lab[1] == "fwd"}

    left, right = first_steps(r1), first_steps(r2)
    for mine, theirs, side in ((left, right, "left"), (right, left, "right")):
        for lab, b in sorted(mine - theirs, key=str):
            return False, [f"{side} step {fmt_lts_label(lab)} has no matching history on the other side"]
    return True, []


def check_instance(inst: Instance, relation: str = "step", opts: EquivOptions | None = None) -> tuple:
    """(passed, explanation lines)."""
    opts = opts or EquivOptions(relation=relation, max_nodes=20000)
    if inst.reverse:
        return _reverse_variant(inst, opts)
    res = check(inst.lhs, inst.rhs, inst.env, None, opts)
    return res.equivalent, list(res.script)


@dataclass
class Failure:
    law: str
    lhs: str
    rhs: str
    relation: str
    script: list


@dataclass
class LawReport:
    seed: int
    cases: int
    counts: dict = field(default_factory=dict)     # law -> [passed, failed]
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def failed_laws(self) -> list:
        return sorted(law for law, (_, bad) in self.counts.items() if bad)

    def lines(self) -> list:
        out = []
        for law in sorted(self.counts):
            good, bad = self.counts[law]
            out.append(f"{law:8} {'PASS' if not bad else 'FAIL'}  {good} passed, {bad} failed")
        return out


def run_laws(seed: int = 7, cases: int = 200, relation: str = "step", pomset_every: int = 0,
             laws=None, keep: int = 3) -> LawReport:
    """Check every law on `cases` rounds of random terms.

    With pomset_every = k > 0 every k-th instance is also checked under pomset
    bisimilarity.  At most `keep` failures per law are recorded in full.
    """
    rng = random.Random(seed)
    report = LawReport(seed, cases)
    start = time.perf_counter()
    n = 0
    for _ in range(cases):
        for inst in instances(rng):
            if laws and inst.law not in laws:
                continue
            rels = [relation]
            n += 1
            if pomset_every and n % pomset_every == 0 and not inst.reverse and inst.env is None:
                rels.append("pomset")
            for rel in rels:
                try:
                    ok, script = check_instance(inst, rel)
                except Truncated as exc:
                    ok, script = False, [f"truncated: {exc}"]
                tally = report.counts.setdefault(inst.law if rel == relation else f"{inst.law}/{rel}", [0, 0])
                tally[0 if ok else 1] += 1
                if not ok and tally[1] <= keep:
                    report.failures.append(Failure(inst.law, pretty_print(inst.lhs), pretty_print(inst.rhs),
                                                   rel, script))
    report.seconds = time.perf_counter() - start
    return report
