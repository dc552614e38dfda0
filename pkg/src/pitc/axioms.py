"""Axiomatic normalization: head normal forms, expansion and canonical forms.

A head normal form is kept internally as a list of probabilistic branches,
each a sum of summands (alpha1 || ... || alphan).P.  A summand may carry bound
outputs (names restricted around the whole summand) and exclusions: pairs of
actions, one input and one output on the same channel coming from opposite
sides of a parallel composition, whose instantiation must not make them
complementary (that combination is the communication summand instead).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .env import IdentifierEnv, NotWeaklyGuarded, unfold_identifier
from .semantics import (Action, barendregt, canon_placeholders, fresh_for,
                        infer_memory, step_label, step_state)
from .state import EMPTY, DataState, EffectModel, test
from .syntax import (KEYED, BoxSum, Conc, conc_exclusions, GuardPrefix, Ident, In, Marked, Nil,
                     Out, Par, Pfx, Process, Res, Sum, Tau, NIL, alpha_key, conc,
                     free_names, keys_of, prefix_actions, strip_keys, substitute)

ONE = Fraction(1)


class DepthExceeded(RuntimeError):
    pass


class NotHeadNormal(ValueError):
    pass


@dataclass(frozen=True)
class Summand:
    acts: tuple                   # Pfx actions; input binders scope over cont
    cont: Process
    opened: frozenset = frozenset()   # restricted names sent as bound outputs
    excl: frozenset = frozenset()     # (input index, output index) pairs


@dataclass
class Branch:
    weight: Fraction
    resolved: Process             # what this branch leaves behind if it does not act
    summands: list


@dataclass
class Trace:
    steps: list = field(default_factory=list)   # (axiom, path, before, after)
    enabled: bool = True

    def add(self, axiom, path, before, after):
        if self.enabled:
            from .parser import pretty_print
            b = before if isinstance(before, str) else pretty_print(before)
            a = after if isinstance(after, str) else pretty_print(after)
            self.steps.append((axiom, path_str(path), b, a))

    def lines(self) -> list:
        return [f"{ax:6} @{p or 'root'}: {b}  =  {a}" for ax, p, b, a in self.steps]


def path_str(path) -> str:
    return ".".join(str(i) for i in path)


@dataclass
class _Env:
    env: IdentifierEnv | None
    state: DataState
    model: EffectModel
    trace: Trace
    resolved_mode: bool = False   # input is an action-phase term: only marked prefixes are enabled


def hnf_branches(p: Process, ctx: _Env, path=(), unfolding=frozenset()) -> list:
    """Head normal form of p as probabilistic branches of summands."""
    if isinstance(p, Nil):
        return [Branch(ONE, p, [])]
    if isinstance(p, Marked):
        if ctx.resolved_mode:
            acts = prefix_actions(p.body)
            return [Branch(ONE, p, [Summand(acts, p.body.body, frozenset(), conc_exclusions(acts))])]
        return hnf_branches(p.body, ctx, path, unfolding)
    if isinstance(p, (Tau, Out, In, Conc)):
        if ctx.resolved_mode:
            return [Branch(ONE, p, [])]
        acts = prefix_actions(p)
        return [Branch(ONE, p, [Summand(acts, p.body, frozenset(), conc_exclusions(acts))])]
    if isinstance(p, Ident):
        if ctx.resolved_mode:
            return [Branch(ONE, p, [])]
        if p.name in unfolding:
            raise NotWeaklyGuarded(p.name)
        body = unfold_identifier(p, ctx.env)
        ctx.trace.add("I", path, p, body)
        return hnf_branches(barendregt(body), ctx, path, unfolding | {p.name})
    if isinstance(p, GuardPrefix):
        ok = test(p.guard, ctx.state, ctx.model.alphabet or None)
        out = []
        for b in hnf_branches(p.body, ctx, path + (0,), unfolding):
            out.append(Branch(b.weight, GuardPrefix(p.guard, b.resolved), b.summands if ok else []))
        ctx.trace.add("G", path, p, p.body if ok else NIL)
        return out
    if isinstance(p, BoxSum):
        ls = hnf_branches(p.left, ctx, path + (0,), unfolding)
        rs = hnf_branches(p.right, ctx, path + (1,), unfolding)
        if len(ls) > 1 or len(rs) > 1:
            ctx.trace.add("BS3", path, p, "flattened box-sum")
        return ([Branch(p.weight * b.weight, b.resolved, b.summands) for b in ls]
                + [Branch((1 - p.weight) * b.weight, b.resolved, b.summands) for b in rs])
    if isinstance(p, Sum):
        ls = hnf_branches(p.left, ctx, path + (0,), unfolding)
        rs = hnf_branches(p.right, ctx, path + (1,), unfolding)
        if len(ls) > 1 or len(rs) > 1:
            ctx.trace.add("S/BS", path, p, "sum distributed over box-sum")
        return [Branch(a.weight * b.weight, Sum(a.resolved, b.resolved), a.summands + b.summands)
                for a, b in itertools.product(ls, rs)]
    if isinstance(p, Par):
        ls = hnf_branches(p.left, ctx, path + (0,), unfolding)
        rs = hnf_branches(p.right, ctx, path + (1,), unfolding)
        out = []
        for a, b in itertools.product(ls, rs):
            out.append(Branch(a.weight * b.weight, Par(a.resolved, b.resolved),
                              expand(a.summands, a.resolved, b.summands, b.resolved)))
        ctx.trace.add("E", path, p, "expanded parallel composition")
        return out
    if isinstance(p, Res):
        return [Branch(b.weight, Res(p.bind, b.resolved), restrict(p.bind, b.summands, ctx, path))
                for b in hnf_branches(p.body, ctx, path + (0,), unfolding)]
    if isinstance(p, KEYED):
        raise TypeError("keyed prefixes must be separated before head normalization")
    raise TypeError(p)


def restrict(y: str, summands: list, ctx: _Env, path) -> list:
    out = []
    for s in summands:
        subjects = {a.subj for a in s.acts if a.kind != "tau"}
        if y in subjects:
            ctx.trace.add("R4", path, f"(new {y}) summand on {y}", "0")
            continue
        if any(a.kind == "out" and a.obj == y for a in s.acts):
            ctx.trace.add("OPEN*", path, f"(new {y}) summand sending {y}", "bound output")
            out.append(Summand(s.acts, s.cont, s.opened | {y}, s.excl))
        else:
            ctx.trace.add("R3", path, f"(new {y}) summand", f"prefix.(new {y})...")
            out.append(Summand(s.acts, Res(y, s.cont), s.opened, s.excl))
    return out


def expand(ls: list, lres: Process, rs: list, rres: Process) -> list:
    """Summands of the parallel composition of two head normal forms."""
    if not rs:
        return [Summand(s.acts, Par(s.cont, rres), s.opened, s.excl) for s in ls]
    if not ls:
        return [Summand(s.acts, Par(lres, s.cont), s.opened, s.excl) for s in rs]
    out = []
    for a, b in itertools.product(ls, rs):
        n = len(a.acts)
        excl = set(a.excl) | {(i + n, j + n) for i, j in b.excl}
        for i, x in enumerate(a.acts):
            for j, y in enumerate(b.acts):
                if x.kind == "in" and y.kind == "out" and x.subj == y.subj and y.obj not in b.opened:
                    excl.add((i, j + n))
                if y.kind == "in" and x.kind == "out" and x.subj == y.subj and x.obj not in a.opened:
                    excl.add((j + n, i))
        out.append(Summand(a.acts + b.acts, Par(a.cont, b.cont), a.opened | b.opened, frozenset(excl)))
        if n == 1 and len(b.acts) == 1:
            c = _comm(a, b)
            if c is not None:
                out.append(c)
    return out


def _comm(a: Summand, b: Summand):
    x, y = a.acts[0], b.acts[0]
    if x.kind == "in" and y.kind == "out":
        sent, opened, lc, rc = y.obj, b.opened, substitute(a.cont, {x.obj: y.obj}), b.cont
    elif y.kind == "in" and x.kind == "out":
        sent, opened, lc, rc = x.obj, a.opened, a.cont, substitute(b.cont, {y.obj: x.obj})
    else:
        return None
    if x.subj != y.subj:
        return None
    body = Par(lc, rc)
    if sent in opened:
        body = Res(sent, body)
    return Summand((Pfx("tau"),), body, (a.opened | b.opened) - {sent}, frozenset())


# --- canonical forms --------------------------------------------------------

@dataclass(frozen=True)
class ActCF:
    """An enabled-action node: forward steps and, at the root only, the step that led here."""
    fwd: frozenset                # {(label, ProbCF)}
    back: tuple | None = None     # (keyed label, ActCF) or None


@dataclass(frozen=True)
class ProbCF:
    dist: frozenset               # {(ActCF, weight)}


@dataclass(frozen=True)
class CanonicalForm:
    root: object                  # ProbCF, or ActCF for action-phase input
    state: DataState = EMPTY

    def text(self) -> str:
        return render_cf(self.root)


class _Normalizer:
    def __init__(self, env, model, base, max_depth, trace):
        self.env, self.model, self.base = env, model, frozenset(base)
        self.max_depth, self.trace = max_depth, trace
        self.memo: dict = {}

    def ctx(self, s, resolved=False):
        return _Env(self.env, s, self.model, self.trace, resolved)

    def prob(self, p: Process, s: DataState, key: int) -> ProbCF:
        if key > self.max_depth:
            raise DepthExceeded(f"normalization deeper than {self.max_depth} steps")
        mk = ("p", alpha_key(p), s, key)
        if mk in self.memo:
            return self.memo[mk]
        p = barendregt(p, self.base | free_names(p))
        dist: dict = {}
        branches = hnf_branches(p, self.ctx(s))
        for b in branches:
            a = self.act(b, s, key)
            dist[a] = dist.get(a, Fraction(0)) + b.weight
        if len(dist) < len(branches):
            self.trace.add("BS1", (), p, "equal box-sum branches merged")
        out = ProbCF(frozenset(dist.items()))
        self.memo[mk] = out
        return out

    def act(self, b: Branch, s: DataState, key: int, back=None) -> ActCF:
        universe = self.base | free_names(b.resolved)
        fresh = fresh_for(key, universe)
        universe = universe | {fresh}
        steps = []
        for sm in b.summands:
            steps += self.early(sm, universe, s, key)
        fwd = frozenset(steps)
        if len(fwd) < len(steps):
            self.trace.add("S1", (), "duplicate summands", "merged")
        return ActCF(fwd, back)

    def early(self, sm: Summand, universe, s, key) -> list:
        ins = [i for i, a in enumerate(sm.acts) if a.kind == "in"]
        out = []
        for choice in itertools.product(sorted(universe), repeat=len(ins)):
            inst = dict(zip(ins, choice))
            if any(inst[i] == sm.acts[j].obj for i, j in sm.excl):
                continue
            sigma = {sm.acts[i].obj: inst[i] for i in ins}
            cont = substitute(sm.cont, sigma)
            acts = []
            for i, a in enumerate(sm.acts):
                if a.kind == "tau":
                    acts.append(Action("tau"))
                elif a.kind == "in":
                    acts.append(Action("in", a.subj, inst[i]))
                elif a.obj in sm.opened:
                    acts.append(Action("bout", a.subj, a.obj))
                else:
                    acts.append(Action("out", a.subj, a.obj))
            for acts2, cont2 in canon_placeholders(tuple(acts), cont, key):
                label = step_label(acts2)
                s2 = step_state(label, s, self.model)
                out.append((label, self.prob(cont2, s2, key + 1)))
        return out

    def resolved_act(self, p: Process, s: DataState, key: int, back) -> ActCF:
        p = barendregt(p, self.base | free_names(p))
        (b,) = hnf_branches(p, self.ctx(s, resolved=True))
        return self.act(b, s, key, back)


def normalize(p: Process, env: IdentifierEnv | None = None, m: EffectModel | None = None,
              state: DataState = EMPTY, base=None, max_depth: int = 64,
              trace: Trace | None = None) -> CanonicalForm:
    """Canonical form of p at the given data state."""
    m = m or EffectModel()
    trace = trace if trace is not None else Trace(enabled=False)
    base = free_names(p) if base is None else frozenset(base)
    nz = _Normalizer(env, m, base, max_depth, trace)
    back = None
    key = 1
    if keys_of(p):
        c = infer_memory(p, state)
        for rec in c.memory:
            h = nz.resolved_act(strip_keys(rec.prior), rec.prior_state, rec.key, back)
            back = (tuple(a.keyed(rec.key) for a in rec.label), h)
        key = len(c.memory) + 1
        trace.add("HIST", (), p, f"{len(c.memory)} step(s) of history")
    live = strip_keys(p)
    if _has_marked(live):
        return CanonicalForm(nz.resolved_act(live, state, key, back), state)
    root = nz.prob(live, state, key)
    if back is not None:
        root = ProbCF(frozenset((ActCF(a.fwd, back), w) for a, w in root.dist))
    return CanonicalForm(root, state)


def _has_marked(p: Process) -> bool:
    from .lts import _contains
    return _contains(p, Marked)


@dataclass
class ProofResult:
    equal: bool
    trace: list
    left: list          # canonical forms per state
    right: list

    def __bool__(self):
        return self.equal


def prove_equal(p: Process, q: Process, env: IdentifierEnv | None = None,
                m: EffectModel | None = None, states=None, base=None,
                max_depth: int = 64) -> ProofResult:
    m = m or EffectModel()
    base = (free_names(p) | free_names(q)) if base is None else frozenset(base)
    states = tuple(states) if states is not None else (tuple(m.states) or (EMPTY,))
    trace = Trace()
    ls, rs = [], []
    equal = True
    for s in states:
        a = normalize(p, env, m, s, base, max_depth, trace)
        b = normalize(q, env, m, s, base, max_depth, trace)
        ls.append(a)
        rs.append(b)
        if a != b:
            equal = False
    trace.add("=" if equal else "=/=", (), "normal form of left", "normal form of right")
    return ProofResult(equal, trace.lines(), ls, rs)


# --- rendering --------------------------------------------------------------

def render_cf(node) -> str:
    from .semantics import label_str
    if isinstance(node, ProbCF):
        items = sorted((render_cf(a), w) for a, w in node.dist)
        if len(items) == 1:
            return items[0][0]
        return "{" + " ; ".join(f"{w}: {t}" for t, w in items) + "}"
    parts = sorted(f"{label_str(l)}.{_wrap(render_cf(t))}" for l, t in node.fwd)
    s = " + ".join(parts) if parts else "0"
    if node.back is not None:
        lab, h = node.back
        s += f" << {label_str(lab)} from [{render_cf(h)}]"
    return s


def _wrap(s: str) -> str:
    return s if s == "0" or s.startswith("{") and s.endswith("}") and " ; " in s else f"({s})"


# --- head normal forms as terms ---------------------------------------------

def _summand_term(sm: Summand) -> Process:
    t = conc(sm.acts, sm.cont)
    for y in sorted(sm.opened):
        t = Res(y, t)
    return t


def branches_term(branches: list) -> Process:
    def sum_of(b):
        if not b.summands:
            return NIL
        t = _summand_term(b.summands[0])
        for sm in b.summands[1:]:
            t = Sum(t, _summand_term(sm))
        return t

    terms = [(b.weight, sum_of(b)) for b in branches]
    t = terms[-1][1]
    rest = terms[-1][0]
    for w, u in reversed(terms[:-1]):
        rest += w
        t = BoxSum(w / rest, u, t)
    return t


def head_normal_form(p: Process, env: IdentifierEnv | None = None, state: DataState = EMPTY,
                     m: EffectModel | None = None) -> Process:
    """One level of prefixes exposed: a box-sum of sums of (concurrent) prefixes."""
    ctx = _Env(env, state, m or EffectModel(), Trace(enabled=False))
    return branches_term(hnf_branches(barendregt(p), ctx))


def is_hnf(p: Process) -> bool:
    if isinstance(p, BoxSum):
        return is_hnf(p.left) and is_hnf(p.right)
    if isinstance(p, Sum):
        return _summands_hnf(p.left) and _summands_hnf(p.right)
    if isinstance(p, Res):
        return isinstance(p.body, (Out, Conc, Res)) and is_hnf(p.body)
    return isinstance(p, (Nil, Tau, Out, In, Conc))


def _summands_hnf(p) -> bool:
    # below a + only sums of guarded summands, no box-sum
    return not isinstance(p, BoxSum) and is_hnf(p)


def apply_expansion(p: Par) -> Process:
    """Expand a parallel composition of two head normal forms into one head normal form."""
    if not isinstance(p, Par) or not (is_hnf(p.left) and is_hnf(p.right)):
        raise NotHeadNormal("both operands must be in head normal form")
    return head_normal_form(p)
