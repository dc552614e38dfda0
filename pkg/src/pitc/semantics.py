"""Operational engine: probabilistic resolution, forward steps and reverse steps.

A configuration carries its history as a chain of memory records, one per
executed step.  Every prefix fired in a step receives the same key, equal to
the number of steps taken so far plus one; reversal always undoes the most
recent step and restores the recorded prior configuration exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .env import IdentifierEnv, NotWeaklyGuarded, unfold_identifier
from .state import EMPTY, TAU, DataState, EffectModel, effect, test
from .syntax import (KEYED, BoxSum, Conc, GuardPrefix, Ident, In, KeyedIn,
                     KeyedOut, KeyedTau, Marked, Nil, Out, Par, Process, Res,
                     Sum, Tau, _rebuild, alpha_key, fresh_name, free_names,
                     keys_of, names, strip_keys, strip_marks, substitute)

ONE = Fraction(1)


class MissingKeyMemory(LookupError):
    pass


# --- labels -----------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Action:
    """tau, free output x!y, input x?(z) (z = instantiated name) or bound output x!(w)."""
    kind: str  # 'tau' | 'out' | 'in' | 'bout'
    subj: str = ""
    obj: str = ""
    key: int = 0

    def effect_kind(self) -> str:
        return TAU if self.kind == "tau" else self.subj

    def unkeyed(self) -> "Action":
        return Action(self.kind, self.subj, self.obj)

    def keyed(self, k: int) -> "Action":
        return Action(self.kind, self.subj, self.obj, k)

    def __str__(self):
        if self.kind == "tau":
            s = "tau"
        elif self.kind == "out":
            s = f"{self.subj}!{self.obj}"
        elif self.kind == "bout":
            s = f"{self.subj}!({self.obj})"
        else:
            s = f"{self.subj}?({self.obj})"
        return f"{s}[{self.key}]" if self.key else s


def step_label(actions) -> tuple:
    return tuple(sorted(actions))


def label_str(label) -> str:
    return "{" + ", ".join(str(a) for a in label) + "}"


def complementary(a: Action, b: Action) -> bool:
    if a.kind in ("out", "bout") and b.kind == "in":
        return a.subj == b.subj and a.obj == b.obj
    if b.kind in ("out", "bout") and a.kind == "in":
        return complementary(b, a)
    return False


# --- configurations ---------------------------------------------------------

@dataclass(frozen=True)
class MemRecord:
    key: int
    label: tuple
    prior: Process
    prior_state: DataState
    prior_memory: tuple = ()


@dataclass(frozen=True)
class Config:
    process: Process
    state: DataState = EMPTY
    memory: tuple = ()  # MemRecord chain, oldest first

    def next_key(self) -> int:
        return len(self.memory) + 1


def memory_key(memory: tuple):
    return tuple((r.key, r.label, alpha_key(r.prior), r.prior_state) for r in memory)


def config_key(c: Config):
    return (alpha_key(c.process), c.state, memory_key(c.memory))


@dataclass(frozen=True)
class ProbOutcome:
    weight: Fraction
    target: Config


# --- probabilistic resolution -----------------------------------------------

def resolve(p: Process, env: IdentifierEnv | None = None, _unfolding=frozenset()) -> list:
    """Distribution [(weight, process)] over resolutions of p; enabled prefixes get marked."""
    if isinstance(p, (Tau, Out, In, Conc)):
        return [(ONE, Marked(p))]
    if isinstance(p, (Nil, Marked)):
        return [(ONE, p)]
    if isinstance(p, Ident):
        if p.name in _unfolding:
            raise NotWeaklyGuarded(p.name)
        return resolve(unfold_identifier(p, env), env, _unfolding | {p.name})
    if isinstance(p, BoxSum):
        out = [(p.weight * w, q) for w, q in resolve(p.left, env, _unfolding)]
        out += [((1 - p.weight) * w, q) for w, q in resolve(p.right, env, _unfolding)]
        return _merge(out)
    if isinstance(p, (Sum, Par)):
        ls = resolve(p.left, env, _unfolding)
        rs = resolve(p.right, env, _unfolding)
        return _merge([(wl * wr, type(p)(l, r)) for (wl, l), (wr, r) in itertools.product(ls, rs)])
    if isinstance(p, KEYED):
        # the history prefix itself is inert; its continuation is live
        return [(w, _rebuild(p, q)) for w, q in resolve(p.body, env, frozenset())]
    if isinstance(p, (GuardPrefix, Res)):
        return [(w, _rebuild(p, q)) for w, q in resolve(p.body, env, _unfolding)]
    raise TypeError(p)


def _merge(outcomes: list) -> list:
    acc: dict = {}
    order = []
    for w, q in outcomes:
        k = alpha_key(q)
        if k in acc:
            acc[k] = (acc[k][0] + w, acc[k][1])
        else:
            acc[k] = (w, q)
            order.append(k)
    return [acc[k] for k in order]


def prob_transitions(c: Config, env: IdentifierEnv | None = None) -> list:
    return [ProbOutcome(w, Config(q, c.state, c.memory)) for w, q in resolve(c.process, env)]


# --- forward steps ----------------------------------------------------------

@dataclass(frozen=True)
class _Ctx:
    key: int
    fresh: str
    universe: frozenset
    state: DataState
    model: EffectModel


def barendregt(p: Process, avoid_names=frozenset()) -> Process:
    """Alpha-rename binders so that they are pairwise distinct and distinct from free names.

    Names in avoid_names are treated as free as well.
    """
    used = set(free_names(p)) | set(avoid_names)
    avoid = set(names(p)) | used

    def go(q):
        if isinstance(q, (Res, In)):
            b, body = q.bind, q.body
            if b in used:
                nb = fresh_name(avoid, prefix="v")
                body = substitute(body, {b: nb})
                b = nb
            used.add(b)
            avoid.add(b)
            body = go(body)
            return Res(b, body) if isinstance(q, Res) else In(q.subj, b, body)
        if isinstance(q, Conc):
            sigma = {}
            acts = []
            for a in q.actions:
                if a.kind == "in":
                    b = a.obj
                    if b in used:
                        nb = fresh_name(avoid, prefix="v")
                        sigma[b] = nb
                        b = nb
                    used.add(b)
                    avoid.add(b)
                    a = type(a)("in", a.subj, b)
                acts.append(a)
            return Conc(tuple(acts), go(substitute(q.body, sigma)))
        if isinstance(q, (Nil, Ident)):
            return q
        if isinstance(q, (Sum, Par)):
            return type(q)(go(q.left), go(q.right))
        if isinstance(q, BoxSum):
            return BoxSum(q.weight, go(q.left), go(q.right))
        return _rebuild(q, go(q.body))

    return go(p)


def _fire(p: Process, ctx: _Ctx, extras: frozenset) -> list:
    """Steps of an enabled (marked) prefix: [(actions, residue)]."""
    m = ctx.key
    if isinstance(p, Tau):
        return [((Action("tau"),), KeyedTau(m, p.body))]
    if isinstance(p, Out):
        return [((Action("out", p.subj, p.obj),), KeyedOut(p.subj, p.obj, m, p.body))]
    universe = sorted(ctx.universe | extras)
    if isinstance(p, In):
        return [((Action("in", p.subj, z),), KeyedIn(p.subj, z, p.bind, m, substitute(p.body, {p.bind: z})))
                for z in universe]
    if isinstance(p, Conc):
        ins = [a for a in p.actions if a.kind == "in"]
        out = []
        clash = [(a.obj, b.obj) for a in ins for b in p.actions if b.kind == "out" and a.subj == b.subj]
        for choice in itertools.product(universe, repeat=len(ins)):
            inst = dict(zip((a.obj for a in ins), choice))
            if any(inst[z] == y for z, y in clash):
                continue
            body = substitute(p.body, inst)
            acts = []
            for a in reversed(p.actions):
                if a.kind == "tau":
                    body = KeyedTau(m, body)
                    acts.append(Action("tau"))
                elif a.kind == "out":
                    body = KeyedOut(a.subj, a.obj, m, body)
                    acts.append(Action("out", a.subj, a.obj))
                else:
                    body = KeyedIn(a.subj, inst[a.obj], a.obj, m, body)
                    acts.append(Action("in", a.subj, inst[a.obj]))
            out.append((tuple(reversed(acts)), body))
        return out
    raise TypeError(p)


def _bouts(steps) -> frozenset:
    return frozenset(a.obj for acts, _ in steps for a in acts if a.kind == "bout")


def _steps(p: Process, ctx: _Ctx, extras: frozenset = frozenset()) -> list:
    if isinstance(p, Marked):
        return _fire(p.body, ctx, extras)
    if isinstance(p, KEYED):
        return [(acts, _rebuild(p, q)) for acts, q in _steps(p.body, ctx, extras)]
    if isinstance(p, GuardPrefix):
        alphabet = ctx.model.alphabet or None
        if not test(p.guard, ctx.state, alphabet):
            return []
        return _steps(p.body, ctx, extras)
    if isinstance(p, Sum):
        return _steps(p.left, ctx, extras) + _steps(p.right, ctx, extras)
    if isinstance(p, Res):
        return _res_steps(p, ctx, extras)
    if isinstance(p, Par):
        return _par_steps(p, ctx, extras)
    # unmarked prefixes, nil, unresolved choices and identifiers cannot act here
    return []


def _res_steps(p: Res, ctx: _Ctx, extras: frozenset) -> list:
    y = p.bind
    inner = _Ctx(ctx.key, ctx.fresh, ctx.universe | {y}, ctx.state, ctx.model)
    out = []
    for acts, q in _steps(p.body, inner, extras):
        if any(a.subj == y or (a.kind == "in" and a.obj == y) for a in acts):
            continue
        if any(a.kind == "out" and a.obj == y for a in acts):
            acts = tuple(Action("bout", a.subj, a.obj) if a.kind == "out" and a.obj == y else a for a in acts)
            out.append((acts, q))
        else:
            out.append((acts, Res(y, q)))
    return out


def _par_steps(p: Par, ctx: _Ctx, extras: frozenset) -> list:
    left0 = _steps(p.left, ctx, extras)
    right0 = _steps(p.right, ctx, extras)
    bl, br = _bouts(left0), _bouts(right0)
    left = _steps(p.left, ctx, extras | br) if br else left0
    right = _steps(p.right, ctx, extras | bl) if bl else right0
    if not right:
        return [(acts, Par(q, p.right)) for acts, q in left]
    if not left:
        return [(acts, Par(p.left, q)) for acts, q in right]
    out = []
    for (la, lq), (ra, rq) in itertools.product(left, right):
        if _joint_ok(la, ra, br) and _joint_ok(ra, la, bl):
            out.append((la + ra, Par(lq, rq)))
        if len(la) == 1 and len(ra) == 1 and complementary(la[0], ra[0]):
            a, b = la[0], ra[0]
            bound = a.obj if "bout" in (a.kind, b.kind) else None
            res = Par(lq, rq)
            out.append(((Action("tau"),), Res(bound, res) if bound else res))
    return out


def _joint_ok(mine, theirs, their_bouts) -> bool:
    for a in mine:
        if a.kind == "in" and a.obj in their_bouts:
            return False
        if any(complementary(a, b) for b in theirs):
            return False
    return True


def input_universe(c: Config, base=frozenset()) -> frozenset:
    """Names an input may receive: base names plus the free names of the live process."""
    return frozenset(base) | free_names(strip_keys(c.process))


def fresh_for(key: int, universe: frozenset) -> str:
    """The name a step with the given key feeds to inputs that receive something new."""
    cand = f"w{key}"
    if cand in universe:
        cand = fresh_name(universe, prefix=f"w{key}_f")
    return cand


def forward_transitions(c: Config, m: EffectModel | None = None, base=frozenset()) -> list:
    """All forward steps [(label, Config)] of an action-phase configuration."""
    m = m or EffectModel()
    key = c.next_key()
    universe = input_universe(c, base)
    fresh = fresh_for(key, universe)
    ctx = _Ctx(key, fresh, universe | {fresh}, c.state, m)
    proc = barendregt(c.process, ctx.universe)
    out = []
    seen = set()
    for acts0, q0 in _steps(proc, ctx):
        for acts, q in canon_placeholders(acts0, q0, key):
            label = step_label(acts)
            state = step_state(label, c.state, m)
            q = strip_marks(q)
            k = (label, alpha_key(q), state)
            if k in seen:
                continue
            seen.add(k)
            rec = MemRecord(key, label, c.process, c.state)
            out.append((label, Config(q, state, c.memory + (rec,))))
    return out


def canon_placeholders(acts, q, key) -> list:
    """Rename bound-output placeholders to w<key>_<i>.

    Placeholders are ordered by the subjects they are emitted on; placeholders
    that tie are tried in every order, so the result does not depend on the
    binder names chosen in q.
    """
    bouts = sorted({a.obj for a in acts if a.kind == "bout"})
    if not bouts:
        return [(acts, q)]
    sig = {b: tuple(sorted(a.subj for a in acts if a.kind == "bout" and a.obj == b)) for b in bouts}
    groups: dict = {}
    for b in bouts:
        groups.setdefault(sig[b], []).append(b)
    orders = [list(itertools.permutations(groups[k])) for k in sorted(groups)]
    avoid0 = (free_names(q) - set(bouts)) | {a.subj for a in acts} | {a.obj for a in acts if a.kind != "bout"}
    out = []
    for combo in itertools.product(*orders):
        seq = [b for grp in combo for b in grp]
        avoid = set(avoid0)
        sigma = {}
        for i, b in enumerate(seq):
            cand = f"w{key}_{i}"
            if cand in avoid:
                cand = fresh_name(avoid, prefix=f"w{key}_{i}_")
            avoid.add(cand)
            sigma[b] = cand
        new_acts = tuple(Action("bout", a.subj, sigma[a.obj]) if a.kind == "bout" else a for a in acts)
        out.append((new_acts, substitute(q, sigma)))
    return out


def step_state(label, s: DataState, m: EffectModel) -> DataState:
    """Union over the step's actions of their effects on s."""
    out = DataState()
    for a in label:
        out = out | effect(a.effect_kind(), s, m)
    return out


def initial_config(p: Process, s: DataState = EMPTY) -> Config:
    """Configuration for a term read from text: keyed terms get an inferred history."""
    return infer_memory(p, s) if keys_of(p) else Config(p, s)


def reverse_transitions(c: Config, m: EffectModel | None = None) -> list:
    """Undo the most recent step, if any: [(keyed label, Config)]."""
    live_keys = set(keys_of(c.process))
    recorded = {r.key for r in c.memory}
    missing = live_keys - recorded
    if missing:
        raise MissingKeyMemory(f"no memory for key(s) {sorted(missing)}")
    if not c.memory:
        return []
    rec = c.memory[-1]
    label = tuple(a.keyed(rec.key) for a in rec.label)
    return [(label, Config(rec.prior, rec.prior_state, c.memory[:-1]))]


def infer_memory(p: Process, s: DataState = EMPTY) -> Config:
    """Reconstruct a memory chain for a keyed term given without history.

    Each key is undone by replacing its prefixes with marked unkeyed ones; an
    input continuation is mapped back by renaming the received name to the
    recorded binder.  Discarded sum branches and earlier data states are not
    recoverable, so the prior state is taken to be s.
    """
    keys = sorted(set(keys_of(p)))
    if keys != list(range(1, len(keys) + 1)):
        raise MissingKeyMemory(f"keys must be 1..n, got {keys}")
    chain = []
    cur = p
    for k in reversed(keys):
        prior, label = _unkey(cur, k)
        cur = strip_marks(prior)
        # prefixes enabled alongside the undone ones were marked too
        res = resolve(cur)
        if len(res) == 1:
            prior = res[0][1]
        chain.append((k, step_label(label), prior))
    memory: tuple = ()
    for k, label, prior in reversed(chain):
        memory = memory + (MemRecord(k, label, prior, s),)
    return Config(p, s, memory)


def _unkey(p: Process, k: int):
    acts = []

    def go(q):
        if isinstance(q, KeyedTau) and q.key == k:
            acts.append(Action("tau"))
            return Marked(Tau(go(q.body)))
        if isinstance(q, KeyedOut) and q.key == k:
            acts.append(Action("out", q.subj, q.obj))
            return Marked(Out(q.subj, q.obj, go(q.body)))
        if isinstance(q, KeyedIn) and q.key == k:
            acts.append(Action("in", q.subj, q.inst))
            body = go(q.body)
            if q.bind != q.inst:
                body = substitute(body, {q.inst: q.bind})
            return Marked(In(q.subj, q.bind, body))
        if isinstance(q, (Nil, Ident)):
            return q
        if isinstance(q, (Sum, Par)):
            return type(q)(go(q.left), go(q.right))
        if isinstance(q, BoxSum):
            return BoxSum(q.weight, go(q.left), go(q.right))
        return _rebuild(q, go(q.body))

    return go(p), acts
