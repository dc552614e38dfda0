"""Prime event structures for recursion-free terms.

Events are prefix occurrences (one per input instantiation) and
synchronisations of an output with an input at a parallel composition.  The
parallel composition is built as the synchronised product of the component
structures: each product event is paired with every minimal history that
secures it, which duplicates continuations where a prefix may or may not have
synchronised.

Besides its label, every event remembers where it sits in the term (so that
steps can be checked against the operational rules for parallel composition),
the guards it must pass, the box-sum branches it belongs to, and the places
where the operational rules would filter a step containing it (restrictions on
its subject, and inputs that received a name private to the other side of a
parallel composition).  Events that are filtered somewhere never occur; they are
kept apart as `hidden` events because they still matter for deciding whether
one side of a parallel composition can move.  Filtering by a restriction is
conditional: once the restricted name has been extruded by an output to the
environment, the restriction is gone and later uses of the name are allowed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .semantics import Action, barendregt, complementary, fresh_for
from .syntax import (BoxSum, Conc, GuardPrefix, Ident, In, KEYED, Marked, Nil, Out,
                     Par, Process, Res, Sum, Tau, free_names, substitute)


class UnsupportedRecursion(ValueError):
    pass


@dataclass(frozen=True)
class Event:
    id: int
    label: Action
    causes: frozenset = frozenset()   # strict causes (transitively closed)
    occ: tuple = ()                   # term path of the prefix, or of the parallel node for a sync
    sync: bool = False
    guards: tuple = ()
    bs: frozenset = frozenset()       # {(box-sum id, 0 | 1)}
    drop: frozenset = frozenset()     # {(term path, name | None)}: filtered there unless name was extruded
    opens: str | None = None          # restricted name carried as object, if any
    group: object = None              # events of one concurrent prefix fire together
    fp: tuple = ()                    # footprint: ('pfx', leaf id) or ('sync', path, fp, fp)


@dataclass
class _ES:
    events: dict = field(default_factory=dict)
    conflict: set = field(default_factory=set)

    def ids(self):
        return set(self.events)


class _Builder:
    def __init__(self, universe):
        self.universe = frozenset(universe)
        self.next_id = 0
        self.next_bs = 0
        self.bs_weight: dict = {}
        self.pars: list = []
        self.placeholders: set = set()

    def new_id(self):
        self.next_id += 1
        return self.next_id

    # -- term constructs --------------------------------------------------

    def build(self, p: Process, path: tuple, scope: frozenset, extras: frozenset) -> _ES:
        if isinstance(p, Nil):
            return _ES()
        if isinstance(p, Ident):
            raise UnsupportedRecursion(f"identifier {p.name} left after unfolding")
        if isinstance(p, (KEYED, Marked)):
            raise ValueError("event structures are built from key-free, unmarked terms")
        if isinstance(p, (Tau, Out)):
            lab = Action("tau") if isinstance(p, Tau) else Action("out", p.subj, p.obj)
            return self.prefix([lab], None, p.body, {}, path, scope, extras)
        if isinstance(p, In):
            return self.inputs([(p.subj, p.bind)], [], p.body, path, scope, extras)
        if isinstance(p, Conc):
            ins = [(a.subj, a.obj) for a in p.actions if a.kind == "in"]
            return self.inputs(ins, list(p.actions), p.body, path, scope, extras)
        if isinstance(p, GuardPrefix):
            es = self.build(p.body, path + (0,), scope, extras)
            for i, e in list(es.events.items()):
                if not e.causes:
                    es.events[i] = replace(e, guards=e.guards + (p.guard,))
            return es
        if isinstance(p, (Sum, BoxSum)):
            l = self.build(p.left, path + (0,), scope, extras)
            r = self.build(p.right, path + (1,), scope, extras)
            if isinstance(p, BoxSum):
                self.next_bs += 1
                b = self.next_bs
                self.bs_weight[b] = p.weight
                for es, side in ((l, 0), (r, 1)):
                    for i, e in list(es.events.items()):
                        es.events[i] = replace(e, bs=e.bs | {(b, side)})
            return self.union_conflicting([l, r])
        if isinstance(p, Res):
            return self.restrict(p.bind, self.build(p.body, path + (0,), scope | {p.bind}, extras), path)
        if isinstance(p, Par):
            return self.par(p, path, scope, extras)
        raise TypeError(p)

    def prefix(self, labels, group, body, sigma, path, scope, extras) -> _ES:
        es = self.build(substitute(body, sigma) if sigma else body, path + (0,), scope, extras)
        new = []
        for k, lab in enumerate(labels):
            i = self.new_id()
            occ = path if len(labels) == 1 else path + (("c", k),)
            new.append(Event(i, lab, frozenset(), occ, group=group, fp=("pfx", i)))
        ids = frozenset(e.id for e in new)
        for i, e in list(es.events.items()):
            es.events[i] = replace(e, causes=e.causes | ids)
        for e in new:
            es.events[e.id] = e
        return es

    def inputs(self, ins, actions, body, path, scope, extras) -> _ES:
        universe = sorted(self.universe | scope | extras)
        branches = []
        clash = [(b, o.obj) for x, b in ins for o in actions if o.kind == "out" and o.subj == x]
        for choice in itertools.product(universe, repeat=len(ins)):
            sigma = {b: z for (_, b), z in zip(ins, choice)}
            if any(sigma[b] == y for b, y in clash):
                continue
            if actions:
                labels = [Action("tau") if a.kind == "tau" else
                          Action("out", a.subj, a.obj) if a.kind == "out" else
                          Action("in", a.subj, sigma[a.obj]) for a in actions]
                group = (path, choice)
            else:
                labels = [Action("in", ins[0][0], choice[0])]
                group = None
            branches.append(self.prefix(labels, group, body, sigma, path, scope, extras))
        if not ins:
            labels = [Action("tau") if a.kind == "tau" else Action("out", a.subj, a.obj) for a in actions]
            return self.prefix(labels, (path, ()), body, {}, path, scope, extras)
        return self.union_conflicting(branches)

    @staticmethod
    def union_conflicting(parts) -> _ES:
        out = _ES()
        for es in parts:
            out.events.update(es.events)
            out.conflict |= es.conflict
        for a, b in itertools.combinations(parts, 2):
            for i in a.events:
                for j in b.events:
                    out.conflict.add(frozenset((i, j)))
        return out

    def restrict(self, y, es: _ES, path) -> _ES:
        for i, e in list(es.events.items()):
            lab = e.label
            if lab.kind != "tau" and (lab.subj == y or (lab.kind == "in" and lab.obj == y)):
                e = replace(e, drop=e.drop | {(path, y)})
            if lab.kind == "out" and lab.obj == y:
                e = replace(e, opens=y)
                self.placeholders.add(y)
            es.events[i] = e
        return es

    # -- parallel composition ----------------------------------------------

    def par(self, p: Par, path, scope, extras) -> _ES:
        self.pars.append(path)
        l0 = self.build(p.left, path + (0,), scope, extras)
        r0 = self.build(p.right, path + (1,), scope, extras)
        bl, br = _opened(l0), _opened(r0)
        l = self.build(p.left, path + (0,), scope, extras | br) if br else l0
        r = self.build(p.right, path + (1,), scope, extras | bl) if bl else r0
        return self.product(l, r, path, bl, br)

    def product(self, l: _ES, r: _ES, path, bl, br) -> _ES:
        side = {"L": l, "R": r}
        partners = {"L": {}, "R": {}}
        for i, a in l.events.items():
            for j, b in r.events.items():
                if _comp(a, b):
                    partners["L"].setdefault(i, []).append(j)
                    partners["R"].setdefault(j, []).append(i)

        def comps(q):
            return [k for k in (("L", q[0]), ("R", q[1])) if k[1] is not None]

        def causes(k):
            return [(k[0], c) for c in side[k[0]].events[k[1]].causes]

        def clash(k1, k2):
            return k1[0] == k2[0] and frozenset((k1[1], k2[1])) in side[k1[0]].conflict

        def as_pe(k, m=None):
            return (k[1], m) if k[0] == "L" else (m, k[1])

        def histories(pe):
            out = []

            def rec(chosen, pending):
                pending = [k for k in pending if k not in chosen]
                if not pending:
                    if _acyclic(chosen, causes):
                        out.append(frozenset(set(chosen.values()) - {pe}))
                    return
                k, rest = pending[0], pending[1:]
                options = [as_pe(k)] + [as_pe(k, m) for m in partners[k[0]].get(k[1], [])]
                for q in options:
                    new = comps(q)
                    if any(n in chosen for n in new if n != k) or \
                            any(clash(n, o) for n in new for o in chosen):
                        continue
                    ch = dict(chosen)
                    for n in new:
                        ch[n] = q
                    rec(ch, rest + [c for n in new for c in causes(n)])

            rec({k: pe for k in comps(pe)}, [c for k in comps(pe) for c in causes(k)])
            return out

        pes = [(i, None) for i in l.events] + [(None, j) for j in r.events]
        pes += [(i, j) for i, js in partners["L"].items() for j in js]
        prime = [(pe, h) for pe in pes for h in histories(pe)]
        index = {}
        for pe, h in prime:
            index[(pe, h)] = self.new_id()

        def cover(full):
            return {k: q for q in full for k in comps(q)}

        def closure(q, cov):
            seen, todo = {q}, [q]
            while todo:
                for k in comps(todo.pop()):
                    for c in causes(k):
                        d = cov[c]
                        if d not in seen:
                            seen.add(d)
                            todo.append(d)
            return frozenset(seen - {q})

        out = _ES()
        fulls = {}
        for pe, h in prime:
            full = h | {pe}
            fulls[index[(pe, h)]] = full
            cov = cover(full)
            cause_ids = frozenset(index[(q, closure(q, cov))] for q in h)
            closed = {side["L"].events[q[0]].opens for q in full
                      if q[0] is not None and q[1] is not None and side["L"].events[q[0]].opens}
            closed |= {side["R"].events[q[1]].opens for q in full
                       if q[0] is not None and q[1] is not None and side["R"].events[q[1]].opens}
            out.events[index[(pe, h)]] = self._product_event(
                index[(pe, h)], pe, l, r, path, cause_ids, closed, bl, br)

        ids = sorted(fulls)
        for a, b in itertools.combinations(ids, 2):
            fa, fb = fulls[a], fulls[b]
            if fa <= fb or fb <= fa:
                continue
            union = fa | fb
            cov: dict = {}
            bad = False
            for q in union:
                for k in comps(q):
                    if cov.setdefault(k, q) != q:
                        bad = True
            if not bad:
                ks = list(cov)
                bad = any(clash(x, y) for x, y in itertools.combinations(ks, 2)) or \
                    not _acyclic(cov, causes)
            if bad:
                out.conflict.add(frozenset((a, b)))
        return out

    def _product_event(self, eid, pe, l, r, path, cause_ids, closed, bl, br) -> Event:
        i, j = pe
        if i is not None and j is not None:
            a, b = l.events[i], r.events[j]
            return Event(eid, Action("tau"), cause_ids, path, True, a.guards + b.guards,
                         a.bs | b.bs, frozenset(), None, None, ("sync", path, a.fp, b.fp))
        e = l.events[i] if i is not None else r.events[j]
        other = br if i is not None else bl
        lab, drop, opens = e.label, set(e.drop), e.opens
        if lab.kind == "in" and lab.obj in other:
            drop.add((path, lab.obj))
        if lab.kind != "tau" and lab.subj in closed:
            drop.add((path, lab.subj))
        if lab.kind == "out" and lab.obj in closed:
            opens = lab.obj
        return replace(e, id=eid, causes=cause_ids, drop=frozenset(drop), opens=opens)


def _comp(a: Event, b: Event) -> bool:
    return complementary(a.label, b.label)


def _opened(es: _ES) -> frozenset:
    return frozenset(e.opens for e in es.events.values() if e.opens)


def _acyclic(cov: dict, causes) -> bool:
    """The product events in cov (component -> product event) admit a securing order."""
    succ: dict = {}
    for k, q in cov.items():
        for c in causes(k):
            d = cov.get(c)
            if d is None:
                return False
            if d != q:
                succ.setdefault(d, set()).add(q)
    state: dict = {}

    def visit(n):
        state[n] = 1
        for m in succ.get(n, ()):
            s = state.get(m)
            if s == 1 or (s is None and not visit(m)):
                return False
        state[n] = 2
        return True

    return all(state.get(n) == 2 or visit(n) for n in set(cov.values()))


# --- public structure --------------------------------------------------------

@dataclass
class Pes:
    events: dict                 # visible events by id
    hidden: dict                 # events that are always filtered somewhere
    conflict: frozenset          # frozenset pairs over all ids
    bs_weight: dict              # box-sum id -> weight of its left branch
    term: Process                # the (renamed, unfolded) term the structure was built from
    universe: frozenset

    def event(self, i) -> Event:
        return self.events[i] if i in self.events else self.hidden[i]

    def all_events(self) -> dict:
        return {**self.events, **self.hidden}

    def leq(self, a, b) -> bool:
        return a == b or a in self.event(b).causes

    def in_conflict(self, a, b) -> bool:
        return frozenset((a, b)) in self.conflict

    def prob_conflict(self, a, b):
        """The weight pair if a and b sit in different branches of one box-sum, else None."""
        sa, sb = dict(self.event(a).bs), dict(self.event(b).bs)
        for k in sorted(set(sa) & set(sb)):
            if sa[k] != sb[k]:
                w = self.bs_weight[k]
                return (w, 1 - w) if sa[k] == 0 else (1 - w, w)
        return None

    def concurrent(self, a, b) -> bool:
        return not (self.leq(a, b) or self.leq(b, a) or self.in_conflict(a, b))

    def is_configuration(self, xs) -> bool:
        xs = set(xs)
        if not xs <= set(self.events):
            return False
        if any(not self.events[x].causes <= xs for x in xs):
            return False
        return not any(self.in_conflict(a, b) for a, b in itertools.combinations(xs, 2))

    def extruded(self, conf) -> frozenset:
        """Restricted names already sent to the environment within conf."""
        return frozenset(self.event(e).opens for e in conf if self.event(e).opens)

    def label_in(self, e, conf) -> Action:
        """Label of e when fired from conf: outputs of a still-private name are bound outputs."""
        ev = self.event(e)
        if ev.opens and ev.opens not in self.extruded(conf):
            return Action("bout", ev.label.subj, ev.label.obj)
        return ev.label


def _unfold_all(p: Process, env, stack=()) -> Process:
    from .env import unfold_identifier
    from .syntax import _rebuild
    if isinstance(p, Ident):
        if p.name in stack:
            raise UnsupportedRecursion(f"identifier {p.name} is recursive")
        return _unfold_all(unfold_identifier(p, env), env, stack + (p.name,))
    if isinstance(p, (Nil,)):
        return p
    if isinstance(p, (Sum, Par)):
        return type(p)(_unfold_all(p.left, env, stack), _unfold_all(p.right, env, stack))
    if isinstance(p, BoxSum):
        return BoxSum(p.weight, _unfold_all(p.left, env, stack), _unfold_all(p.right, env, stack))
    if isinstance(p, Res):
        return Res(p.bind, _unfold_all(p.body, env, stack))
    return _rebuild(p, _unfold_all(p.body, env, stack))


def term_to_pes(p: Process, env=None, universe=None) -> Pes:
    """Event structure of a recursion-free, key-free term.

    Inputs are instantiated over `universe` (default: the free names of p) plus one
    fresh name, the same one the first operational step would use.
    """
    from .syntax import keys_of
    if keys_of(p):
        raise ValueError("event structures are built from key-free terms")
    p = _unfold_all(p, env)
    base = frozenset(universe) if universe is not None else free_names(p)
    base = base | free_names(p)
    p = barendregt(p, avoid_names=base)
    names = base | {fresh_for(1, base)}
    b = _Builder(names)
    es = b.build(p, (), frozenset(), frozenset())
    # a filter can only be lifted by extruding its name; names nobody sends out stay private
    openers = {e.opens for e in es.events.values() if e.opens}
    vis = {i: e for i, e in es.events.items() if all(y in openers for _, y in e.drop)}
    hid = {i: e for i, e in es.events.items() if i not in vis}
    return Pes(vis, hid, frozenset(es.conflict), dict(b.bs_weight), p, names)


def configurations(pes: Pes, limit: int = 100_000) -> list:
    """All finite configurations, smallest first."""
    seen = {frozenset()}
    frontier = [frozenset()]
    while frontier:
        nxt = []
        for c in frontier:
            for e in enabled_events(pes, c):
                d = c | {e}
                if d not in seen:
                    seen.add(d)
                    nxt.append(d)
                    if len(seen) > limit:
                        raise RuntimeError("too many configurations")
        frontier = nxt
    return sorted(seen, key=lambda c: (len(c), sorted(c)))


def enabled_events(pes: Pes, conf, include_hidden=False) -> list:
    pool = pes.all_events() if include_hidden else pes.events
    out = []
    for i, e in pool.items():
        if i in conf or not e.causes <= conf:
            continue
        if any(pes.in_conflict(i, c) for c in conf):
            continue
        out.append(i)
    return sorted(out)


def check_axioms(pes: Pes) -> list:
    """Violations of the prime event structure axioms (empty when well formed)."""
    bad = []
    evs = pes.all_events()
    for i, e in evs.items():
        if i in e.causes:
            bad.append(f"causality not irreflexive at {i}")
        for c in e.causes:
            if c not in evs:
                bad.append(f"{i} caused by unknown event {c}")
            elif not evs[c].causes <= e.causes:
                bad.append(f"causality not transitive at {c} < {i}")
    for pair in pes.conflict:
        if len(pair) != 2:
            bad.append(f"conflict not irreflexive: {set(pair)}")
            continue
        a, b = tuple(pair)
        for x, y in ((a, b), (b, a)):
            for k, e in evs.items():
                if x in e.causes and not pes.in_conflict(y, k):
                    bad.append(f"conflict {x}#{y} not inherited by {k}")
    for a, b in itertools.combinations(sorted(evs), 2):
        if pes.prob_conflict(a, b) and not pes.in_conflict(a, b):
            bad.append(f"probabilistic conflict {a},{b} outside conflict")
    return bad


# --- probabilistic choices ---------------------------------------------------

def _consistent(e: Event, chosen: dict, skip=None) -> bool:
    return all(chosen.get(b, s) == s for b, s in e.bs if b != skip)


def exposed_boxsums(pes: Pes, conf, choices=frozenset()) -> list:
    """Box-sums not yet resolved whose branches are reachable from conf."""
    chosen = dict(choices)
    out = set()
    for i in enabled_events(pes, conf, include_hidden=True):
        e = pes.event(i)
        for b, _ in e.bs:
            if b not in chosen and _consistent(e, chosen, skip=b):
                out.add(b)
    return sorted(out)


def resolutions(pes: Pes, conf, choices=frozenset()) -> list:
    """[(weight, choices')] resolving every exposed box-sum at once."""
    dist = [(Fraction(1), frozenset(choices))]
    for b in exposed_boxsums(pes, conf, choices):
        w = pes.bs_weight[b]
        dist = [(p * q, c | {(b, side)}) for p, c in dist for q, side in ((w, 0), (1 - w, 1))]
    return dist


def settled_choices(pes: Pes, conf, choices) -> frozenset:
    """Choices already made before the events outside conf happened.

    A box-sum was resolved before conf was left iff one of its members lies in
    conf or is enabled by it.
    """
    conf = frozenset(conf)
    live = set(conf) | set(enabled_events(pes, conf, include_hidden=True))
    keep = {b for i in live for b, _ in pes.event(i).bs}
    return frozenset((b, s) for b, s in choices if b in keep)


# --- steps -------------------------------------------------------------------

def _step_enabled(pes: Pes, conf, state, choices, model) -> list:
    from .state import test
    alphabet = (model.alphabet or None) if model is not None else None
    chosen = None if choices is None else dict(choices)
    out = []
    for i in enabled_events(pes, conf, include_hidden=True):
        e = pes.event(i)
        if chosen is not None and not _consistent(e, chosen):
            continue
        if chosen is not None and any(b not in chosen for b, _ in e.bs):
            continue
        if not all(test(g, state, alphabet) for g in e.guards):
            continue
        out.append(i)
    return out


def sos_steps(pes: Pes, conf=frozenset(), state=None, choices=None, model=None) -> list:
    """Steps from conf that the operational rules allow.

    Inside a parallel composition one side may move alone only if the other side
    has no step; when both move, no output of one side may meet a matching input
    of the other; a synchronisation is a step on its own.  Restriction and the
    parallel composition that closes a scope filter steps exactly where the
    operational rules do.
    """
    from .state import EMPTY
    state = EMPTY if state is None else state
    conf = frozenset(conf)
    en = _step_enabled(pes, conf, state, choices, model)
    ext = pes.extruded(conf)
    by_fp = {pes.event(i).fp: i for i in en}
    prefix_at: dict = {}
    sync_at: dict = {}
    for i in en:
        e = pes.event(i)
        if e.sync:
            sync_at.setdefault(e.occ, []).append(e.fp)
        else:
            occ = e.occ[:-1] if e.occ and isinstance(e.occ[-1], tuple) else e.occ
            prefix_at.setdefault(occ, []).append(e.fp)

    def ev(fp):
        return pes.event(by_fp[fp])

    def dropped(fp, path):
        return any(p == path and y not in ext for p, y in ev(fp).drop)

    def filt(steps, path):
        return [x for x in steps if not any(dropped(f, path) for f in x)]

    def go(p, path) -> list:
        if isinstance(p, Nil):
            return []
        if isinstance(p, (Tau, Out, In, Conc)):
            own = prefix_at.get(path, [])
            if isinstance(p, Conc):
                groups: dict = {}
                for f in own:
                    groups.setdefault(ev(f).group, set()).add(f)
                mine = [frozenset(g) for g in groups.values() if len(g) == len(p.actions)]
            else:
                mine = [frozenset({f}) for f in own]
            return mine + go(p.body, path + (0,))
        if isinstance(p, GuardPrefix):
            return go(p.body, path + (0,))
        if isinstance(p, (Sum, BoxSum)):
            return go(p.left, path + (0,)) + go(p.right, path + (1,))
        if isinstance(p, Res):
            return filt(go(p.body, path + (0,)), path)
        if isinstance(p, Par):
            left, right = go(p.left, path + (0,)), go(p.right, path + (1,))
            if not right:
                out = list(left)
            elif not left:
                out = list(right)
            else:
                out = [x | y for x in left for y in right
                       if not any(complementary(ev(a).label, ev(b).label) for a in x for b in y)]
                ls, rs = set(left), set(right)
                for f in sync_at.get(path, []):
                    if frozenset({f[2]}) in ls and frozenset({f[3]}) in rs:
                        out.append(frozenset({f}))
            return filt(out, path)
        raise TypeError(p)

    steps = {frozenset(by_fp[f] for f in x) for x in go(pes.term, ())}
    return sorted((x for x in steps if x <= set(pes.events)), key=lambda x: sorted(x))


def step_labels(pes: Pes, conf, x) -> tuple:
    return tuple(sorted(pes.label_in(e, conf) for e in x))


@dataclass(frozen=True)
class PomsetTransition:
    direction: str        # 'fwd' or 'rev'
    events: frozenset
    target: frozenset
    is_step: bool         # events pairwise concurrent


def pomset_transitions(pes: Pes, conf=frozenset()) -> list:
    """Every C -X-> C' with C' a configuration, forward and reverse."""
    conf = frozenset(conf)
    out = []
    seen = {conf}
    frontier = [conf]
    while frontier:
        nxt = []
        for c in frontier:
            for e in enabled_events(pes, c):
                d = c | {e}
                if d not in seen:
                    seen.add(d)
                    nxt.append(d)
        frontier = nxt
    for d in sorted(seen - {conf}, key=lambda c: (len(c), sorted(c))):
        x = d - conf
        out.append(PomsetTransition("fwd", x, d, _antichain(pes, x)))
    for r in range(1, len(conf) + 1):
        for x in itertools.combinations(sorted(conf), r):
            rest = conf - set(x)
            if all(pes.events[e].causes <= rest for e in rest):
                out.append(PomsetTransition("rev", frozenset(x), rest, _antichain(pes, x)))
    return out


def _antichain(pes, xs) -> bool:
    return all(pes.concurrent(a, b) for a, b in itertools.combinations(xs, 2))
