"""Pomset and history-preserving bisimilarity over event structures.

Both checkers work on pairs of configurations with box-sum choices.  Moves are
the steps the operational rules allow (see `events.sos_steps`); a pomset move
may chain several such steps as long as no new box-sum becomes exposed on the
way, and is observed through the isomorphism type of the events it adds.  The
history-preserving checker observes single steps but keeps an order
isomorphism between the two configurations.

Restricted names that have been sent out are renamed by order of extrusion so
that labels can be compared across the two terms.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from . import refine as rf
from .equivalence import EquivOptions, EquivResult, SearchBudgetExceeded, Truncated, universe_of
from .events import (Pes, resolutions, settled_choices, sos_steps, term_to_pes)
from .syntax import GuardPrefix, Process, children


class UnsupportedTerm(ValueError):
    pass


def _has_guard(p: Process) -> bool:
    return isinstance(p, GuardPrefix) or any(_has_guard(c) for c in children(p))


def _prepare(p, q, env, opts) -> tuple:
    for t in (p, q):
        if _has_guard(t):
            raise UnsupportedTerm("event-structure checkers do not handle guards")
    u = universe_of(p, q, opts)
    return term_to_pes(p, env, u), term_to_pes(q, env, u)


# --- pomset isomorphism types ----------------------------------------------

def _rename(name, known, fresh):
    if name in known:
        return f"#{known.index(name)}"
    if name in fresh:
        return f"#n{fresh.index(name)}"
    return name


def pomset_type(pes: Pes, conf, xs, known=()) -> tuple:
    """Canonical isomorphism type of the pomset xs fired from conf.

    Returns (type, newly extruded names in canonical order).  `known` lists the
    names extruded earlier, in order.
    """
    xs = sorted(xs)
    known = list(known)
    lab = {e: pes.label_in(e, set(conf) | (pes.event(e).causes & set(xs))) for e in xs}
    private = {pes.event(e).opens for e in xs if lab[e].kind == "bout"}

    def coarse(e):
        a = lab[e]
        pre = sum(1 for d in xs if d != e and pes.leq(d, e))
        post = sum(1 for d in xs if d != e and pes.leq(e, d))
        return (a.kind, "" if a.subj in private else a.subj, "" if a.obj in private else a.obj, pre, post)

    groups: dict = {}
    for e in xs:
        groups.setdefault(coarse(e), []).append(e)
    keys = sorted(groups)
    best = None
    for perms in itertools.product(*(itertools.permutations(groups[k]) for k in keys)):
        order = [e for perm in perms for e in perm]
        fresh: list = []
        labels = []
        for e in order:
            a = lab[e]
            for n in (a.subj, a.obj):
                if n in private and n not in fresh:
                    fresh.append(n)
            labels.append((a.kind, _rename(a.subj, known, fresh), _rename(a.obj, known, fresh)))
        pos = {e: i for i, e in enumerate(order)}
        rel = tuple(sorted((pos[a], pos[b]) for a in order for b in order if a != b and pes.leq(a, b)))
        cand = (tuple(labels), rel)
        if best is None or cand < best[0]:
            best = (cand, tuple(fresh))
    return best


def fmt_type(t) -> str:
    labels, rel = t
    parts = []
    for kind, s, o in labels:
        parts.append("tau" if kind == "tau" else f"{s}!{o}" if kind == "out"
                     else f"{s}!({o})" if kind == "bout" else f"{s}?{o}")
    text = "{" + ", ".join(parts) + "}"
    if rel:
        text += " with " + ", ".join(f"{i}<{j}" for i, j in rel)
    return text


# --- moves -----------------------------------------------------------------

def pomset_moves(pes: Pes, conf, choices) -> list:
    """Event sets reachable from conf by a chain of steps that exposes no new box-sum."""
    conf = frozenset(conf)
    seen = {conf}
    frontier = [conf]
    out = []
    while frontier:
        nxt = []
        for c in frontier:
            for x in sos_steps(pes, c, None, choices):
                d = c | x
                if d in seen:
                    continue
                seen.add(d)
                out.append(d - conf)
                if len(resolutions(pes, d, choices)) == 1:
                    nxt.append(d)
        frontier = nxt
    return out


def _reverse_ok(pes, conf, xs, choices) -> bool:
    """xs can be undone: conf minus xs is a configuration from which xs is a move."""
    rest = frozenset(conf) - xs
    if any(not pes.event(e).causes <= rest for e in rest):
        return False
    return xs in pomset_moves(pes, rest, settled_choices(pes, rest, choices))


def _reverse_candidates(conf):
    conf = sorted(conf)
    for r in range(1, len(conf) + 1):
        for xs in itertools.combinations(conf, r):
            yield frozenset(xs)


# --- pomset bisimilarity ---------------------------------------------------

def _pomset_graph(pes: Pes, g: rf.Graph, tag: str, max_nodes: int) -> tuple:
    index: dict = {}
    todo = []

    def node(key):
        if key not in index:
            if len(index) >= max_nodes:
                raise Truncated(f"pomset graph exceeds {max_nodes} nodes")
            phase, conf, ch, known = key
            index[key] = g.add(phase, f"{tag}[{phase} {sorted(conf)} {sorted(ch)}]")
            todo.append(key)
        return index[key]

    root = node(("prob", frozenset(), frozenset(), ()))
    while todo:
        key = todo.pop()
        n = index[key]
        phase, conf, ch, known = key
        if phase == "prob":
            for w, ch2 in resolutions(pes, conf, ch):
                g.prob[n].append((w, node(("act", conf, ch2, known))))
            continue
        for xs in pomset_moves(pes, conf, ch):
            t, fresh = pomset_type(pes, conf, xs, known)
            g.act[n].append((("fwd", t), node(("prob", conf | xs, ch, known + fresh))))
        for xs in _reverse_candidates(conf):
            if not _reverse_ok(pes, conf, xs, ch):
                continue
            opened = {pes.event(e).opens for e in xs if pes.label_in(e, conf - xs).kind == "bout"}
            before = tuple(k for k in known if k not in opened)
            t, _ = pomset_type(pes, conf - xs, xs, before)
            back = conf - xs
            g.act[n].append((("rev", t), node(("act", back, settled_choices(pes, back, ch), before))))
    return root


def _fmt_move(lab) -> str:
    direction, t = lab
    return fmt_type(t) if direction == "fwd" else "rev " + fmt_type(t)


def pomset_bisimilar_fr(p, q, env=None, m=None, opts: EquivOptions | None = None) -> EquivResult:
    opts = opts or EquivOptions(relation="pomset")
    pes1, pes2 = _prepare(p, q, env, opts)
    g = rf.Graph()
    r1 = _pomset_graph(pes1, g, "L", opts.max_nodes)
    r2 = _pomset_graph(pes2, g, "R", opts.max_nodes)
    hist = rf.refine(g)
    final = hist[-1]
    if not rf.is_stable(g, final):
        raise AssertionError("partition refinement produced an unstable partition")
    if final[r1] == final[r2]:
        return EquivResult(True, "pomset")
    cex = rf.explain(g, hist, r1, r2)
    assert rf.replay(g, r1, r2, cex), "counterexample failed its own replay"
    return EquivResult(False, "pomset", None, cex, rf.render(g, cex, _fmt_move), g, (r1, r2))


# --- history-preserving bisimilarity -----------------------------------------

def _names_map(f, pes1, pes2) -> dict:
    out = {}
    for a, b in f:
        na, nb = pes1.event(a).opens, pes2.event(b).opens
        if na and nb:
            out[na] = nb
    return out


def _label_match(l1, l2, sigma) -> bool:
    if l1.kind != l2.kind:
        return False
    if l1.kind == "tau":
        return True
    if sigma.get(l1.subj, l1.subj) != l2.subj:
        return False
    if l1.kind == "bout":
        return True
    return sigma.get(l1.obj, l1.obj) == l2.obj


def _bijections(pes1, pes2, c1, c2, x1, x2, f) -> list:
    """Label- and history-preserving bijections x1 -> x2 extending f."""
    if len(x1) != len(x2):
        return []
    fm = dict(f)
    sigma = _names_map(f, pes1, pes2)
    x1 = sorted(x1)
    out = []
    for perm in itertools.permutations(sorted(x2)):
        ok = True
        for a, b in zip(x1, perm):
            la, lb = pes1.label_in(a, c1), pes2.label_in(b, c2)
            if not _label_match(la, lb, sigma):
                ok = False
                break
            if {fm[c] for c in pes1.event(a).causes} != set(pes2.event(b).causes):
                ok = False
                break
        if ok:
            out.append(frozenset(zip(x1, perm)))
    return out


def _coupling(w1: list, w2: list, related) -> bool:
    """Is there a joint distribution with marginals w1, w2 supported on related pairs?"""
    n1, n2 = len(w1), len(w2)
    src, snk = n1 + n2, n1 + n2 + 1
    cap: dict = {}
    for i, w in enumerate(w1):
        cap[(src, i)] = w
    for j, w in enumerate(w2):
        cap[(n1 + j, snk)] = w
    big = Fraction(2)
    for i, j in related:
        cap[(i, n1 + j)] = big
    adj: dict = {}
    for a, b in list(cap):
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
        cap.setdefault((b, a), Fraction(0))
    flow = Fraction(0)
    while True:
        prev = {src: None}
        queue = [src]
        while queue and snk not in prev:
            a = queue.pop(0)
            for b in adj.get(a, ()):
                if b not in prev and cap[(a, b)] > 0:
                    prev[b] = a
                    queue.append(b)
        if snk not in prev:
            break
        path = []
        b = snk
        while prev[b] is not None:
            path.append((prev[b], b))
            b = prev[b]
        push = min(cap[e] for e in path)
        for a, b in path:
            cap[(a, b)] -= push
            cap[(b, a)] += push
        flow += push
    return flow == sum(w1, Fraction(0)) == sum(w2, Fraction(0))


def hp_bisimilar_fr(p, q, env=None, m=None, opts: EquivOptions | None = None,
                    hereditary: bool = False) -> EquivResult:
    """Forward-reverse history-preserving bisimilarity by greatest fixpoint.

    A triple pairs two configurations (with their box-sum choices) and an order
    isomorphism f between them.  Act triples must match every step and every
    undoable step of either side, probabilistic triples must admit a weight
    coupling onto related act triples.  With `hereditary`, a related act triple
    also requires every triple obtained by undoing matched steps to be related.
    """
    opts = opts or EquivOptions(relation="hhp" if hereditary else "hp")
    pes1, pes2 = _prepare(p, q, env, opts)
    rel = "hhp" if hereditary else "hp"
    root = ("prob", frozenset(), frozenset(), frozenset(), frozenset(), frozenset())
    succ: dict = {}
    todo = [root]
    while todo:
        t = todo.pop()
        if t in succ:
            continue
        if len(succ) >= opts.budget:
            raise SearchBudgetExceeded(f"more than {opts.budget} triples")
        succ[t] = _triple_moves(pes1, pes2, t)
        for group in succ[t]["groups"]:
            for _, targets in group:
                todo.extend(x for x in targets if x not in succ)
    alive = set(succ)
    reason: dict = {}
    changed = True
    while changed:
        changed = False
        for t in list(alive):
            why = _violation(succ[t], alive)
            if why is None and hereditary and t[0] == "act":
                why = _hereditary_violation(succ, t, alive)
            if why is not None:
                alive.discard(t)
                reason[t] = why
                changed = True
    if root in alive:
        return EquivResult(True, rel)
    script, t = [], root
    seen = set()
    while t in reason and t not in seen:
        seen.add(t)
        text, nxt = reason[t]
        script.append(text)
        t = nxt
    return EquivResult(False, rel, None, reason[root][0], script)


def _fmt_set(pes, conf, xs) -> str:
    return "{" + ", ".join(str(pes.label_in(e, conf)) for e in sorted(xs)) + "}"


def _triple_moves(pes1, pes2, t) -> dict:
    """Candidate moves of a triple.

    For act triples `groups` holds one entry per move of either side (forward or
    reverse): a list of (description, [matching targets]).  For probabilistic
    triples it holds the two distributions and the related pairs.
    """
    phase, c1, ch1, c2, ch2, f = t
    if phase == "prob":
        d1 = resolutions(pes1, c1, ch1)
        d2 = resolutions(pes2, c2, ch2)
        pairs = {(i, j): ("act", c1, a, c2, b, f) for i, (_, a) in enumerate(d1) for j, (_, b) in enumerate(d2)}
        return {"prob": ([w for w, _ in d1], [w for w, _ in d2], pairs),
                "groups": [[("", list(pairs.values()))]]}
    groups = []
    steps1 = sos_steps(pes1, c1, None, ch1)
    steps2 = sos_steps(pes2, c2, None, ch2)
    for x1 in steps1:
        tgts = [("prob", c1 | x1, ch1, c2 | x2, ch2, f | g)
                for x2 in steps2 for g in _bijections(pes1, pes2, c1, c2, x1, x2, f)]
        groups.append([(f"left fires {_fmt_set(pes1, c1, x1)}", tgts)])
    inv = frozenset((b, a) for a, b in f)
    for x2 in steps2:
        tgts = [("prob", c1 | x1, ch1, c2 | x2, ch2, f | frozenset((b, a) for a, b in g))
                for x1 in steps1 for g in _bijections(pes2, pes1, c2, c1, x2, x1, inv)]
        groups.append([(f"right fires {_fmt_set(pes2, c2, x2)}", tgts)])
    fm = dict(f)
    back2 = {b: a for a, b in f}
    for x1 in _reverse_candidates(c1):
        if not _reverse_ok(pes1, c1, x1, ch1):
            continue
        x2 = frozenset(fm[e] for e in x1)
        tgts = []
        if _reverse_ok(pes2, c2, x2, ch2):
            r1, r2 = c1 - x1, c2 - x2
            tgts.append(("act", r1, settled_choices(pes1, r1, ch1), r2, settled_choices(pes2, r2, ch2),
                         frozenset((a, b) for a, b in f if a in r1)))
        groups.append([(f"left undoes {_fmt_set(pes1, c1 - x1, x1)}", tgts)])
    for x2 in _reverse_candidates(c2):
        if not _reverse_ok(pes2, c2, x2, ch2):
            continue
        x1 = frozenset(back2[e] for e in x2)
        tgts = []
        if _reverse_ok(pes1, c1, x1, ch1):
            r1, r2 = c1 - x1, c2 - x2
            tgts.append(("act", r1, settled_choices(pes1, r1, ch1), r2, settled_choices(pes2, r2, ch2),
                         frozenset((a, b) for a, b in f if a in r1)))
        groups.append([(f"right undoes {_fmt_set(pes2, c2 - x2, x2)}", tgts)])
    return {"groups": groups}


def _violation(moves, alive):
    if "prob" in moves:
        w1, w2, pairs = moves["prob"]
        related = [k for k, v in pairs.items() if v in alive]
        if _coupling(w1, w2, related):
            return None
        dead = next((v for v in pairs.values() if v not in alive), None)
        return ("the branch weights cannot be matched", dead)
    for group in moves["groups"]:
        for text, targets in group:
            if not any(x in alive for x in targets):
                return (f"{text} and the other side cannot answer", targets[0] if targets else None)
    return None


def _hereditary_violation(succ, t, alive):
    # every triple reached by undoing matched steps must itself be related
    stack, seen = [t], {t}
    while stack:
        u = stack.pop()
        for group in succ[u]["groups"]:
            for text, targets in group:
                if "undoes" not in text:
                    continue
                for x in targets:
                    if x not in alive:
                        return (f"{text} leads outside the relation", x)
                    if x not in seen:
                        seen.add(x)
                        stack.append(x)
    return None
