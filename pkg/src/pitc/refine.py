"""Partition refinement for alternating probabilistic graphs, with checkable counterexamples.

A graph has two kinds of nodes.  Action nodes have labelled edges, probabilistic
nodes have weighted edges.  Two nodes end in the same block iff they are
bisimilar: action nodes must match labels up to block of the target, and
probabilistic nodes must give equal total weight to every block.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction


@dataclass
class Graph:
    phase: list = field(default_factory=list)     # hashable tag per node
    act: list = field(default_factory=list)       # [(label, target)] per node
    prob: list = field(default_factory=list)      # [(weight, target)] per node
    names: list = field(default_factory=list)     # display name per node

    def add(self, phase, name="") -> int:
        self.phase.append(phase)
        self.act.append([])
        self.prob.append([])
        self.names.append(name or f"n{len(self.phase) - 1}")
        return len(self.phase) - 1

    def __len__(self):
        return len(self.phase)


def _signature(g: Graph, n: int, block: list):
    acts = frozenset((lab, block[t]) for lab, t in g.act[n])
    dist: dict = defaultdict(Fraction)
    for w, t in g.prob[n]:
        dist[block[t]] += w
    return acts, frozenset(dist.items())


def refine(g: Graph) -> list:
    """Return the list of successive partitions (block id per node); the last is stable."""
    ids: dict = {}
    block = [ids.setdefault(p, len(ids)) for p in g.phase]
    history = [block]
    while True:
        ids = {}
        new = [ids.setdefault((block[n], _signature(g, n, block)), len(ids)) for n in range(len(g))]
        history.append(new)
        if len(ids) == len(set(block)):
            return history
        block = new


def is_stable(g: Graph, block: list) -> bool:
    """Post-hoc check: all members of a block have the same signature."""
    seen: dict = {}
    for n in range(len(g)):
        sig = _signature(g, n, block)
        if seen.setdefault(block[n], sig) != sig:
            return False
    return True


# --- counterexamples --------------------------------------------------------

@dataclass
class ActSplit:
    attacker: int
    defender: int
    label: object
    target: int
    responses: list  # [(defender target, sub-explanation)]


@dataclass
class ProbSplit:
    left: int
    right: int
    cls: frozenset
    weights: tuple
    separations: list  # [(x, y, sub-explanation)]


@dataclass
class PhaseSplit:
    left: int
    right: int


def explain(g: Graph, history: list, u: int, v: int, _memo=None):
    """A tree witnessing that u and v are not bisimilar."""
    memo = {} if _memo is None else _memo
    if (u, v) in memo:
        return memo[(u, v)]
    r = next(i for i, b in enumerate(history) if b[u] != b[v])
    if r == 0:
        out = PhaseSplit(u, v)
        memo[(u, v)] = out
        return out
    prev = history[r - 1]
    for a, d in ((u, v), (v, u)):
        have = {(lab, prev[t]) for lab, t in g.act[d]}
        for lab, t in g.act[a]:
            if (lab, prev[t]) not in have:
                resp = [t2 for lab2, t2 in g.act[d] if lab2 == lab]
                node = ActSplit(a, d, lab, t, [])
                memo[(u, v)] = node
                node.responses = [(t2, explain(g, history, t, t2, memo)) for t2 in resp]
                return node
    du, dv = defaultdict(Fraction), defaultdict(Fraction)
    for w, t in g.prob[u]:
        du[prev[t]] += w
    for w, t in g.prob[v]:
        dv[prev[t]] += w
    for b in sorted(set(du) | set(dv)):
        if du[b] != dv[b]:
            succ = {t for _, t in g.prob[u]} | {t for _, t in g.prob[v]}
            cls = frozenset(t for t in succ if prev[t] == b)
            node = ProbSplit(u, v, cls, (du[b], dv[b]), [])
            memo[(u, v)] = node
            node.separations = [(x, y, explain(g, history, x, y, memo))
                                for x in sorted(cls) for y in sorted(succ - cls)]
            return node
    raise AssertionError("nodes split without a differing signature")


def replay(g: Graph, u: int, v: int, cex, _done=None) -> bool:
    """Independently check a counterexample tree against the graph."""
    done = set() if _done is None else _done
    if id(cex) in done:
        return True
    done.add(id(cex))
    if isinstance(cex, PhaseSplit):
        return {cex.left, cex.right} == {u, v} and g.phase[u] != g.phase[v]
    if isinstance(cex, ActSplit):
        if {cex.attacker, cex.defender} != {u, v}:
            return False
        if (cex.label, cex.target) not in set(g.act[cex.attacker]):
            return False
        expected = sorted(t for lab, t in g.act[cex.defender] if lab == cex.label)
        if sorted(t for t, _ in cex.responses) != expected:
            return False
        return all(replay(g, cex.target, t, sub, done) for t, sub in cex.responses)
    if isinstance(cex, ProbSplit):
        if {cex.left, cex.right} != {u, v}:
            return False
        wl = sum((w for w, t in g.prob[cex.left] if t in cex.cls), Fraction(0))
        wr = sum((w for w, t in g.prob[cex.right] if t in cex.cls), Fraction(0))
        if (wl, wr) != tuple(cex.weights) or wl == wr:
            return False
        succ = {t for _, t in g.prob[u]} | {t for _, t in g.prob[v]}
        need = {(x, y) for x in cex.cls & succ for y in succ - cex.cls}
        got = {(x, y) for x, y, _ in cex.separations}
        if not need <= got:
            return False
        return all(replay(g, x, y, sub, done) for x, y, sub in cex.separations)
    return False


def render(g: Graph, cex, fmt_label=str, indent=0, _seen=None) -> list:
    """Text form of a counterexample tree, one move per line."""
    seen = {} if _seen is None else _seen
    pad = "  " * indent
    if id(cex) in seen:
        return [f"{pad}(see above: {seen[id(cex)]})"]
    if isinstance(cex, PhaseSplit):
        return [f"{pad}{g.names[cex.left]} and {g.names[cex.right]} are in different phases"]
    if isinstance(cex, ActSplit):
        tag = f"{g.names[cex.attacker]} vs {g.names[cex.defender]}"
        seen[id(cex)] = tag
        head = f"{pad}{g.names[cex.attacker]} --{fmt_label(cex.label)}--> {g.names[cex.target]}"
        if not cex.responses:
            return [head + f"; {g.names[cex.defender]} cannot match"]
        lines = [head + f"; {g.names[cex.defender]} answers:"]
        for t, sub in cex.responses:
            lines.append(f"{pad}  {g.names[cex.defender]} --{fmt_label(cex.label)}--> {g.names[t]}, then")
            lines += render(g, sub, fmt_label, indent + 2, seen)
        return lines
    tag = f"{g.names[cex.left]} vs {g.names[cex.right]}"
    seen[id(cex)] = tag
    members = ", ".join(g.names[t] for t in sorted(cex.cls))
    lines = [f"{pad}{g.names[cex.left]} reaches {{{members}}} with probability {cex.weights[0]}, "
             f"{g.names[cex.right]} with {cex.weights[1]}"]
    for x, y, sub in cex.separations:
        lines.append(f"{pad}  {g.names[x]} differs from {g.names[y]}:")
        lines += render(g, sub, fmt_label, indent + 2, seen)
    return lines
