"""Bounded construction of the alternating probabilistic/action transition graph."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .env import (ArityMismatch, IdentifierEnv, NotWeaklyGuarded, UnboundIdentifier,
                  check_weakly_guarded, unfold_identifier)
from .semantics import (Config, config_key, forward_transitions, label_str,
                        prob_transitions, reverse_transitions)
from .state import EffectModel
from .syntax import (BoxSum, GuardPrefix, Marked, Process, children, free_names)

__all__ = ["Features", "FeatureDisabled", "Lts", "build_lts", "check_weakly_guarded",
           "unfold_identifier", "IdentifierEnv", "UnboundIdentifier", "ArityMismatch",
           "to_dot", "to_json"]


class FeatureDisabled(ValueError):
    pass


@dataclass(frozen=True)
class Features:
    rev: bool = True
    prob: bool = True
    guards: bool = True

    @classmethod
    def parse(cls, text: str) -> "Features":
        items = {t.strip() for t in text.split(",") if t.strip()}
        unknown = items - {"rev", "prob", "guards"}
        if unknown:
            raise ValueError(f"unknown feature(s): {', '.join(sorted(unknown))}")
        return cls("rev" in items, "prob" in items, "guards" in items)


ALL_FEATURES = Features()


def _contains(p: Process, kind) -> bool:
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, kind):
            return True
        stack.extend(children(q))
    return False


def check_features(p: Process, env: IdentifierEnv | None, feats: Features) -> None:
    bodies = [p] + ([d.body for d in env.defs.values()] if env else [])
    for b in bodies:
        if not feats.prob and _contains(b, BoxSum):
            raise FeatureDisabled("probabilistic choice used but the `prob` feature is off")
        if not feats.guards and _contains(b, GuardPrefix):
            raise FeatureDisabled("guard used but the `guards` feature is off")


@dataclass
class Lts:
    nodes: list = field(default_factory=list)       # Config per node id
    phases: list = field(default_factory=list)      # 'prob' | 'act'
    prob_edges: list = field(default_factory=list)  # (src, weight, dst)
    act_edges: list = field(default_factory=list)   # (src, label, 'fwd'|'rev', dst)
    initial: int = 0
    truncated: set = field(default_factory=set)

    def out_prob(self, n):
        return [(w, d) for s, w, d in self.prob_edges if s == n]

    def out_act(self, n):
        return [(l, dr, d) for s, l, dr, d in self.act_edges if s == n]

    def successor_index(self):
        pe = {i: [] for i in range(len(self.nodes))}
        ae = {i: [] for i in range(len(self.nodes))}
        for s, w, d in self.prob_edges:
            pe[s].append((w, d))
        for s, l, dr, d in self.act_edges:
            ae[s].append((l, dr, d))
        return pe, ae


def initial_phase(p: Process) -> str:
    return "act" if _contains(p, Marked) else "prob"


def build_lts(c0: Config, env: IdentifierEnv | None = None, m: EffectModel | None = None,
              max_nodes: int = 5000, max_depth: int = 64, features: Features = ALL_FEATURES,
              base=None) -> Lts:
    """Breadth-first closure from c0; nodes cut off by the bounds are listed in `truncated`."""
    if env is not None and not check_weakly_guarded(env):
        raise NotWeaklyGuarded("identifier occurs outside every prefix in its definition")
    check_features(c0.process, env, features)
    m = m or EffectModel()
    base = frozenset(free_names(c0.process) if base is None else base)
    lts = Lts()
    index: dict = {}

    def node(phase, c):
        k = (phase, config_key(c))
        if k in index:
            return index[k], False
        if len(lts.nodes) >= max_nodes:
            return None, False
        index[k] = len(lts.nodes)
        lts.nodes.append(c)
        lts.phases.append(phase)
        return index[k], True

    start, _ = node(initial_phase(c0.process), c0)
    queue = deque([(start, 0)])
    while queue:
        n, depth = queue.popleft()
        c, phase = lts.nodes[n], lts.phases[n]
        if phase == "prob":
            succ = [(o.weight, "prob", o.target) for o in prob_transitions(c, env)]
        else:
            succ = [(lab, "fwd", t) for lab, t in forward_transitions(c, m, base)]
            if features.rev:
                succ += [(lab, "rev", t) for lab, t in reverse_transitions(c, m)]
        if succ and depth >= max_depth:
            lts.truncated.add(n)
            continue
        for info, kind, t in succ:
            tphase = "act" if kind in ("prob", "rev") else "prob"
            d, new = node(tphase, t)
            if d is None:
                lts.truncated.add(n)
                continue
            if kind == "prob":
                lts.prob_edges.append((n, info, d))
            else:
                lts.act_edges.append((n, info, kind, d))
            if new:
                queue.append((d, depth + 1))
    return lts


# --- export -----------------------------------------------------------------

def _node_text(lts: Lts, n: int, model: EffectModel | None = None) -> str:
    from .parser import pretty_print
    c = lts.nodes[n]
    st = model.name_of(c.state) if model else str(c.state)
    return f"{pretty_print(c.process)} @ {st}"


def _w(w: Fraction) -> str:
    return f"{w.numerator}/{w.denominator}"


def to_dot(lts: Lts, model: EffectModel | None = None) -> str:
    lines = ["digraph lts {"]
    for n in range(len(lts.nodes)):
        shape = "ellipse" if lts.phases[n] == "prob" else "box"
        extra = ", peripheries=2" if n == lts.initial else ""
        extra += ", style=dashed" if n in lts.truncated else ""
        lines.append(f"  n{n} [shape={shape}{extra}, label={json.dumps(_node_text(lts, n, model))}];")
    for s, w, d in lts.prob_edges:
        lines.append(f'  n{s} -> n{d} [style=dotted, label="p={_w(w)}"];')
    for s, lab, dr, d in lts.act_edges:
        style = "" if dr == "fwd" else ", style=dashed"
        lines.append(f"  n{s} -> n{d} [label={json.dumps(label_str(lab))}{style}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_json(lts: Lts, model: EffectModel | None = None) -> str:
    doc = {
        "initial": lts.initial,
        "nodes": [{"id": n, "phase": lts.phases[n], "term": _node_text(lts, n, model),
                   "truncated": n in lts.truncated} for n in range(len(lts.nodes))],
        "prob_edges": [{"src": s, "dst": d, "weight": _w(w)} for s, w, d in lts.prob_edges],
        "act_edges": [{"src": s, "dst": d, "label": label_str(lab), "direction": dr}
                      for s, lab, dr, d in lts.act_edges],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
