"""Forward-reverse probabilistic bisimilarity checkers: step, pomset, hp and hhp."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import refine as rf
from .env import IdentifierEnv
from .lts import ALL_FEATURES, Features, Lts, build_lts
from .semantics import Config, initial_config, label_str
from .state import EMPTY, EffectModel
from .syntax import Process, free_names


class Truncated(RuntimeError):
    pass


class SearchBudgetExceeded(RuntimeError):
    pass


@dataclass
class EquivOptions:
    relation: str = "step"
    max_nodes: int = 5000
    max_depth: int = 64
    initial_states: tuple | None = None
    universe: frozenset | None = None
    features: Features = ALL_FEATURES
    force: bool = False          # accept truncated graphs
    budget: int = 200_000        # hp/hhp search budget

    def __post_init__(self):
        if self.max_nodes <= 0 or self.max_depth <= 0:
            raise ValueError("bounds must be positive")
        if self.relation not in ("step", "pomset", "hp", "hhp"):
            raise ValueError(f"unknown relation {self.relation!r}")


@dataclass
class EquivResult:
    equivalent: bool
    relation: str
    state: object = None                # data state of the failing run, if any
    counterexample: object = None
    script: list = field(default_factory=list)
    graph: object = None
    roots: tuple = ()
    blocks: list = field(default_factory=list)
    truncated: bool = False

    def __bool__(self):
        return self.equivalent


def _states(m: EffectModel, opts: EquivOptions):
    if opts.initial_states is not None:
        return tuple(opts.initial_states)
    return tuple(m.states) if m.states else (EMPTY,)


def universe_of(p: Process, q: Process, opts: EquivOptions) -> frozenset:
    if opts.universe is not None:
        return frozenset(opts.universe)
    return free_names(p) | free_names(q)


def lts_pair_graph(l1: Lts, l2: Lts) -> tuple:
    """Disjoint union of two LTSs as a refinement graph; returns (graph, root1, root2)."""
    g = rf.Graph()
    from .parser import pretty_print
    for side, lts in (("L", l1), ("R", l2)):
        off = len(g)
        for n, c in enumerate(lts.nodes):
            g.add(lts.phases[n], f"{side}{n}[{pretty_print(c.process)} @ {c.state}]")
        for s, w, d in lts.prob_edges:
            g.prob[off + s].append((w, off + d))
        for s, lab, dr, d in lts.act_edges:
            g.act[off + s].append(((lab, dr), off + d))
    return g, l1.initial, len(l1.nodes) + l2.initial


def fmt_lts_label(lab) -> str:
    label, direction = lab
    return label_str(label) if direction == "fwd" else "rev " + label_str(label)


def configs_bisimilar(c1: Config, c2: Config, env: IdentifierEnv | None = None,
                      m: EffectModel | None = None, opts: EquivOptions | None = None,
                      base=frozenset()) -> EquivResult:
    """FR step bisimilarity of two configurations, memories included."""
    opts = opts or EquivOptions()
    m = m or EffectModel()
    l1 = build_lts(c1, env, m, opts.max_nodes, opts.max_depth, opts.features, base)
    l2 = build_lts(c2, env, m, opts.max_nodes, opts.max_depth, opts.features, base)
    truncated = l1.truncated or l2.truncated
    if truncated and not opts.force:
        raise Truncated(f"state space exceeds bounds (max_nodes={opts.max_nodes}, "
                        f"max_depth={opts.max_depth})")
    g, r1, r2 = lts_pair_graph(l1, l2)
    hist = rf.refine(g)
    final = hist[-1]
    if not rf.is_stable(g, final):
        raise AssertionError("partition refinement produced an unstable partition")
    if final[r1] != final[r2]:
        cex = rf.explain(g, hist, r1, r2)
        assert rf.replay(g, r1, r2, cex), "counterexample failed its own replay"
        return EquivResult(False, "step", c1.state, cex, rf.render(g, cex, fmt_lts_label), g, (r1, r2),
                           _blocks(final), truncated)
    return EquivResult(True, "step", None, None, [], None, (), [], truncated)


def step_bisimilar_fr(p: Process, q: Process, env: IdentifierEnv | None = None,
                      m: EffectModel | None = None, opts: EquivOptions | None = None) -> EquivResult:
    """FR step bisimilarity from every initial data state of the model."""
    opts = opts or EquivOptions()
    m = m or EffectModel()
    base = universe_of(p, q, opts)
    any_trunc = False
    for s in _states(m, opts):
        r = configs_bisimilar(initial_config(p, s), initial_config(q, s), env, m, opts, base)
        any_trunc = any_trunc or r.truncated
        if not r.equivalent:
            r.truncated = any_trunc
            return r
    return EquivResult(True, "step", None, None, [], None, (), [], any_trunc)


def _blocks(final):
    out: dict = {}
    for n, b in enumerate(final):
        out.setdefault(b, []).append(n)
    return list(out.values())


def check(p: Process, q: Process, env=None, m=None, opts: EquivOptions | None = None) -> EquivResult:
    """Dispatch on opts.relation."""
    opts = opts or EquivOptions()
    if opts.relation == "step":
        return step_bisimilar_fr(p, q, env, m, opts)
    if opts.relation == "pomset":
        return pomset_bisimilar_fr(p, q, env, m, opts)
    return hp_bisimilar_fr(p, q, env, m, opts, hereditary=opts.relation == "hhp")


def pomset_bisimilar_fr(p, q, env=None, m=None, opts=None):
    from .pomset import pomset_bisimilar_fr as impl
    return impl(p, q, env, m, opts)


def hp_bisimilar_fr(p, q, env=None, m=None, opts=None, hereditary=False):
    from .pomset import hp_bisimilar_fr as impl
    return impl(p, q, env, m, opts, hereditary)
