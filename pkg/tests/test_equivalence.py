import random

import pytest
from hypothesis import given, strategies as st

from pitc.equivalence import EquivOptions, Truncated, check, step_bisimilar_fr
from pitc.env import IdentifierEnv
from pitc.laws import random_term
from pitc.parser import parse
from pitc.pomset import UnsupportedTerm
from pitc.state import DataState, EffectModel
from pitc.syntax import BoxSum, Ident, Par, Res, Sum, NIL

P = parse


def rel(name, p, q, **kw):
    return check(P(p) if isinstance(p, str) else p, P(q) if isinstance(q, str) else q,
                 opts=EquivOptions(relation=name, **kw))


@given(st.integers(0, 10**6))
def test_sum_commutes(seed):
    rng = random.Random(seed)
    p, q = random_term(rng, 3, 0, 1), random_term(rng, 3, 0, 1)
    assert step_bisimilar_fr(Sum(p, q), Sum(q, p)).equivalent


def test_parallel_vs_interleaving_step():
    res = rel("step", "a!x.0 | b!x.0", "a!x.b!x.0 + b!x.a!x.0")
    assert not res.equivalent
    assert any("{a!x, b!x}" in line for line in res.script)


@given(st.integers(0, 10**6))
def test_boxsum_swap(seed):
    rng = random.Random(seed)
    p, q = random_term(rng, 3, 0, 0), random_term(rng, 3, 0, 0)
    pi = rng.choice([1, 2]) / 3
    from fractions import Fraction
    pi = Fraction(rng.choice([1, 2]), 3)
    assert step_bisimilar_fr(BoxSum(pi, p, q), BoxSum(1 - pi, q, p)).equivalent


def test_boxsum_weights_matter():
    assert not rel("step", "a!x.0 +[1/3] b!x.0", "a!x.0 +[2/3] b!x.0").equivalent


@pytest.mark.parametrize("relation", ["pomset", "hp", "hhp"])
def test_reflexive(relation):
    p = "a?(z).(z!b.0 | tau.0) +[1/2] (new c)c!a.0"
    assert rel(relation, p, p).equivalent


def test_pomset_restriction_commutes():
    assert rel("pomset", "(new y)(new z)(y!z.0 | z!a.0 | a!y.0)", "(new z)(new y)(y!z.0 | z!a.0 | a!y.0)").equivalent


def test_pomset_distinguishes_causality():
    assert not rel("pomset", "a!x.b!x.0", "a!x.0 | b!x.0").equivalent


def test_hp_par_unit_and_idempotence():
    assert rel("hp", "a!x.0 | b?(z).z!a.0 | 0", "a!x.0 | b?(z).z!a.0").equivalent
    assert rel("hp", "a!x.0 + a!x.0", "a!x.0").equivalent


def test_step_and_pomset_differ():
    # a.b + b.a vs a | b + a.b + b.a : step moves may split what pomset moves keep together
    p, q = "a!x.0 | b!x.0", "a!x.0 | b!x.0 + a!x.b!x.0"
    assert not rel("step", p, q).equivalent
    assert not rel("pomset", p, q).equivalent


def test_pomset_finer_than_step():
    # event-wise undo can split a step {a, b} and then offer c, which one summand lacks
    p = "(a!x.0 | (b!x.0 + c!x.0)) + (a!x.0 | b!x.0) + (b!x.0 | (a!x.0 + c!x.0))"
    q = "(a!x.0 | (b!x.0 + c!x.0)) + (b!x.0 | (a!x.0 + c!x.0))"
    assert rel("step", p, q).equivalent
    assert not rel("pomset", p, q).equivalent
    assert not rel("hp", p, q).equivalent


def test_guards_rejected_by_event_checkers():
    with pytest.raises(UnsupportedTerm):
        rel("pomset", "[g].a!x.0", "[g].a!x.0")


def test_truncation_raises():
    env = IdentifierEnv()
    env.define("A", ("x",), P("x!x.A(x)"))
    with pytest.raises(Truncated):
        step_bisimilar_fr(Ident("A", ("a",)), Ident("A", ("a",)), env, opts=EquivOptions(max_nodes=50))


def test_data_state_sensitivity():
    g = DataState(frozenset({"g"}))
    m = EffectModel(frozenset({"g"}), (DataState(), g))
    p, q = P("[g].a!x.0 + [!g].b!x.0"), P("[g].a!x.0")
    assert not step_bisimilar_fr(p, q, m=m).equivalent
    opts = EquivOptions(initial_states=(g,))
    assert step_bisimilar_fr(p, q, m=m, opts=opts).equivalent


def test_counterexample_replays():
    res = rel("step", "a!x.0 +[1/2] b!x.0", "a!x.0 +[1/2] c!x.0")
    assert not res.equivalent and res.counterexample is not None
    from pitc import refine
    assert refine.replay(res.graph, *res.roots, res.counterexample)
