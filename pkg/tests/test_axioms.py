import random

import pytest
from hypothesis import given, strategies as st

from pitc.axioms import NotHeadNormal, apply_expansion, head_normal_form, is_hnf, normalize, prove_equal
from pitc.env import IdentifierEnv
from pitc.equivalence import step_bisimilar_fr
from pitc.laws import random_term
from pitc.parser import parse, pretty_print
from pitc.syntax import NIL, Conc, Pfx, Tau

P = parse


def hnf(src, env=None):
    return pretty_print(head_normal_form(P(src), env))


def test_identifier_unfolds():
    env = IdentifierEnv()
    env.define("A", ("x",), P("a!x.0"))
    assert hnf("A(y)", env) == "a!y.0"


def test_concurrent_summand():
    assert head_normal_form(P("a!x.0 | b!y.0")) == Conc((Pfx("out", "a", "x"), Pfx("out", "b", "y")), P("0 | 0"))


def test_nil():
    assert head_normal_form(NIL) == NIL


def test_communication_summand():
    got = P(hnf("x!u.0 | x?(v).0"))
    assert step_bisimilar_fr(got, P("(x!u || x?(v)).(0 | 0) + tau.(0 | 0)")).equivalent
    assert "tau.(0 | 0)" in pretty_print(got)


def test_no_comm_pairs():
    assert hnf("a!u.0 | b!w.0") == "(a!u || b!w).(0 | 0)"


def test_expansion_unit():
    got = apply_expansion(P("0 | a!x.0"))
    assert step_bisimilar_fr(got, P("a!x.0")).equivalent


def test_expansion_requires_hnf():
    with pytest.raises(NotHeadNormal):
        apply_expansion(P("(a!x.0 | b!x.0) | c!x.0"))


def test_close_summand():
    got = hnf("(new y)(a!y.0) | a?(z).z!b.0")
    assert "tau.(new y)(0 | y!b.0)" in got


def test_prove_idempotence():
    assert prove_equal(P("a!x.0 + a!x.0"), P("a!x.0")).equal


def test_prove_rejects_interleaving():
    assert not prove_equal(P("a!x.0 | b!x.0"), P("a!x.b!x.0 + b!x.a!x.0")).equal


def test_trace_mentions_axioms():
    res = prove_equal(P("a!x.0 | 0"), P("a!x.0"))
    assert res.equal and any(line.split()[0] == "E" for line in res.trace)


def test_normal_form_text():
    assert normalize(P("a!x.0 | b!x.0")).text() == "{a!x, b!x}.0"


seeds = st.integers(0, 10**6)


@given(seeds)
def test_hnf_shape_and_soundness(seed):
    p = random_term(random.Random(seed), prefixes=4)
    h = head_normal_form(p)
    assert is_hnf(h)
    assert step_bisimilar_fr(p, h).equivalent


@given(seeds)
def test_normalize_deterministic(seed):
    p = random_term(random.Random(seed), prefixes=4)
    assert normalize(p) == normalize(p)
