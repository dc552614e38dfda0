from hypothesis import given, strategies as st

from pitc.syntax import (NIL, In, Nil, Out, Res, Sum, Tau, Par, alpha_equivalent, bound_names,
                         fresh_name, free_names, names, substitute, KeyedOut, keys_of, strip_keys)
from pitc.laws import random_term


def test_free_names_output():
    assert free_names(Out("x", "y", NIL)) == {"x", "y"}


def test_free_names_nil():
    assert free_names(Nil()) == frozenset()


def test_free_names_input_binds():
    assert free_names(In("x", "y", Out("y", "z", NIL))) == {"x", "z"}


def test_keyed_prefix_names_like_unkeyed():
    assert free_names(KeyedOut("x", "y", 1, NIL)) == {"x", "y"}


def test_bound_names():
    assert bound_names(In("x", "y", NIL)) == {"y"}
    assert bound_names(Out("x", "y", NIL)) == frozenset()
    assert bound_names(Res("z", Out("x", "z", NIL))) == {"z"}


def test_substitute_output():
    assert substitute(Out("x", "y", NIL), {"x": "z"}) == Out("z", "y", NIL)


def test_substitute_nil():
    assert substitute(NIL, {"x": "z"}) == NIL


def test_substitute_avoids_capture():
    got = substitute(In("x", "y", Out("z", "w", NIL)), {"w": "y"})
    assert isinstance(got, In) and got.bind != "y"
    assert got.body == Out("z", "y", NIL)
    # naive oracle: rename binder first, then substitute clause by clause
    assert alpha_equivalent(got, In("x", "y1", Out("z", "y", NIL)))


def test_alpha_equivalence_examples():
    assert alpha_equivalent(In("x", "y", Out("y", "z", NIL)), In("x", "w", Out("w", "z", NIL)))
    assert not alpha_equivalent(In("x", "y", NIL), In("z", "y", NIL))
    assert alpha_equivalent(Res("a", Out("x", "a", NIL)), Res("b", Out("x", "b", NIL)))
    assert not alpha_equivalent(Res("a", Out("x", "a", NIL)), Res("b", Out("x", "a", NIL)))


def test_fresh_name_sequence():
    assert fresh_name(set()) == "w0"
    assert fresh_name({"w0"}) == "w1"


def test_strip_keys():
    p = Par(KeyedOut("a", "b", 1, NIL), Tau(NIL))
    assert keys_of(p) == [1]
    assert strip_keys(p) == Par(NIL, Tau(NIL))


seeds = st.integers(min_value=0, max_value=10**6)


@given(seeds)
def test_identity_substitution_is_noop(seed):
    import random
    p = random_term(random.Random(seed))
    assert alpha_equivalent(substitute(p, {}), p)


@given(seeds)
def test_free_names_after_substitution(seed):
    import random
    rng = random.Random(seed)
    p = random_term(rng)
    fn = sorted(free_names(p))
    if not fn:
        return
    x = rng.choice(fn)
    q = substitute(p, {x: "fresh"})
    assert free_names(q) == (free_names(p) - {x}) | {"fresh"}


@given(seeds)
def test_alpha_equivalence_reflexive_and_bound_disjoint(seed):
    import random
    p = random_term(random.Random(seed))
    assert alpha_equivalent(p, p)
    assert free_names(p) <= names(p)
