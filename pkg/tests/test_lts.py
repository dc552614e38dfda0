import json

import pytest

from pitc.env import (ArityMismatch, IdentifierEnv, UnboundIdentifier, check_weakly_guarded,
                      unfold_identifier)
from pitc.lts import FeatureDisabled, Features, build_lts, to_dot, to_json
from pitc.parser import parse
from pitc.semantics import Config, initial_config
from pitc.syntax import NIL, Ident, In, Out, Par, Sum, Tau


def env_of(**defs):
    env = IdentifierEnv()
    for name, (params, body) in defs.items():
        env.define(name, params, body)
    return env


def test_weak_guardedness():
    assert check_weakly_guarded(env_of(A=((), Out("a", "x", Ident("A")))))
    assert not check_weakly_guarded(env_of(A=((), Sum(Ident("A"), NIL))))
    assert check_weakly_guarded(env_of(A=((), Par(Tau(Ident("B")), NIL)), B=((), Tau(NIL))))


def test_unfold():
    env = env_of(A=(("x",), Out("x", "z", NIL)), B=((), NIL), C=(("x",), In("x", "z", NIL)))
    assert unfold_identifier(Ident("A", ("y",)), env) == Out("y", "z", NIL)
    assert unfold_identifier(Ident("B"), env) == NIL
    got = unfold_identifier(Ident("C", ("z",)), env)
    assert got.subj == "z" and got.body == NIL


def test_unfold_errors():
    env = env_of(A=(("x",), NIL))
    with pytest.raises(UnboundIdentifier):
        unfold_identifier(Ident("B"), env)
    with pytest.raises(ArityMismatch):
        unfold_identifier(Ident("A"), env)


def test_tau_lts_shape():
    lts = build_lts(Config(Tau(NIL)))
    # prob node, act node with tau.0 marked, prob node after the step, its act node
    assert len(lts.nodes) == 4
    fwd = [e for e in lts.act_edges if e[2] == "fwd"]
    rev = [e for e in lts.act_edges if e[2] == "rev"]
    assert len(fwd) == 1 and len(rev) == 1
    assert rev[0][3] == fwd[0][0]


def test_nil_lts():
    lts = build_lts(Config(NIL))
    assert len(lts.nodes) == 2 and not lts.act_edges


def test_recursion_truncated():
    env = env_of(A=((), Tau(Ident("A"))))
    lts = build_lts(Config(Ident("A")), env, max_depth=4)
    assert lts.truncated
    assert len(lts.nodes) <= 6


def test_unguarded_rejected():
    from pitc.env import NotWeaklyGuarded
    with pytest.raises(NotWeaklyGuarded):
        build_lts(Config(Ident("A")), env_of(A=((), Sum(Ident("A"), NIL))))


def test_feature_flags():
    p = parse("a!x.0 +[1/2] 0")
    with pytest.raises(FeatureDisabled):
        build_lts(Config(p), features=Features.parse("rev,guards"))
    lts = build_lts(Config(parse("a!x.0")), features=Features.parse("prob,guards"))
    assert all(e[2] == "fwd" for e in lts.act_edges)


def test_exports():
    lts = build_lts(initial_config(parse("a!x.0 +[1/3] b!x.0")))
    doc = json.loads(to_json(lts))
    assert {e["weight"] for e in doc["prob_edges"] if e["src"] == doc["initial"]} == {"1/3", "2/3"}
    dot = to_dot(lts)
    assert dot.startswith("digraph") and 'p=1/3' in dot
    assert to_json(lts) == to_json(build_lts(initial_config(parse("a!x.0 +[1/3] b!x.0"))))
