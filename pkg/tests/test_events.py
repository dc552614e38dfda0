import random

from hypothesis import given, strategies as st

from pitc.events import (check_axioms, configurations, enabled_events, pomset_transitions,
                         term_to_pes)
from pitc.laws import random_term
from pitc.parser import parse

from oracles import pes_initial_labels, sos_initial_labels


def by_label(pes):
    return {str(e.label): i for i, e in pes.events.items()}


def test_sequence_is_causal():
    pes = term_to_pes(parse("a!x.b!x.0"))
    ev = by_label(pes)
    assert pes.leq(ev["a!x"], ev["b!x"]) and not pes.in_conflict(ev["a!x"], ev["b!x"])


def test_sum_is_conflict():
    pes = term_to_pes(parse("a!x.0 + b!x.0"))
    ev = by_label(pes)
    assert pes.in_conflict(ev["a!x"], ev["b!x"])
    assert not pes.leq(ev["a!x"], ev["b!x"]) and not pes.leq(ev["b!x"], ev["a!x"])


def test_par_is_concurrent():
    pes = term_to_pes(parse("a!x.0 | b!x.0"))
    ev = by_label(pes)
    assert pes.concurrent(ev["a!x"], ev["b!x"])


def test_configurations_examples():
    pes = term_to_pes(parse("a!x.b!x.0"))
    ev = by_label(pes)
    assert sorted(map(sorted, configurations(pes))) == sorted([[], [ev["a!x"]], sorted(ev.values())])
    pes = term_to_pes(parse("a!x.0 + b!x.0"))
    ev = by_label(pes)
    assert sorted(map(sorted, configurations(pes))) == sorted([[], [ev["a!x"]], [ev["b!x"]]])
    assert configurations(term_to_pes(parse("0"))) == [frozenset()]


def test_pomset_transition_flags():
    pes = term_to_pes(parse("a!x.0 | b!x.0"))
    both = [t for t in pomset_transitions(pes) if len(t.events) == 2]
    assert len(both) == 1 and both[0].is_step
    pes = term_to_pes(parse("a!x.b!x.0"))
    both = [t for t in pomset_transitions(pes) if len(t.events) == 2]
    assert len(both) == 1 and not both[0].is_step


def test_reverse_from_singleton():
    pes = term_to_pes(parse("a!x.0"))
    (e,) = pes.events
    rev = [t for t in pomset_transitions(pes, {e}) if t.direction == "rev"]
    assert [(t.events, t.target) for t in rev] == [(frozenset({e}), frozenset())]


def test_sync_event_conflicts_with_its_parts():
    pes = term_to_pes(parse("x!u.0 | x?(v).0"))
    syncs = [i for i, e in pes.events.items() if e.sync]
    assert syncs
    outs = [i for i, e in pes.events.items() if not e.sync and e.label.kind == "out"]
    assert all(pes.in_conflict(s, o) for s in syncs for o in outs)


seeds = st.integers(0, 10**6)


@given(seeds)
def test_axioms_hold(seed):
    pes = term_to_pes(random_term(random.Random(seed)))
    assert check_axioms(pes) == []


@given(seeds)
def test_configurations_closed_under_transitions(seed):
    pes = term_to_pes(random_term(random.Random(seed), prefixes=4, boxsums=0))
    confs = set(configurations(pes))
    for c in list(confs)[:8]:
        for t in pomset_transitions(pes, c):
            assert t.target in confs
        for e in enabled_events(pes, c):
            assert c | {e} in confs


@given(seeds)
def test_initial_steps_agree_with_sos(seed):
    p = random_term(random.Random(seed), boxsums=0)
    assert pes_initial_labels(p) == sos_initial_labels(p)
