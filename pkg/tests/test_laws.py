import random
from fractions import Fraction

from pitc.equivalence import step_bisimilar_fr
from pitc.laws import Instance, check_instance, instances, random_term, run_laws
from pitc.parser import parse
from pitc.syntax import BoxSum, Sum, free_names

SOUND = ["S0", "S2", "S3", "BS1", "BS2", "BS3", "R0", "R1", "R2", "R3", "R4", "R-box",
         "P-unit", "P-comm", "I", "E", "E-rev"]


def test_generator_respects_limits():
    rng = random.Random(3)
    for _ in range(300):
        p = random_term(rng)
        text = repr(p)
        assert text.count("Out(") + text.count("In(") + text.count("Tau(") <= 6
        assert text.count("Par(") <= 1 and text.count("BoxSum(") <= 2
        assert free_names(p) <= {"a", "b", "c", "d"}


def test_every_law_instantiated():
    names = {i.law for i in instances(random.Random(0))}
    assert set(SOUND) <= names and {"S1", "BS0", "P-assoc", "P-res"} <= names


def test_sound_laws_small_run():
    rep = run_laws(seed=11, cases=15, laws=SOUND)
    assert rep.ok, "\n".join(rep.lines())


def test_boxsum_with_nil_branch_is_not_a_law():
    # the nil branch can never act, so the weight of a!x is visible
    p = parse("a!x.0")
    assert not step_bisimilar_fr(BoxSum(Fraction(1, 2), p, parse("0")), p).equivalent


def test_idempotence_breaks_under_top_level_boxsum():
    p = parse("a!x.0 +[1/2] b!x.0")
    assert not step_bisimilar_fr(Sum(p, p), p).equivalent


def test_restriction_does_not_distribute_over_par():
    # inside the scope the lone y!a blocks; outside it b!c still fires
    left, right = parse("(new y)(y!a.0 | b!c.0)"), parse("(new y)y!a.0 | b!c.0")
    assert not check_instance(Instance("P-res", left, right))[0]


def test_associativity_fails_for_partial_sync():
    left = parse("(d!d.0 | d?(z).0) | a!b.0")
    right = parse("d!d.0 | (d?(z).0 | a!b.0)")
    assert not step_bisimilar_fr(left, right).equivalent


def test_report_lines():
    rep = run_laws(seed=1, cases=2, laws=["S0"])
    assert rep.lines() == ["S0       PASS  2 passed, 0 failed"]
