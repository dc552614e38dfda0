import pytest

from pitc.state import DataState, EffectModel, UnknownAtom, effect, test as holds, wp
from pitc.syntax import And, Atom, Delta, Epsilon, Not, Or

S0, S1 = DataState(frozenset()), DataState(frozenset({"g"}))


def test_constants():
    assert holds(Epsilon(), S0)
    assert not holds(Delta(), S1)


def test_negation_and_connectives():
    assert not holds(Not(Atom("g")), S1)
    assert holds(Or(Atom("g"), Delta()), S1)
    assert not holds(And(Atom("g"), Epsilon()), S0)


def test_unknown_atom_rejected():
    with pytest.raises(UnknownAtom):
        holds(Atom("h"), S0, frozenset({"g"}))


def test_effect_identity_default():
    m = EffectModel.identity({"g"}, (S0, S1))
    assert effect("tau", S1, m) == S1


def test_effect_table():
    m = EffectModel(frozenset({"g"}), (S0, S1), ((("a", S0), S1),))
    assert effect("a", S0, m) == S1
    assert effect("b", S0, m) == S0


def test_wp():
    m = EffectModel(frozenset({"g"}), (S0, S1), ((("a", S0), S1),))
    assert wp("a", Epsilon(), m)
    assert not wp("a", Delta(), m)
    assert wp("a", Atom("g"), m)
    assert not wp("b", Atom("g"), m)


def test_model_rejects_foreign_atoms():
    with pytest.raises(UnknownAtom):
        EffectModel(frozenset(), (S1,))
