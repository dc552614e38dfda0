"""Data states and the guard predicates test, effect and wp over a finite state space."""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import And, Atom, Delta, Epsilon, Guard, Not, Or, guard_atoms

TAU = "tau"  # action-kind of silent steps


class UnknownAtom(ValueError):
    pass


@dataclass(frozen=True)
class DataState:
    props: frozenset = frozenset()

    def __or__(self, other: "DataState") -> "DataState":
        return DataState(self.props | other.props)

    def __str__(self):
        return "{" + ",".join(sorted(self.props)) + "}"


EMPTY = DataState()


@dataclass(frozen=True)
class EffectModel:
    alphabet: frozenset = frozenset()
    states: tuple = (EMPTY,)
    # (action-kind, DataState) -> DataState; identity where absent
    table: tuple = ()
    state_names: tuple = ()

    def __post_init__(self):
        for st in self.states:
            if not st.props <= self.alphabet:
                raise UnknownAtom(f"state {st} uses atoms outside the alphabet")
        for (_, src), dst in self.table:
            if dst not in self.states:
                raise ValueError(f"effect target {dst} is not a declared state")

    @property
    def lookup(self) -> dict:
        return dict(self.table)

    def state_named(self, name: str) -> DataState:
        for n, st in self.state_names:
            if n == name:
                return st
        raise KeyError(name)

    def name_of(self, st: DataState) -> str:
        for n, s in self.state_names:
            if s == st:
                return n
        return str(st)

    @classmethod
    def identity(cls, alphabet=(), states=None) -> "EffectModel":
        alphabet = frozenset(alphabet)
        if states is None:
            states = (EMPTY,)
        return cls(alphabet, tuple(states))

    @classmethod
    def for_guards(cls, *guards: Guard) -> "EffectModel":
        """Identity model whose alphabet covers the atoms of the given guards."""
        atoms = frozenset().union(*(guard_atoms(g) for g in guards)) if guards else frozenset()
        return cls.identity(atoms)


def test(phi: Guard, s: DataState, alphabet: frozenset | None = None) -> bool:
    if isinstance(phi, Epsilon):
        return True
    if isinstance(phi, Delta):
        return False
    if isinstance(phi, Atom):
        if alphabet is not None and phi.name not in alphabet:
            raise UnknownAtom(phi.name)
        return phi.name in s.props
    if isinstance(phi, Not):
        return not test(phi.arg, s, alphabet)
    if isinstance(phi, Or):
        return test(phi.left, s, alphabet) or test(phi.right, s, alphabet)
    if isinstance(phi, And):
        return test(phi.left, s, alphabet) and test(phi.right, s, alphabet)
    raise TypeError(phi)


def effect(kind: str, s: DataState, m: EffectModel) -> DataState:
    return m.lookup.get((kind, s), s)


def wp(kind: str, phi: Guard, m: EffectModel) -> bool:
    return all(test(phi, effect(kind, s, m), m.alphabet) for s in m.states)
