"""Identifier environments: defining equations A(x1,...,xn) := P."""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import (KEYED, PREFIXES, Ident, Process, children, free_names,
                     substitute)


class UnboundIdentifier(KeyError):
    pass


class ArityMismatch(ValueError):
    pass


class NotWeaklyGuarded(ValueError):
    pass


@dataclass(frozen=True)
class Definition:
    params: tuple
    body: Process


@dataclass
class IdentifierEnv:
    defs: dict = field(default_factory=dict)

    def define(self, name: str, params, body: Process) -> None:
        # names free in body but not parameters act as global channels
        params = tuple(params)
        if len(set(params)) != len(params):
            raise ValueError(f"{name}: repeated parameter")
        self.defs[name] = Definition(params, body)

    def __contains__(self, name):
        return name in self.defs

    def __len__(self):
        return len(self.defs)


EMPTY_ENV = IdentifierEnv()


def unfold_identifier(ident: Ident, env: IdentifierEnv | None) -> Process:
    if env is None or ident.name not in env.defs:
        raise UnboundIdentifier(ident.name)
    d = env.defs[ident.name]
    if len(d.params) != len(ident.args):
        raise ArityMismatch(f"{ident.name} expects {len(d.params)} arguments, got {len(ident.args)}")
    return substitute(d.body, dict(zip(d.params, ident.args)))


def _unguarded_idents(p: Process) -> set:
    """Identifier names occurring in p outside every action prefix."""
    if isinstance(p, Ident):
        return {p.name}
    if isinstance(p, PREFIXES + KEYED):
        return set()
    out = set()
    for c in children(p):
        out |= _unguarded_idents(c)
    return out


def check_weakly_guarded(env: IdentifierEnv) -> bool:
    return all(not _unguarded_idents(d.body) for d in env.defs.values())
