"""Term language: guards, processes, names, substitution and alpha-equivalence."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

Name = str


# --- guards -----------------------------------------------------------------

@dataclass(frozen=True)
class Delta:
    pass


@dataclass(frozen=True)
class Epsilon:
    pass


@dataclass(frozen=True)
class Atom:
    name: Name


@dataclass(frozen=True)
class Not:
    arg: "Guard"


@dataclass(frozen=True)
class Or:
    left: "Guard"
    right: "Guard"


@dataclass(frozen=True)
class And:
    left: "Guard"
    right: "Guard"


Guard = Union[Delta, Epsilon, Atom, Not, Or, And]


def guard_atoms(g: Guard) -> frozenset:
    if isinstance(g, Atom):
        return frozenset([g.name])
    if isinstance(g, Not):
        return guard_atoms(g.arg)
    if isinstance(g, (Or, And)):
        return guard_atoms(g.left) | guard_atoms(g.right)
    return frozenset()


# --- processes --------------------------------------------------------------

@dataclass(frozen=True)
class Pfx:
    """One atomic action of a concurrent prefix: tau, output x!y or input x?(y)."""
    kind: str  # 'tau' | 'out' | 'in'
    subj: Name | None = None
    obj: Name | None = None


@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Ident:
    name: str
    args: tuple = ()


@dataclass(frozen=True)
class GuardPrefix:
    guard: Guard
    body: "Process"


@dataclass(frozen=True)
class Tau:
    body: "Process"


@dataclass(frozen=True)
class Out:
    subj: Name
    obj: Name
    body: "Process"


@dataclass(frozen=True)
class In:
    subj: Name
    bind: Name
    body: "Process"


@dataclass(frozen=True)
class Conc:
    """Concurrent prefix (a1 || ... || an).P, n >= 2; input binders scope over body."""
    actions: tuple
    body: "Process"


@dataclass(frozen=True)
class KeyedTau:
    key: int
    body: "Process"


@dataclass(frozen=True)
class KeyedOut:
    subj: Name
    obj: Name
    key: int
    body: "Process"


@dataclass(frozen=True)
class KeyedIn:
    # body is already instantiated: the original binder is kept only as a record
    subj: Name
    inst: Name
    bind: Name
    key: int
    body: "Process"


@dataclass(frozen=True)
class Marked:
    body: "Process"


@dataclass(frozen=True)
class Res:
    bind: Name
    body: "Process"


@dataclass(frozen=True)
class Sum:
    left: "Process"
    right: "Process"


@dataclass(frozen=True)
class BoxSum:
    weight: Fraction
    left: "Process"
    right: "Process"

    def __post_init__(self):
        w = Fraction(self.weight)
        if not 0 < w < 1:
            raise ValueError(f"box-sum weight must lie strictly between 0 and 1, got {w}")
        object.__setattr__(self, "weight", w)


@dataclass(frozen=True)
class Par:
    left: "Process"
    right: "Process"


Process = Union[Nil, Ident, GuardPrefix, Tau, Out, In, Conc, KeyedTau, KeyedOut, KeyedIn,
                Marked, Res, Sum, BoxSum, Par]

PREFIXES = (Tau, Out, In, Conc)
KEYED = (KeyedTau, KeyedOut, KeyedIn)

NIL = Nil()


def conc(actions: Iterable[Pfx], body: Process) -> Process:
    """Build a concurrent prefix, collapsing the one-action case to a plain prefix."""
    acts = tuple(actions)
    if not acts:
        raise ValueError("empty concurrent prefix")
    if len(acts) == 1:
        a = acts[0]
        if a.kind == "tau":
            return Tau(body)
        if a.kind == "out":
            return Out(a.subj, a.obj, body)
        return In(a.subj, a.obj, body)
    return Conc(acts, body)


def conc_exclusions(actions) -> frozenset:
    """(input index, output index) pairs on one channel: the input may not receive that object."""
    return frozenset((i, j) for i, a in enumerate(actions) for j, b in enumerate(actions)
                     if a.kind == "in" and b.kind == "out" and a.subj == b.subj)


def prefix_actions(p: Process) -> tuple:
    if isinstance(p, Tau):
        return (Pfx("tau"),)
    if isinstance(p, Out):
        return (Pfx("out", p.subj, p.obj),)
    if isinstance(p, In):
        return (Pfx("in", p.subj, p.bind),)
    if isinstance(p, Conc):
        return p.actions
    raise TypeError(f"not a prefix: {p!r}")


def children(p: Process) -> tuple:
    if isinstance(p, (Sum, BoxSum, Par)):
        return (p.left, p.right)
    if isinstance(p, (Nil, Ident)):
        return ()
    return (p.body,)


# --- names ------------------------------------------------------------------

def free_names(p: Process) -> frozenset:
    if isinstance(p, Nil):
        return frozenset()
    if isinstance(p, Ident):
        return frozenset(p.args)
    if isinstance(p, (GuardPrefix, Tau, KeyedTau, Marked)):
        return free_names(p.body)
    if isinstance(p, (Out, KeyedOut)):
        return free_names(p.body) | {p.subj, p.obj}
    if isinstance(p, In):
        return (free_names(p.body) - {p.bind}) | {p.subj}
    if isinstance(p, KeyedIn):
        return free_names(p.body) | {p.subj, p.inst}
    if isinstance(p, Conc):
        binders = {a.obj for a in p.actions if a.kind == "in"}
        fn = set(free_names(p.body) - binders)
        for a in p.actions:
            if a.kind != "tau":
                fn.add(a.subj)
            if a.kind == "out":
                fn.add(a.obj)
        return frozenset(fn)
    if isinstance(p, Res):
        return free_names(p.body) - {p.bind}
    return free_names(p.left) | free_names(p.right)


def names(p: Process) -> frozenset:
    """Every name occurring syntactically in p, binders included."""
    out: set = set()
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, Ident):
            out.update(q.args)
        elif isinstance(q, (Out, KeyedOut)):
            out.update((q.subj, q.obj))
        elif isinstance(q, In):
            out.update((q.subj, q.bind))
        elif isinstance(q, KeyedIn):
            out.update((q.subj, q.inst, q.bind))
        elif isinstance(q, Conc):
            for a in q.actions:
                out.update(n for n in (a.subj, a.obj) if n is not None)
        elif isinstance(q, Res):
            out.add(q.bind)
        stack.extend(children(q))
    return frozenset(out)


def bound_names(p: Process) -> frozenset:
    return names(p) - free_names(p)


def fresh_name(avoid: Iterable[Name], prefix: str = "w") -> Name:
    """Least name of the family prefix0, prefix1, ... not in avoid."""
    avoid = set(avoid)
    i = 0
    while f"{prefix}{i}" in avoid:
        i += 1
    return f"{prefix}{i}"


# --- substitution -----------------------------------------------------------

def _rename_binder(bind: Name, body: Process, sigma: dict, avoid: set):
    """Return (binder, sigma for body) so that applying sigma under the binder cannot capture."""
    inner = {k: v for k, v in sigma.items() if k != bind}
    hits = {inner.get(n, n) for n in free_names(body) - {bind} if n in inner}
    if bind in hits:
        new = fresh_name(avoid | set(inner) | set(inner.values()) | names(body))
        avoid.add(new)
        inner[bind] = new
        return new, inner
    return bind, inner


def substitute(p: Process, sigma: Mapping[Name, Name]) -> Process:
    """Capture-avoiding application of the name substitution sigma; keys are never touched."""
    sigma = {k: v for k, v in sigma.items() if k != v}
    if not sigma:
        return p
    return _subst(p, sigma, set(names(p)) | set(sigma) | set(sigma.values()))


def _subst(p: Process, s: dict, avoid: set) -> Process:
    if not s:
        return p
    f = lambda n: s.get(n, n)
    if isinstance(p, Nil):
        return p
    if isinstance(p, Ident):
        return Ident(p.name, tuple(f(a) for a in p.args))
    if isinstance(p, GuardPrefix):
        return GuardPrefix(p.guard, _subst(p.body, s, avoid))
    if isinstance(p, Tau):
        return Tau(_subst(p.body, s, avoid))
    if isinstance(p, KeyedTau):
        return KeyedTau(p.key, _subst(p.body, s, avoid))
    if isinstance(p, Marked):
        return Marked(_subst(p.body, s, avoid))
    if isinstance(p, Out):
        return Out(f(p.subj), f(p.obj), _subst(p.body, s, avoid))
    if isinstance(p, KeyedOut):
        return KeyedOut(f(p.subj), f(p.obj), p.key, _subst(p.body, s, avoid))
    if isinstance(p, KeyedIn):
        return KeyedIn(f(p.subj), f(p.inst), p.bind, p.key, _subst(p.body, s, avoid))
    if isinstance(p, In):
        b, inner = _rename_binder(p.bind, p.body, s, avoid)
        return In(f(p.subj), b, _subst(p.body, inner, avoid))
    if isinstance(p, Res):
        b, inner = _rename_binder(p.bind, p.body, s, avoid)
        return Res(b, _subst(p.body, inner, avoid))
    if isinstance(p, Conc):
        inner = dict(s)
        acts = []
        for a in p.actions:
            if a.kind == "in":
                b, inner = _rename_binder(a.obj, p.body, inner, avoid)
                acts.append(Pfx("in", f(a.subj), b))
            elif a.kind == "out":
                acts.append(Pfx("out", f(a.subj), f(a.obj)))
            else:
                acts.append(a)
        return Conc(tuple(acts), _subst(p.body, inner, avoid))
    if isinstance(p, Sum):
        return Sum(_subst(p.left, s, avoid), _subst(p.right, s, avoid))
    if isinstance(p, BoxSum):
        return BoxSum(p.weight, _subst(p.left, s, avoid), _subst(p.right, s, avoid))
    if isinstance(p, Par):
        return Par(_subst(p.left, s, avoid), _subst(p.right, s, avoid))
    raise TypeError(p)


# --- alpha-equivalence ------------------------------------------------------

def alpha_key(p: Process, env: dict | None = None):
    """Hashable structural key in which bound names are replaced by binding depth."""
    return _akey(p, env or {}, 0)


def _akey(p, env, depth):
    n = lambda x: env.get(x, x)
    if isinstance(p, Nil):
        return ("0",)
    if isinstance(p, Ident):
        return ("id", p.name, tuple(n(a) for a in p.args))
    if isinstance(p, GuardPrefix):
        return ("g", p.guard, _akey(p.body, env, depth))
    if isinstance(p, Tau):
        return ("t", _akey(p.body, env, depth))
    if isinstance(p, KeyedTau):
        return ("kt", p.key, _akey(p.body, env, depth))
    if isinstance(p, Marked):
        return ("^", _akey(p.body, env, depth))
    if isinstance(p, Out):
        return ("o", n(p.subj), n(p.obj), _akey(p.body, env, depth))
    if isinstance(p, KeyedOut):
        return ("ko", n(p.subj), n(p.obj), p.key, _akey(p.body, env, depth))
    if isinstance(p, KeyedIn):
        # the recorded binder is not a binding occurrence
        return ("ki", n(p.subj), n(p.inst), p.key, _akey(p.body, env, depth))
    if isinstance(p, In):
        return ("i", n(p.subj), _akey(p.body, {**env, p.bind: depth}, depth + 1))
    if isinstance(p, Res):
        return ("r", _akey(p.body, {**env, p.bind: depth}, depth + 1))
    if isinstance(p, Conc):
        inner = dict(env)
        acts = []
        for a in p.actions:
            if a.kind == "in":
                acts.append(("i", n(a.subj), depth))
                inner[a.obj] = depth
                depth += 1
            elif a.kind == "out":
                acts.append(("o", n(a.subj), n(a.obj)))
            else:
                acts.append(("t",))
        return ("c", tuple(acts), _akey(p.body, inner, depth))
    if isinstance(p, Sum):
        return ("+", _akey(p.left, env, depth), _akey(p.right, env, depth))
    if isinstance(p, BoxSum):
        return ("[+]", p.weight, _akey(p.left, env, depth), _akey(p.right, env, depth))
    if isinstance(p, Par):
        return ("|", _akey(p.left, env, depth), _akey(p.right, env, depth))
    raise TypeError(p)


def alpha_equivalent(p: Process, q: Process) -> bool:
    return alpha_key(p) == alpha_key(q)


# --- misc helpers -----------------------------------------------------------

def keys_of(p: Process) -> list:
    out = []
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, KEYED):
            out.append(q.key)
        stack.extend(children(q))
    return out


def strip_keys(p: Process) -> Process:
    """The live part of p: keyed prefixes replaced by their continuations."""
    if isinstance(p, KEYED):
        return strip_keys(p.body)
    if isinstance(p, (Nil, Ident)):
        return p
    if isinstance(p, (Sum, Par)):
        return type(p)(strip_keys(p.left), strip_keys(p.right))
    if isinstance(p, BoxSum):
        return BoxSum(p.weight, strip_keys(p.left), strip_keys(p.right))
    if isinstance(p, GuardPrefix):
        return GuardPrefix(p.guard, strip_keys(p.body))
    if isinstance(p, Res):
        return Res(p.bind, strip_keys(p.body))
    return _rebuild(p, strip_keys(p.body))


def strip_marks(p: Process) -> Process:
    if isinstance(p, Marked):
        return strip_marks(p.body)
    if isinstance(p, (Nil, Ident)):
        return p
    if isinstance(p, (Sum, Par)):
        return type(p)(strip_marks(p.left), strip_marks(p.right))
    if isinstance(p, BoxSum):
        return BoxSum(p.weight, strip_marks(p.left), strip_marks(p.right))
    return _rebuild(p, strip_marks(p.body))


def _rebuild(p: Process, body: Process) -> Process:
    if isinstance(p, GuardPrefix):
        return GuardPrefix(p.guard, body)
    if isinstance(p, Tau):
        return Tau(body)
    if isinstance(p, Out):
        return Out(p.subj, p.obj, body)
    if isinstance(p, In):
        return In(p.subj, p.bind, body)
    if isinstance(p, Conc):
        return Conc(p.actions, body)
    if isinstance(p, KeyedTau):
        return KeyedTau(p.key, body)
    if isinstance(p, KeyedOut):
        return KeyedOut(p.subj, p.obj, p.key, body)
    if isinstance(p, KeyedIn):
        return KeyedIn(p.subj, p.inst, p.bind, p.key, body)
    if isinstance(p, Marked):
        return Marked(body)
    if isinstance(p, Res):
        return Res(p.bind, body)
    raise TypeError(p)


def has_ident(p: Process) -> bool:
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, Ident):
            return True
        stack.extend(children(q))
    return False


def size(p: Process) -> int:
    return 1 + sum(size(c) for c in children(p))
