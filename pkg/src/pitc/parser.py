"""Concrete syntax: tokenizer, recursive-descent parser and pretty-printer.

    proc  := proc "+" proc | proc "+[" rational "]" proc | proc "|" proc | pre
    pre   := "0" | Ident "(" names ")" | "tau" key? "." pre | x "!" y key? "." pre
           | x "?" "(" y ")" "." pre | x "?" "(" z "/" y ")" key "." pre
           | "(" act "||" act ... ")" "." pre | "(" "new" y ")" pre
           | "[" guard "]" "." pre | "^" pre | "(" proc ")"
    guard := "tt" | "ff" | atom | "!" guard | guard "+" guard | guard "*" guard

Precedence from tight to loose: prefixes, "|", "+[..]", "+".  Binary
operators associate to the left.  "+[" must be written without a space.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .syntax import (And, Atom, BoxSum, Conc, Delta, Epsilon, GuardPrefix, Ident,
                     In, KeyedIn, KeyedOut, KeyedTau, Marked, Nil, Not, Or, Out,
                     Par, Pfx, Process, Res, Sum, Tau, NIL)


class ParseError(ValueError):
    def __init__(self, msg, line=1, col=1, expected=()):
        self.line, self.col, self.expected = line, col, tuple(sorted(set(expected)))
        exp = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{line}:{col}: {msg}{exp}")


KEYWORDS = {"tau", "new", "tt", "ff"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>\+\[|\|\||:=|[!?().|+\[\]^/*,{}=:<>-])
""", re.VERBOSE)


@dataclass
class Tok:
    kind: str  # 'num' | 'name' | 'op' | 'eof'
    text: str
    line: int
    col: int


def tokenize(src: str) -> list:
    toks = []
    pos, line, col = 0, 1, 1
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        text = m.group()
        if m.lastgroup != "ws":
            toks.append(Tok(m.lastgroup, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    toks.append(Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0

    # helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k=1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def fail(self, msg, expected=()):
        t = self.tok
        raise ParseError(msg + (f", found {t.text!r}" if t.text else ", found end of input"),
                         t.line, t.col, expected)

    def expect(self, text) -> Tok:
        if not self.at(text):
            self.fail(f"expected {text!r}", [text])
        t = self.tok
        self.i += 1
        return t

    def name(self) -> str:
        t = self.tok
        if t.kind != "name" or t.text in KEYWORDS:
            self.fail("expected a name", ["name"])
        self.i += 1
        return t.text

    def number(self) -> int:
        t = self.tok
        if t.kind != "num":
            self.fail("expected an integer", ["integer"])
        self.i += 1
        return int(t.text)

    # processes
    def proc(self) -> Process:
        p = self.boxsum()
        while self.at("+"):
            self.i += 1
            p = Sum(p, self.boxsum())
        return p

    def boxsum(self) -> Process:
        p = self.par()
        while self.at("+["):
            self.i += 1
            w = self.rational()
            self.expect("]")
            q = self.par()
            if not 0 < w < 1:
                raise ParseError(f"box-sum weight {w} not strictly between 0 and 1",
                                 self.tok.line, self.tok.col)
            p = BoxSum(w, p, q)
        return p

    def rational(self) -> Fraction:
        n = self.number()
        if self.at("/"):
            self.i += 1
            d = self.number()
            if d == 0:
                self.fail("zero denominator")
            return Fraction(n, d)
        return Fraction(n)

    def par(self) -> Process:
        p = self.pre()
        while self.at("|"):
            self.i += 1
            p = Par(p, self.pre())
        return p

    def key(self):
        if self.at("[") and self.peek().kind == "num":
            self.i += 1
            k = self.number()
            self.expect("]")
            if k <= 0:
                self.fail("keys are positive integers")
            return k
        return None

    def pre(self) -> Process:
        t = self.tok
        if t.kind == "num":
            if t.text != "0":
                self.fail("expected a process", ["0", "name", "(", "[", "^", "tau"])
            self.i += 1
            return NIL
        if self.at("^"):
            self.i += 1
            return Marked(self.pre())
        if self.at("["):
            self.i += 1
            g = self.guard()
            self.expect("]")
            self.expect(".")
            return GuardPrefix(g, self.pre())
        if self.at("("):
            return self.paren()
        if t.kind == "name" and t.text == "tau":
            self.i += 1
            k = self.key()
            self.expect(".")
            body = self.pre()
            return Tau(body) if k is None else KeyedTau(k, body)
        if t.kind == "name" and t.text not in KEYWORDS:
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "!":
                x = self.name()
                self.i += 1
                y = self.name()
                k = self.key()
                self.expect(".")
                body = self.pre()
                return Out(x, y, body) if k is None else KeyedOut(x, y, k, body)
            if nxt.kind == "op" and nxt.text == "?":
                return self.input()
            if nxt.kind == "op" and nxt.text == "(":
                a = self.name()
                self.expect("(")
                args = []
                if not self.at(")"):
                    args.append(self.name())
                    while self.at(","):
                        self.i += 1
                        args.append(self.name())
                self.expect(")")
                return Ident(a, tuple(args))
            if t.text[0].isupper():
                self.i += 1
                return Ident(t.text, ())
        self.fail("expected a process", ["0", "name", "(", "[", "^", "tau"])

    def input(self) -> Process:
        x = self.name()
        self.expect("?")
        self.expect("(")
        y = self.name()
        bind = None
        if self.at("/"):
            self.i += 1
            bind = self.name()
        self.expect(")")
        k = self.key()
        self.expect(".")
        body = self.pre()
        if k is None:
            if bind is not None:
                self.fail("an instantiated input needs a key")
            return In(x, y, body)
        return KeyedIn(x, y, bind or y, k, body)

    def paren(self) -> Process:
        start = self.i
        self.expect("(")
        if self.tok.kind == "name" and self.tok.text == "new":
            self.i += 1
            y = self.name()
            self.expect(")")
            return Res(y, self.pre())
        acts = self.try_actions()
        if acts is not None:
            self.expect(".")
            return Conc(tuple(acts), self.pre()) if len(acts) > 1 else _single(acts[0], self.pre())
        self.i = start + 1
        p = self.proc()
        self.expect(")")
        return p

    def try_actions(self):
        """Parse `act || act ... )` if present; otherwise restore position and return None."""
        save = self.i
        acts = []
        try:
            while True:
                acts.append(self.action())
                if self.at("||"):
                    self.i += 1
                    continue
                self.expect(")")
                if not self.at("."):
                    raise ParseError("not an action list")
                return acts
        except ParseError:
            self.i = save
            return None

    def action(self) -> Pfx:
        t = self.tok
        if t.kind == "name" and t.text == "tau":
            self.i += 1
            return Pfx("tau")
        x = self.name()
        if self.at("!"):
            self.i += 1
            return Pfx("out", x, self.name())
        self.expect("?")
        self.expect("(")
        y = self.name()
        self.expect(")")
        return Pfx("in", x, y)

    # guards
    def guard(self):
        g = self.gterm()
        while self.at("+"):
            self.i += 1
            g = Or(g, self.gterm())
        return g

    def gterm(self):
        g = self.gfactor()
        while self.at("*"):
            self.i += 1
            g = And(g, self.gfactor())
        return g

    def gfactor(self):
        if self.at("!"):
            self.i += 1
            return Not(self.gfactor())
        if self.at("("):
            self.i += 1
            g = self.guard()
            self.expect(")")
            return g
        t = self.tok
        if t.kind == "name":
            self.i += 1
            if t.text == "tt":
                return Epsilon()
            if t.text == "ff":
                return Delta()
            if t.text in KEYWORDS:
                self.i -= 1
                self.fail("expected a guard", ["tt", "ff", "atom", "!", "("])
            return Atom(t.text)
        self.fail("expected a guard", ["tt", "ff", "atom", "!", "("])

    def end(self):
        if self.tok.kind != "eof":
            self.fail("unexpected trailing input", ["end of input", "+", "+[", "|"])


def _single(a: Pfx, body: Process) -> Process:
    if a.kind == "tau":
        return Tau(body)
    if a.kind == "out":
        return Out(a.subj, a.obj, body)
    return In(a.subj, a.obj, body)


def parse(src: str) -> Process:
    p = _Parser(src)
    out = p.proc()
    p.end()
    return out


def parse_guard(src: str):
    p = _Parser(src)
    out = p.guard()
    p.end()
    return out


# --- pretty-printing --------------------------------------------------------

_PREC = {Sum: 1, BoxSum: 2, Par: 3}


def _weight(w: Fraction) -> str:
    return f"{w.numerator}/{w.denominator}" if w.denominator != 1 else str(w.numerator)


def guard_str(g, prec=0) -> str:
    if isinstance(g, Epsilon):
        return "tt"
    if isinstance(g, Delta):
        return "ff"
    if isinstance(g, Atom):
        return g.name
    if isinstance(g, Not):
        return "!" + guard_str(g.arg, 3)
    if isinstance(g, Or):
        s = f"{guard_str(g.left, 1)} + {guard_str(g.right, 2)}"
        return f"({s})" if prec > 1 else s
    if isinstance(g, And):
        s = f"{guard_str(g.left, 2)} * {guard_str(g.right, 3)}"
        return f"({s})" if prec > 2 else s
    raise TypeError(g)


def _act_str(a: Pfx) -> str:
    if a.kind == "tau":
        return "tau"
    if a.kind == "out":
        return f"{a.subj}!{a.obj}"
    return f"{a.subj}?({a.obj})"


def pretty_print(p: Process) -> str:
    return _pp(p, 0)


def _pp(p: Process, ctx: int) -> str:
    prec = _PREC.get(type(p), 4)
    if prec < 4:
        if isinstance(p, BoxSum):
            op = f" +[{_weight(p.weight)}] "
        else:
            op = " + " if isinstance(p, Sum) else " | "
        s = _pp(p.left, prec) + op + _pp(p.right, prec + 1)
        return f"({s})" if prec < ctx else s
    return _pre(p)


def _pre(p: Process) -> str:
    body = lambda: _pp(p.body, 4)
    if isinstance(p, Nil):
        return "0"
    if isinstance(p, Ident):
        return f"{p.name}({','.join(p.args)})"
    if isinstance(p, Tau):
        return "tau." + body()
    if isinstance(p, KeyedTau):
        return f"tau[{p.key}]." + body()
    if isinstance(p, Out):
        return f"{p.subj}!{p.obj}." + body()
    if isinstance(p, KeyedOut):
        return f"{p.subj}!{p.obj}[{p.key}]." + body()
    if isinstance(p, In):
        return f"{p.subj}?({p.bind})." + body()
    if isinstance(p, KeyedIn):
        inst = p.inst if p.bind == p.inst else f"{p.inst}/{p.bind}"
        return f"{p.subj}?({inst})[{p.key}]." + body()
    if isinstance(p, Conc):
        return "(" + " || ".join(_act_str(a) for a in p.actions) + ")." + body()
    if isinstance(p, Marked):
        return "^" + body()
    if isinstance(p, Res):
        return f"(new {p.bind})" + body()
    if isinstance(p, GuardPrefix):
        return f"[{guard_str(p.guard)}]." + body()
    raise TypeError(p)


# --- definition and model files ---------------------------------------------

_DEF_HEAD = re.compile(r"^\s*([A-Z][A-Za-z0-9_']*)\s*(\(([^)]*)\))?\s*:=(.*)$")


def parse_defs(src: str):
    """Lines `A(x,y) := proc`; a line that does not start a definition continues the previous one."""
    from .env import IdentifierEnv
    env = IdentifierEnv()
    entries = []
    for lineno, raw in enumerate(src.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        m = _DEF_HEAD.match(line)
        if m:
            params = [x.strip() for x in (m.group(3) or "").split(",") if x.strip()]
            entries.append([m.group(1), params, m.group(4), lineno])
        elif entries:
            entries[-1][2] += "\n" + line
        else:
            raise ParseError("expected a definition `A(x,...) := proc`", lineno, 1)
    for name, params, body, lineno in entries:
        if name in env:
            raise ParseError(f"{name} defined twice", lineno, 1)
        try:
            proc = parse(body)
        except ParseError as e:
            raise ParseError(f"in definition of {name}: {e}", lineno + e.line - 1, e.col) from None
        try:
            env.define(name, params, proc)
        except ValueError as e:
            raise ParseError(str(e), lineno, 1) from None
    return env


_STATE = re.compile(r"([A-Za-z_][A-Za-z0-9_']*)\s*=\s*\{([^}]*)\}")


def parse_model(src: str):
    """Lines `atoms: g1 g2`, `states: s0={g1} s1={}`, `effect: a s0 -> s1` (`tau` for silent steps)."""
    from .state import DataState, EffectModel
    atoms: set = set()
    named: dict = {}
    effects = []
    for lineno, raw in enumerate(src.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(":")
        head = head.strip()
        if head == "atoms":
            atoms.update(rest.split())
        elif head == "states":
            consumed = _STATE.sub("", rest).strip()
            if consumed:
                raise ParseError(f"bad state declaration near {consumed!r}", lineno, 1)
            for name, props in _STATE.findall(rest):
                named[name] = DataState(frozenset(x.strip() for x in props.split(",") if x.strip()))
        elif head == "effect":
            m = re.fullmatch(r"(\S+)\s+(\S+)\s*->\s*(\S+)", rest.strip())
            if not m:
                raise ParseError("expected `effect: kind src -> dst`", lineno, 1)
            effects.append((m.groups(), lineno))
        else:
            raise ParseError(f"unknown model directive {head!r}", lineno, 1, ["atoms", "states", "effect"])
    for name, st in named.items():
        bad = st.props - atoms
        if bad:
            raise ParseError(f"state {name} uses undeclared atoms {sorted(bad)}", 1, 1)
    table = []
    for (kind, src_name, dst_name), lineno in effects:
        for n in (src_name, dst_name):
            if n not in named:
                raise ParseError(f"unknown state {n!r}", lineno, 1)
        table.append(((kind, named[src_name]), named[dst_name]))
    states = tuple(dict.fromkeys(named.values())) or (DataState(),)
    return EffectModel(frozenset(atoms), states, tuple(table), tuple(named.items()))
