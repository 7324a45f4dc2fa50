"""Surface syntax: lexer, recursive-descent parser and printers.

Named declarations are inlined at parse time, so every AST handed to the
checkers is self-contained.  ``print_program`` is exact (``parse`` of its
output rebuilds equal ASTs); ``show_value`` is the short human-facing form.
"""
from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field
from typing import List, Optional

from .errors import ParseError
from .main_core import (
    App, BIT, BOp, Bang, Case, Force, Lam, LetBang, LetPair, LetPairBang, Lift,
    Lolli, MInl, MInr, MPair, MStar, MSucc, MSum, MTensor, MUnit, MVar, MZero,
    Match, Meas, Nat, PureT, UnApply, nat_literal,
)
from .pure_core import (
    KET0, KET1, QBIT, Adjoint, Apply, Clauses, Compose, Ctrl, DirectSum, InjL,
    InjR, LinComb, Pair, QNat, Star, Succ, Sum, Tensor, UTensor, Unit, Var, Zero,
    ket, pattern_vars, qif, qnat_literal,
)

KEYWORDS = {
    "unitary", "pure", "def", "run", "let", "in", "case", "of", "left", "right",
    "match", "with", "zero", "succ", "lift", "force", "meas", "U", "B", "adj",
    "ctrl", "qif", "then", "else", "inl", "inr", "S", "I", "qbit", "qnat", "bit",
    "Nat",
}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<ket>\|\s*(?:[A-Za-z_][A-Za-z0-9_']*\s*\+\s*\d+|\d+)\s*>)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?i?(?![A-Za-z0-9_]))
  | (?P<id>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>\(x\)|\(\+\)|->|-o|[\\.\[\]*+\-/(){}|;:=,!<>^])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self):
        return f"{self.line}:{self.col}"


def tokenize(src):
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {src[pos]!r}", "lexical", Span(line, pos - line_start + 1)
            )
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if text == "(x)" and pos > 0 and (src[pos - 1].isalnum() or src[pos - 1] in "_']"):
            # `meas(x)` and `U[u](x)` wrap a variable named x
            out += [Token("op", "(", line, col), Token("id", "x", line, col + 1), Token("op", ")", line, col + 2)]
        elif kind != "ws":
            out.append(Token(kind, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


# ---------------------------------------------------------------- programs


@dataclass
class Decl:
    kind: str  # unitary | pure | def | run
    name: Optional[str]
    value: object
    annotation: object = None
    span: Optional[Span] = None

    def key(self):
        return (self.kind, self.name, self.value, self.annotation)


@dataclass
class Program:
    decls: List[Decl] = field(default_factory=list)

    def named(self, kind):
        return {d.name: d.value for d in self.decls if d.kind == kind}

    def runs(self):
        return [d for d in self.decls if d.kind == "run"]

    def lookup(self, name):
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(name)

    def __eq__(self, other):
        return isinstance(other, Program) and [d.key() for d in self.decls] == [
            d.key() for d in other.decls
        ]


# ---------------------------------------------------------------- parser


class Parser:
    def __init__(self, src, env=None):
        self.toks = tokenize(src)
        self.i = 0
        # name -> (kind, value); shared with the enclosing program
        self.env = dict(env or {})
        # clause variables in scope; they shadow declared names
        self.pure_scope = frozenset()
        self.in_pattern = False

    # -------------------------------------------------------------- helpers

    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def span(self, tok=None):
        tok = tok or self.tok
        return Span(tok.line, tok.col)

    def error(self, msg, tok=None):
        tok = tok or self.tok
        shown = tok.text or "end of input"
        raise ParseError(f"{msg} (found {shown!r})", "syntax", self.span(tok))

    def at(self, *texts):
        return self.tok.kind in ("op", "id") and self.tok.text in texts

    def accept(self, text):
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.at(text):
            self.error(f"expected {text!r}")
        tok = self.tok
        self.i += 1
        return tok

    def name(self):
        tok = self.tok
        if tok.kind != "id" or tok.text in KEYWORDS:
            self.error("expected a name")
        self.i += 1
        return tok.text

    # -------------------------------------------------------------- program

    def program(self):
        prog = Program()
        while self.tok.kind != "eof":
            prog.decls.append(self.decl())
        return prog

    def decl(self):
        start = self.span()
        if self.accept("unitary"):
            name = self.name()
            self.expect("=")
            value = self.unitary()
            self.expect(";")
            self.define(name, "unitary", value, start)
            return Decl("unitary", name, value, span=start)
        if self.accept("pure"):
            name = self.name()
            self.expect("=")
            value = self.pterm()
            self.expect(";")
            self.define(name, "pure", value, start)
            return Decl("pure", name, value, span=start)
        if self.accept("def"):
            name = self.name()
            ann = None
            if self.accept(":"):
                ann = self.mtype()
            self.expect("=")
            value = self.mterm(frozenset())
            self.expect(";")
            self.define(name, "def", value, start)
            return Decl("def", name, value, ann, span=start)
        if self.accept("run"):
            value = self.mterm(frozenset())
            self.expect(";")
            return Decl("run", None, value, span=start)
        self.error("expected a declaration (unitary, pure, def or run)")

    def define(self, name, kind, value, span):
        if name in self.env:
            raise ParseError(f"{name} is declared twice", "duplicate-declaration", span)
        self.env[name] = (kind, value)

    def ref(self, name, kind, tok):
        entry = self.env.get(name)
        if entry is None or entry[0] != kind:
            return None
        return entry[1]

    # -------------------------------------------------------------- scalars

    def scalar(self):
        self.expect("[")
        v = self.s_sum()
        self.expect("]")
        return complex(v)

    def s_sum(self):
        v = self.s_prod()
        while self.at("+", "-"):
            op = self.tok.text
            self.i += 1
            w = self.s_prod()
            v = v + w if op == "+" else v - w
        return v

    def s_prod(self):
        v = self.s_unary()
        while self.at("*", "/"):
            op = self.tok.text
            self.i += 1
            w = self.s_unary()
            if op == "/" and w == 0:
                self.error("division by zero in a scalar")
            v = v * w if op == "*" else v / w
        return v

    def s_unary(self):
        if self.accept("-"):
            return -self.s_unary()
        if self.accept("+"):
            return self.s_unary()
        return self.s_atom()

    def s_atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            if tok.text.endswith("i"):
                return complex(0, float(tok.text[:-1]))
            return float(tok.text)
        if tok.kind == "id":
            fns = {"sqrt": cmath.sqrt, "exp": cmath.exp, "cos": cmath.cos, "sin": cmath.sin}
            if tok.text in fns:
                self.i += 1
                self.expect("(")
                v = self.s_sum()
                self.expect(")")
                return fns[tok.text](v)
            consts = {"i": 1j, "pi": math.pi, "e": math.e}
            if tok.text in consts:
                self.i += 1
                return consts[tok.text]
        if self.accept("("):
            v = self.s_sum()
            self.expect(")")
            return v
        self.error("expected a scalar")

    # -------------------------------------------------------------- pure types

    def ptype(self):
        left = self.ptensor_type()
        if self.accept("(+)"):
            return Sum(left, self.ptype())
        return left

    def ptensor_type(self):
        left = self.patom_type()
        if self.accept("(x)"):
            return Tensor(left, self.ptensor_type())
        return left

    def patom_type(self):
        if self.accept("I"):
            return Unit()
        if self.accept("qbit"):
            return QBIT
        if self.accept("qnat"):
            return QNat()
        if self.accept("("):
            t = self.ptype()
            self.expect(")")
            return t
        self.error("expected a pure type")

    # -------------------------------------------------------------- pure terms

    def pterm(self):
        if self.at("[") or (self.at("-") and self.peek().text == "["):
            return self.lincomb()
        return self.ptensor()

    def lincomb(self):
        entries = []
        sign = 1
        if self.accept("-"):
            sign = -1
        while True:
            a = self.scalar()
            self.expect("*")
            entries.append((sign * a, self.ptensor()))
            if self.accept("+"):
                sign = 1
            elif self.accept("-"):
                sign = -1
            else:
                break
        return LinComb(tuple(entries))

    def ptensor(self):
        left = self.papp()
        if self.accept("(x)"):
            return Pair(left, self.ptensor())
        return left

    def starts_unitary(self):
        tok = self.tok
        if self.in_pattern or tok.text in self.pure_scope:
            return False
        if tok.kind == "op" and tok.text in ("{", "<"):
            return True
        if tok.kind == "id" and tok.text in ("adj", "ctrl"):
            return True
        return tok.kind == "id" and self.ref(tok.text, "unitary", tok) is not None

    def papp(self):
        if self.accept("inl"):
            return InjL(self.papp())
        if self.accept("inr"):
            return InjR(self.papp())
        if self.accept("S"):
            return Succ(self.papp())
        if self.starts_unitary():
            u = self.uprefix()
            return Apply(u, self.papp())
        return self.patom()

    def patom(self):
        tok = self.tok
        if self.accept("*"):
            return Star()
        if tok.kind == "num" and tok.text == "0":
            self.i += 1
            return Zero()
        if tok.kind == "ket":
            self.i += 1
            body = tok.text[1:-1].replace(" ", "")
            if "+" in body:
                var, n = body.split("+")
                return qnat_literal(int(n), Var(var))
            return qnat_literal(int(body))
        if tok.kind == "id" and tok.text not in KEYWORDS:
            self.i += 1
            if re.fullmatch(r"ket[01]+", tok.text):
                return ket(tok.text[3:])
            if self.in_pattern or tok.text in self.pure_scope:
                return Var(tok.text)
            value = self.ref(tok.text, "pure", tok)
            return value if value is not None else Var(tok.text)
        if self.accept("("):
            t = self.pterm()
            self.expect(")")
            return t
        self.error("expected a pure term")

    # -------------------------------------------------------------- unitaries

    def unitary(self):
        left = self.usum()
        if self.accept("."):
            return Compose(left, self.unitary())
        return left

    def usum(self):
        left = self.utensor()
        if self.accept("(+)"):
            return DirectSum(left, self.usum())
        return left

    def utensor(self):
        left = self.uprefix()
        if self.accept("(x)"):
            return UTensor(left, self.utensor())
        return left

    def uprefix(self):
        if self.accept("adj"):
            return Adjoint(self.uprefix())
        if self.accept("ctrl"):
            return Ctrl(self.uprefix())
        return self.upower()

    def upower(self):
        u = self.uatom()
        if self.accept("^"):
            tok = self.tok
            if tok.kind != "num" or not tok.text.isdigit() or int(tok.text) < 1:
                self.error("expected a positive power")
            self.i += 1
            out = u
            for _ in range(int(tok.text) - 1):
                out = Compose(u, out)
            return out
        return u

    def uatom(self):
        tok = self.tok
        if self.accept("{"):
            self.accept("|")
            clauses = [self.clause()]
            while self.accept("|"):
                clauses.append(self.clause())
            self.expect("}")
            return Clauses(tuple(clauses))
        if self.accept("<"):
            u = self.unitary()
            self.expect(">")
            return u
        if self.accept("("):
            u = self.unitary()
            self.expect(")")
            return u
        if self.accept("qif"):
            self.name()
            self.expect("then")
            then_u = self.uprefix()
            self.expect("else")
            else_u = self.uprefix()
            if not isinstance(then_u, Clauses) or not isinstance(else_u, Clauses):
                raise ParseError("qif branches must be clause unitaries", "qif-branch", self.span(tok))
            return qif(then_u, else_u)
        if tok.kind == "id":
            value = self.ref(tok.text, "unitary", tok)
            if value is not None:
                self.i += 1
                return value
            self.error("unknown unitary")
        self.error("expected a unitary")

    def clause(self):
        saved = self.pure_scope
        self.in_pattern = True
        try:
            pat = self.pterm()
        finally:
            self.in_pattern = False
        self.expect("->")
        self.pure_scope = saved | set(pattern_vars(pat))
        try:
            return pat, self.pterm()
        finally:
            self.pure_scope = saved

    # -------------------------------------------------------------- main types

    def mtype(self):
        left = self.msum_type()
        if self.accept("-o"):
            return Lolli(left, self.mtype())
        return left

    def msum_type(self):
        left = self.mtensor_type()
        if self.accept("+"):
            return MSum(left, self.msum_type())
        return left

    def mtensor_type(self):
        left = self.mprefix_type()
        if self.accept("(x)"):
            return MTensor(left, self.mtensor_type())
        return left

    def mprefix_type(self):
        if self.accept("!"):
            return Bang(self.mprefix_type())
        if self.accept("I"):
            return MUnit()
        if self.accept("bit"):
            return BIT
        if self.accept("qbit"):
            return BOp(QBIT)
        if self.accept("Nat"):
            return Nat()
        if self.accept("B"):
            self.expect("(")
            q = self.ptype()
            self.expect(")")
            return BOp(q)
        if self.accept("("):
            t = self.mtype()
            self.expect(")")
            return t
        self.error("expected a type")

    # -------------------------------------------------------------- main terms

    def mterm(self, scope):
        if self.accept("\\"):
            x = self.name()
            ann = self.mtype() if self.accept(":") else None
            self.expect(".")
            return Lam(x, self.mterm(scope | {x}), ann)
        if self.accept("let"):
            return self.let(scope)
        if self.accept("case"):
            scrut = self.mterm(scope)
            self.expect("of")
            self.expect("{")
            self.expect("left")
            x = self.name()
            self.expect("->")
            lb = self.mterm(scope | {x})
            self.expect(";")
            self.expect("right")
            y = self.name()
            self.expect("->")
            rb = self.mterm(scope | {y})
            self.accept(";")
            self.expect("}")
            return Case(scrut, x, lb, y, rb)
        if self.accept("match"):
            scrut = self.mterm(scope)
            self.expect("with")
            self.expect("{")
            self.expect("zero")
            self.expect("->")
            zb = self.mterm(scope)
            self.expect(";")
            self.expect("succ")
            x = self.name()
            self.expect("->")
            sb = self.mterm(scope | {x})
            self.accept(";")
            self.expect("}")
            return Match(scrut, zb, x, sb)
        return self.mpair(scope)

    def let(self, scope):
        if self.accept("B"):
            self.expect("(")
            x = self.name()
            if self.accept("(x)"):
                y = self.name()
                self.expect(")")
                self.expect("=")
                bound = self.mterm(scope)
                self.expect("in")
                return LetPairBang(x, y, bound, self.mterm(scope | {x, y}))
            self.expect(")")
            self.expect("=")
            bound = self.mterm(scope)
            self.expect("in")
            return LetBang(x, bound, self.mterm(scope | {x}))
        x = self.name()
        self.expect("(x)")
        y = self.name()
        self.expect("=")
        bound = self.mterm(scope)
        self.expect("in")
        return LetPair(x, y, bound, self.mterm(scope | {x, y}))

    def mpair(self, scope):
        left = self.mprefix(scope)
        if self.accept("(x)"):
            return MPair(left, self.mpair(scope))
        return left

    def mprefix(self, scope):
        for kw, make in (("inl", MInl), ("inr", MInr), ("succ", MSucc), ("lift", Lift), ("force", Force)):
            if self.accept(kw):
                return make(self.mprefix(scope))
        return self.mapp(scope)

    def starts_matom(self):
        tok = self.tok
        if tok.kind == "num":
            return tok.text.isdigit()
        if tok.kind == "op":
            return tok.text in ("*", "(")
        if tok.kind == "id":
            return tok.text in ("zero", "pure", "meas", "U") or tok.text not in KEYWORDS
        return False

    def mapp(self, scope):
        fn = self.matom(scope)
        while self.starts_matom():
            fn = App(fn, self.matom(scope))
        return fn

    def matom(self, scope):
        tok = self.tok
        if self.accept("*"):
            return MStar()
        if self.accept("zero"):
            return MZero()
        if tok.kind == "num" and tok.text.isdigit():
            self.i += 1
            return nat_literal(int(tok.text))
        if self.accept("pure"):
            if self.accept("("):
                t = self.pterm()
                self.expect(")")
            else:
                t = self.patom()
            return PureT(t)
        if self.accept("meas"):
            self.expect("(")
            m = self.mterm(scope)
            self.expect(")")
            return Meas(m)
        if self.accept("U"):
            self.expect("[")
            u = self.unitary()
            self.expect("]")
            self.expect("(")
            m = self.mterm(scope)
            self.expect(")")
            return UnApply(u, m)
        if self.accept("("):
            m = self.mterm(scope)
            self.expect(")")
            return m
        if tok.kind == "id" and tok.text not in KEYWORDS:
            self.i += 1
            if tok.text not in scope:
                value = self.ref(tok.text, "def", tok)
                if value is not None:
                    return value
            return MVar(tok.text)
        self.error("expected a term")

    def done(self):
        if self.tok.kind != "eof":
            self.error("unexpected trailing input")


def parse(src):
    p = Parser(src)
    return p.program()


def _env_of(program):
    return {d.name: (d.kind, d.value) for d in program.decls if d.name is not None}


def parse_pure_term(src, program=None):
    p = Parser(src, _env_of(program) if program else None)
    t = p.pterm()
    p.done()
    return t


def parse_unitary(src, program=None):
    p = Parser(src, _env_of(program) if program else None)
    u = p.unitary()
    p.done()
    return u


def parse_main_term(src, program=None):
    p = Parser(src, _env_of(program) if program else None)
    m = p.mterm(frozenset())
    p.done()
    return m


def parse_main_type(src):
    p = Parser(src)
    t = p.mtype()
    p.done()
    return t


def parse_pure_type(src):
    p = Parser(src)
    t = p.ptype()
    p.done()
    return t


# ---------------------------------------------------------------- exact printers


def show_scalar(a):
    a = complex(a)
    if a.imag == 0:
        return repr(a.real)
    return f"{a.real!r}+{a.imag!r}i"


def show_pure_type(q):
    if q == QBIT:
        return "qbit"
    if isinstance(q, Unit):
        return "I"
    if isinstance(q, QNat):
        return "qnat"
    op = "(+)" if isinstance(q, Sum) else "(x)"
    return f"({show_pure_type(q.left)} {op} {show_pure_type(q.right)})"


class _Printer:
    """Exact printer; ``names`` maps unitary and pure values back to declared names."""

    def __init__(self, names=None):
        self.names = names or {}

    def pure(self, t):
        if t in self.names:
            return self.names[t]
        if isinstance(t, Star):
            return "*"
        if isinstance(t, Zero):
            return "0"
        if isinstance(t, Var):
            return t.name
        if isinstance(t, Succ):
            n, base = 0, t
            while isinstance(base, Succ):
                base, n = base.term, n + 1
            if isinstance(base, Zero):
                return f"|{n}>"
            if isinstance(base, Var) and re.fullmatch(r"[A-Za-z_]\w*", base.name):
                return f"|{base.name}+{n}>"
            return f"S {self.pure(t.term)}"
        if isinstance(t, InjL):
            return f"inl {self.pure(t.term)}"
        if isinstance(t, InjR):
            return f"inr {self.pure(t.term)}"
        if isinstance(t, Pair):
            return f"({self.pure(t.left)} (x) {self.pure(t.right)})"
        if isinstance(t, Apply):
            return f"<{self.unitary(t.unitary)}> {self.pure(t.term)}"
        if isinstance(t, LinComb):
            parts = [f"[{show_scalar(a)}]*{self.pure(s)}" for a, s in t.entries]
            return "(" + " + ".join(parts) + ")"
        raise TypeError(f"not a pure term: {t!r}")

    def unitary(self, u):
        if u in self.names:
            return self.names[u]
        if isinstance(u, Clauses):
            body = " | ".join(f"{self.pure(p)} -> {self.pure(e)}" for p, e in u.clauses)
            return "{| " + body + " }"
        if isinstance(u, UTensor):
            return f"({self.unitary(u.left)} (x) {self.unitary(u.right)})"
        if isinstance(u, DirectSum):
            return f"({self.unitary(u.left)} (+) {self.unitary(u.right)})"
        if isinstance(u, Compose):
            return f"({self.unitary(u.second)} . {self.unitary(u.first)})"
        if isinstance(u, Adjoint):
            return f"adj {self.unitary(u.unitary)}"
        if isinstance(u, Ctrl):
            return f"ctrl {self.unitary(u.unitary)}"
        raise TypeError(f"not a unitary: {u!r}")

    def main(self, m):
        if isinstance(m, MStar):
            return "*"
        if isinstance(m, MZero):
            return "zero"
        if isinstance(m, MVar):
            return m.name
        if isinstance(m, MSucc):
            n, base = 0, m
            while isinstance(base, MSucc):
                base, n = base.term, n + 1
            if isinstance(base, MZero):
                return str(n)
        if isinstance(m, (MInl, MInr, MSucc, Lift, Force)):
            kw = {MInl: "inl", MInr: "inr", MSucc: "succ", Lift: "lift", Force: "force"}[type(m)]
            return f"{kw} {self.atom(m.term)}"
        if isinstance(m, MPair):
            return f"({self.main(m.left)} (x) {self.main(m.right)})"
        if isinstance(m, App):
            fn = self.main(m.fn)
            if isinstance(m.fn, (MInl, MInr, MSucc, Lift, Force)):
                fn = f"({fn})"
            return f"{fn} {self.atom(m.arg)}"
        if isinstance(m, Lam):
            ann = f" : {show_main_type(m.ann)}" if m.ann is not None else ""
            return f"(\\{m.name}{ann}. {self.main(m.body)})"
        if isinstance(m, Case):
            return (
                f"(case {self.main(m.scrut)} of {{left {m.lname} -> {self.main(m.lbody)}; "
                f"right {m.rname} -> {self.main(m.rbody)}}})"
            )
        if isinstance(m, Match):
            return (
                f"(match {self.main(m.scrut)} with {{zero -> {self.main(m.zbody)}; "
                f"succ {m.name} -> {self.main(m.sbody)}}})"
            )
        if isinstance(m, LetPair):
            return f"(let {m.x} (x) {m.y} = {self.main(m.bound)} in {self.main(m.body)})"
        if isinstance(m, LetBang):
            return f"(let B({m.name}) = {self.main(m.bound)} in {self.main(m.body)})"
        if isinstance(m, LetPairBang):
            return f"(let B({m.x} (x) {m.y}) = {self.main(m.bound)} in {self.main(m.body)})"
        if isinstance(m, PureT):
            return f"pure({self.pure(m.term)})"
        if isinstance(m, Meas):
            return f"meas({self.main(m.term)})"
        if isinstance(m, UnApply):
            return f"U[{self.unitary(m.unitary)}]({self.main(m.term)})"
        raise TypeError(f"not a main term: {m!r}")

    def atom(self, m):
        s = self.main(m)
        if isinstance(m, (MInl, MInr, Lift, Force, App)) or (isinstance(m, MSucc) and not s.isdigit()):
            return f"({s})"
        return s


def show_pure(t, names=None):
    return _Printer(names).pure(t)


def show_unitary(u, names=None):
    return _Printer(names).unitary(u)


def show_main(m, names=None):
    return _Printer(names).main(m)


def show_main_type(a):
    from .main_core import show_type

    return show_type(a)


def abbreviations(prog):
    """Value-to-name map for printing terms with declared names folded back in."""
    return {d.value: d.name for d in prog.decls if d.kind in ("unitary", "pure")}


def print_program(prog):
    lines = []
    for d in prog.decls:
        if d.kind == "unitary":
            lines.append(f"unitary {d.name} = {show_unitary(d.value)};")
        elif d.kind == "pure":
            lines.append(f"pure {d.name} = {show_pure(d.value)};")
        elif d.kind == "def":
            ann = f" : {show_main_type(d.annotation)}" if d.annotation is not None else ""
            lines.append(f"def {d.name}{ann} = {show_main(d.value)};")
        else:
            lines.append(f"run {show_main(d.value)};")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------- pretty values


def _fmt_real(x):
    s = f"{x:.4f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def show_amplitude(a):
    a = complex(a)
    if abs(a.imag) < 5e-5:
        return _fmt_real(a.real)
    if abs(a.real) < 5e-5:
        return f"{_fmt_real(a.imag)}i"
    sign = "+" if a.imag >= 0 else "-"
    return f"{_fmt_real(a.real)}{sign}{_fmt_real(abs(a.imag))}i"


def _leaf_label(b):
    if b == KET0:
        return "0"
    if b == KET1:
        return "1"
    if isinstance(b, Star):
        return "*"
    n = 0
    t = b
    while isinstance(t, Succ):
        t, n = t.term, n + 1
    if isinstance(t, Zero):
        return str(n)
    return show_pure(b)


def show_basis(b):
    leaves = []

    def flat(t):
        if isinstance(t, Pair):
            flat(t.left)
            flat(t.right)
        else:
            leaves.append(_leaf_label(t))

    flat(b)
    sep = "" if all(len(x) == 1 for x in leaves) else ","
    return "|" + sep.join(leaves) + ">"


def show_value(entries):
    """``[0.7071]*|00> + [0.7071]*|11>`` for a sequence of (amplitude, basis value)."""
    return " + ".join(f"[{show_amplitude(a)}]*{show_basis(b)}" for a, b in entries)
