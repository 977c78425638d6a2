"""Text grammar for scalar fields and generator expressions.

Scalar grammar::

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := '-' unary | factor
    factor := atom ['^' exponent]          (right-associative)
    atom   := number | 'i' | ident | fn '(' expr ')' | '(' expr ')'

Numbers are decimal integers; ``p/q`` is ordinary division of constants.
In operator mode the tokens ``P1..P3 K1..K3 L1..L3 D`` are generators and
``{A,B}`` is the anticommutator AB + BA.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import expr as E
from .genexpr import GENERATOR_NAMES, Anti, Gen, GenExpr, OpPow, OpProd, OpSum, Scal
from .scalar import Scalar

RESERVED = {"x1", "x2", "x3", "r", "rt", "phi", "theta", "i"} | set(E.FUNCTIONS)

_TOKEN_RE = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>[-+*/^(){},]))")


@dataclass(frozen=True)
class ParseDiagnostic:
    offset: int
    expected: frozenset
    message: str

    def __str__(self):
        exp = ", ".join(sorted(self.expected))
        tail = f" (expected one of: {exp})" if exp else ""
        return f"offset {self.offset}: {self.message}{tail}"


class ParseError(ValueError):
    def __init__(self, diagnostics: list, source: str = ""):
        self.diagnostics = diagnostics
        self.source = source
        super().__init__("; ".join(str(d) for d in diagnostics))


@dataclass
class _Tok:
    kind: str  # num, id, sym, eof
    text: str
    offset: int  # byte offset


def _byte_offset(src: str, i: int) -> int:
    return len(src[:i].encode("utf-8"))


def _tokenize(src: str) -> list:
    toks = []
    pos = 0
    n = len(src)
    while True:
        while pos < n and src[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN_RE.match(src, pos)
        if not m or m.end() == pos:
            raise ParseError([ParseDiagnostic(_byte_offset(src, pos), frozenset(),
                                              f"unexpected character {src[pos]!r}")], src)
        kind = m.lastgroup
        text = m.group(kind)
        start = m.start(kind)
        if kind == "num" and "." in text:
            raise ParseError([ParseDiagnostic(_byte_offset(src, start), frozenset({"integer"}),
                                              "floating-point literals are not supported; write p/q")], src)
        toks.append(_Tok(kind, text, _byte_offset(src, start)))
        pos = m.end()
    toks.append(_Tok("eof", "", len(src.encode("utf-8"))))
    return toks


_ATOM_START = frozenset({"number", "identifier", "(", "-"})


class _Parser:
    def __init__(self, src: str, operators: bool, aliases: dict | None):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0
        self.operators = operators
        self.aliases = aliases or {}

    # -- helpers ---------------------------------------------------------------
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, expected, message=None, tok=None):
        tok = tok or self.tok
        if message is None:
            what = "end of input" if tok.kind == "eof" else repr(tok.text)
            message = f"unexpected {what}"
        raise ParseError([ParseDiagnostic(tok.offset, frozenset(expected), message)], self.src)

    def accept(self, sym: str) -> bool:
        if self.tok.kind == "sym" and self.tok.text == sym:
            self.i += 1
            return True
        return False

    def expect(self, sym: str):
        if not self.accept(sym):
            self.fail({sym})

    def atom_start(self):
        s = set(_ATOM_START)
        if self.operators:
            s |= {"{", "generator"}
        return s

    # -- grammar ---------------------------------------------------------------
    def parse(self):
        v = self.expr()
        if self.tok.kind != "eof":
            self.fail({"+", "-", "*", "/", "^", "end of input"})
        return v

    def expr(self):
        v = self.term()
        while self.tok.kind == "sym" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            rhs = self.term()
            v = _add(v, rhs if op == "+" else _neg(rhs))
        return v

    def term(self):
        v = self.unary()
        while self.tok.kind == "sym" and self.tok.text in "*/":
            op = self.tok.text
            op_tok = self.tok
            self.i += 1
            rhs = self.unary()
            if op == "*":
                v = _mul(v, rhs)
            else:
                if isinstance(rhs, GenExpr):
                    self.fail(set(), "cannot divide by an operator", op_tok)
                try:
                    v = _mul(v, E.power(rhs, -1))
                except ZeroDivisionError:
                    self.fail(set(), "division by zero", op_tok)
        return v

    def unary(self):
        if self.accept("-"):
            return _neg(self.unary())
        return self.factor()

    def factor(self):
        base = self.atom()
        if self.tok.kind == "sym" and self.tok.text == "^":
            self.i += 1
            exp_tok = self.tok
            ex = self.unary()
            if isinstance(ex, GenExpr) or not isinstance(ex, E.Const) or not ex.value.is_integer():
                raise ParseError([ParseDiagnostic(exp_tok.offset, frozenset({"integer"}),
                                                  "exponent must be an integer constant")], self.src)
            n = int(ex.value.re)
            if isinstance(base, GenExpr):
                if n < 0:
                    self.fail({"integer"}, "operator powers must be non-negative", exp_tok)
                return OpPow(base, n)
            try:
                return E.power(base, n)
            except ZeroDivisionError:
                self.fail(set(), "zero raised to a negative power", exp_tok)
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return E.const(int(tok.text))
        if tok.kind == "id":
            self.i += 1
            name = self.aliases.get(tok.text, tok.text)
            if self.operators and name in GENERATOR_NAMES:
                return Gen(name)
            if name in E.FUNCTIONS:
                if not self.accept("("):
                    self.fail({"("}, f"function {name} needs a parenthesized argument")
                arg = self.expr()
                self.expect(")")
                if isinstance(arg, GenExpr):
                    self.fail(set(), f"{name} of an operator is not defined", tok)
                try:
                    return E.apply(name, arg)
                except ValueError as exc:
                    self.fail(set(), str(exc), tok)
            if name == "i":
                return E.IMAG
            if name in ("x1", "x2", "x3"):
                return E.coord(int(name[1]))
            if name in E.GEOM_NAMES:
                return E.Geom(name)
            if self.operators and re.fullmatch(r"[PKLJ]\d+", name):
                self.fail({"generator"}, f"unknown generator {name!r}", tok)
            return E.Param(name)
        if tok.kind == "sym":
            if tok.text == "(":
                self.i += 1
                v = self.expr()
                self.expect(")")
                return v
            if tok.text == "{" and self.operators:
                self.i += 1
                a = self.expr()
                self.expect(",")
                b = self.expr()
                self.expect("}")
                return Anti(_as_op(a), _as_op(b))
            if tok.text == "-":
                return self.unary()
        self.fail(self.atom_start())


def _as_op(v) -> GenExpr:
    return v if isinstance(v, GenExpr) else Scal(v)


def _add(a, b):
    if isinstance(a, E.Expr) and isinstance(b, E.Expr):
        return E.add(a, b)
    ta = a.terms if isinstance(a, OpSum) else (_as_op(a),)
    tb = b.terms if isinstance(b, OpSum) else (_as_op(b),)
    return OpSum(ta + tb)


def _neg(a):
    if isinstance(a, E.Expr):
        return E.neg(a)
    if isinstance(a, OpSum):
        return OpSum(tuple(_neg(t) for t in a.terms))
    if isinstance(a, Scal):
        return Scal(E.neg(a.expr))
    if isinstance(a, OpProd) and isinstance(a.factors[0], Scal):
        return _mul(Scal(E.neg(a.factors[0].expr)), _prod_rest(a))
    return OpProd((Scal(E.const(-1)), a))


def _prod_rest(p: OpProd):
    rest = p.factors[1:]
    return rest[0] if len(rest) == 1 else OpProd(rest)


def _mul(a, b):
    if isinstance(a, E.Expr) and isinstance(b, E.Expr):
        return E.mul(a, b)
    fa = a.factors if isinstance(a, OpProd) else (_as_op(a),)
    fb = b.factors if isinstance(b, OpProd) else (_as_op(b),)
    fs = list(fa + fb)
    # merge adjacent leading scalars into one coefficient
    if len(fs) >= 2 and isinstance(fs[0], Scal) and isinstance(fs[1], Scal):
        fs[0:2] = [Scal(E.mul(fs[0].expr, fs[1].expr))]
    return fs[0] if len(fs) == 1 else OpProd(tuple(fs))


def parse_expr(src: str) -> E.Expr:
    """Parse a scalar field."""
    return _Parser(src, operators=False, aliases=None).parse()


def parse_operator(src: str, aliases: dict | None = None) -> GenExpr:
    """Parse a generator expression; a bare scalar becomes a ``Scal`` node."""
    return _as_op(_Parser(src, operators=True, aliases=aliases).parse())


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _q(f) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def _const_str(c: Scalar) -> str:
    if c.is_real():
        return _q(c.re)
    im = c.im
    if im == 1:
        it = "i"
    elif im == -1:
        it = "-i"
    else:
        it = f"{_q(im)}*i"
    if not c.re:
        return it
    sign = " - " if im < 0 else " + "
    mag = it[1:] if it.startswith("-") else it
    return f"{_q(c.re)}{sign}{mag}"


# precedence of the rendered top operator: 1 sum, 2 product, 3 unary minus,
# 4 power, 5 atom
def _ser(e: E.Expr) -> tuple:
    if isinstance(e, E.Const):
        c = e.value
        s = _const_str(c)
        if not c.is_real() and c.re:
            return s, 1
        if s.startswith("-"):
            return s, 3
        return s, (2 if ("/" in s or "*" in s) else 5)
    if isinstance(e, E.Coord):
        return f"x{e.axis}", 5
    if isinstance(e, (E.Geom, E.Param)):
        return e.name, 5
    if isinstance(e, E.Apply):
        return f"{e.fn}({_ser(e.arg)[0]})", 5
    if isinstance(e, E.IntPower):
        if e.exponent < 0:
            return _quotient(Scalar(1), [], [E.power(e.base, -e.exponent)])
        b, p = _ser(e.base)
        return f"{b if p >= 5 else '(' + b + ')'}^{e.exponent}", 4
    if isinstance(e, E.Product):
        coeff = Scalar(1)
        num, den = [], []
        for f in e.factors:
            if isinstance(f, E.Const):
                coeff = f.value
            elif isinstance(f, E.IntPower) and f.exponent < 0:
                den.append(E.power(f.base, -f.exponent))
            else:
                num.append(f)
        return _quotient(coeff, num, den)
    if isinstance(e, E.Sum):
        parts = []
        rendered = sorted((_ser(t) for t in e.terms), key=_term_order)
        for k, (s, p) in enumerate(rendered):
            if k == 0:
                parts.append(s)
            elif s.startswith("-") and p >= 3:
                parts.append(" - " + s[1:])
            else:
                parts.append(" + " + s)
        return "".join(parts), 1
    raise TypeError(type(e).__name__)


def _term_order(sp):
    s = sp[0].lstrip("-")
    # constants first, then by the text of the coefficient-free part
    head = s.split("*", 1)
    numeric = head[0].replace("/", "").isdigit()
    rest = head[1] if numeric and len(head) > 1 else s
    return (not (numeric and len(head) == 1), rest, sp[0])


def _quotient(coeff: Scalar, num: list, den: list) -> tuple:
    negative = coeff.is_real() and coeff.re < 0
    if negative:
        coeff = -coeff
    parts = []
    precs = []
    if not coeff.is_one() or not num:
        s, p = _ser(E.Const(coeff))
        parts.append(s if p >= 2 else f"({s})")
        precs.append(p)
    for s, p in sorted((_ser(f) for f in num), key=lambda sp: (sp[1] < 3, sp[0])):
        parts.append(s if p >= 3 else f"({s})")
        precs.append(p)
    text = "*".join(parts)
    if den:
        rendered = []
        for d in den:
            s, p = _ser(d)
            rendered.append((s, p))
        if len(rendered) == 1:
            s, p = rendered[0]
            text += "/" + (s if p >= 4 else f"({s})")
        else:
            text += "/(" + "*".join(s if p >= 3 else f"({s})" for s, p in rendered) + ")"
    if negative or text.startswith("-"):
        return ("-" + text if negative else text), 3
    if den or len(parts) > 1:
        return text, 2
    return text, max(precs[0], 2) if precs[0] < 5 else 5


def serialize(e: E.Expr) -> str:
    """Render ``e`` in the textual grammar; ``parse_expr`` inverts this."""
    return _ser(e)[0]


def serialize_operator(g: GenExpr) -> str:
    return _sop(g)[0]


def _sop(g: GenExpr):
    if isinstance(g, Gen):
        return g.name, 5
    if isinstance(g, Scal):
        return _ser(g.expr)
    if isinstance(g, Anti):
        return "{" + _sop(g.left)[0] + "," + _sop(g.right)[0] + "}", 5
    if isinstance(g, OpPow):
        b, p = _sop(g.base)
        return (b if p >= 5 else f"({b})") + f"^{g.exponent}", 4
    if isinstance(g, OpProd):
        parts = []
        negative = False
        for k, f in enumerate(g.factors):
            s, p = _sop(f)
            if k == 0 and isinstance(f, Scal) and s.startswith("-") and p >= 2:
                negative, s = True, s[1:]
                if s == "1":
                    continue
            parts.append(s if p >= 2 and not s.startswith("-") else f"({s})")
        text = "*".join(parts)
        return ("-" + text, 3) if negative else (text, 2)
    if isinstance(g, OpSum):
        parts = []
        for k, t in enumerate(g.terms):
            s, p = _sop(t)
            if k and s.startswith("-"):
                parts.append(" - " + s[1:])
            elif k:
                parts.append(" + " + s)
            else:
                parts.append(s)
        return "".join(parts), 1
    raise TypeError(type(g).__name__)
