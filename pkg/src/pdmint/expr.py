"""Immutable symbolic scalar fields on the positive octant of R^3.

Node kinds: constants (Gaussian rationals), the Cartesian coordinates
``x1, x2, x3``, the geometric atoms ``r, rt, phi, theta``, named parameters,
sums, products, integer powers and the elementary functions
``sin, cos, exp, ln, sqrt``.

Construction goes through the smart constructors :func:`add`, :func:`mul`,
:func:`power` and :func:`apply`, which flatten, fold constants, collect like
terms/powers and rewrite even powers of ``r`` and ``rt`` into polynomials.
Two expressions built from the same terms in any order are structurally
equal.  All hashes are deterministic across interpreter runs.
"""

from __future__ import annotations

import zlib
from functools import lru_cache
from typing import Callable, Iterable, Mapping

from .scalar import Scalar

__all__ = [
    "Expr", "Const", "Coord", "Geom", "Param", "Sum", "Product", "IntPower", "Apply",
    "const", "add", "mul", "power", "apply", "neg", "sub", "div", "diff",
    "X1", "X2", "X3", "COORDS", "R", "RT", "PHI", "THETA", "R2", "RT2", "ZERO", "ONE", "IMAG",
    "sin", "cos", "exp", "ln", "sqrt", "param", "coord",
    "params_of", "is_rational", "is_algebraic", "substitute", "subs_params", "scale_coords",
    "gradient", "walk", "count_nodes",
]

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")
GEOM_NAMES = ("r", "rt", "phi", "theta")


def _crc(s: str) -> int:
    return zlib.crc32(s.encode("utf-8"))


class Expr:
    __slots__ = ("_h", "_k")
    _rank = 99

    # -- structural protocol ------------------------------------------------
    def children(self) -> tuple:
        return ()

    def sort_key(self):
        """Structural key: equal keys mean equal trees (hashes may collide)."""
        try:
            return self._k
        except AttributeError:
            self._k = self._key()
            return self._k

    def _key(self):
        return (self._rank, tuple(c.sort_key() for c in self.children()))

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr) or self._h != other._h or type(self) is not type(other):
            return False
        return self._same(other)

    def __ne__(self, other):
        return not self.__eq__(other)

    def _same(self, other) -> bool:  # pragma: no cover - overridden
        raise NotImplementedError

    # -- arithmetic sugar -----------------------------------------------------
    def __add__(self, other):
        return add(self, _e(other))

    def __radd__(self, other):
        return add(_e(other), self)

    def __sub__(self, other):
        return add(self, neg(_e(other)))

    def __rsub__(self, other):
        return add(_e(other), neg(self))

    def __mul__(self, other):
        return mul(self, _e(other))

    def __rmul__(self, other):
        return mul(_e(other), self)

    def __truediv__(self, other):
        return div(self, _e(other))

    def __rtruediv__(self, other):
        return div(_e(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return power(self, n)

    def __repr__(self):
        from .exprlang import serialize
        return f"Expr({serialize(self)!r})"

    def __str__(self):
        from .exprlang import serialize
        return serialize(self)


class Const(Expr):
    __slots__ = ("value",)
    _rank = 0

    def __init__(self, value: Scalar):
        self.value = value
        self._h = hash((0, hash(value)))

    def _same(self, other):
        return self.value == other.value

    def _key(self):
        return (0, str(self.value))

    def __reduce__(self):
        return (Const, (self.value,))


class Coord(Expr):
    __slots__ = ("axis",)
    _rank = 1

    def __init__(self, axis: int):
        if axis not in (1, 2, 3):
            raise ValueError(f"coordinate axis must be 1, 2 or 3, got {axis}")
        self.axis = axis
        self._h = hash((1, axis))

    def _same(self, other):
        return self.axis == other.axis

    def _key(self):
        return (1, self.axis)

    def __reduce__(self):
        return (Coord, (self.axis,))


class Geom(Expr):
    __slots__ = ("name",)
    _rank = 2

    def __init__(self, name: str):
        if name not in GEOM_NAMES:
            raise ValueError(f"unknown geometric atom {name!r}")
        self.name = name
        self._h = hash((2, _crc(name)))

    def _same(self, other):
        return self.name == other.name

    def _key(self):
        return (2, GEOM_NAMES.index(self.name))

    def __reduce__(self):
        return (Geom, (self.name,))


class Param(Expr):
    __slots__ = ("name",)
    _rank = 3

    def __init__(self, name: str):
        self.name = name
        self._h = hash((3, _crc(name)))

    def _same(self, other):
        return self.name == other.name

    def _key(self):
        return (3, self.name)

    def __reduce__(self):
        return (Param, (self.name,))


class Sum(Expr):
    __slots__ = ("terms",)
    _rank = 6

    def __init__(self, terms: tuple):
        self.terms = terms
        self._h = hash((6,) + tuple(t._h for t in terms))

    def children(self):
        return self.terms

    def _same(self, other):
        return self.terms == other.terms

    def __reduce__(self):
        return (Sum, (self.terms,))


class Product(Expr):
    __slots__ = ("factors",)
    _rank = 5

    def __init__(self, factors: tuple):
        self.factors = factors
        self._h = hash((5,) + tuple(f._h for f in factors))

    def children(self):
        return self.factors

    def _same(self, other):
        return self.factors == other.factors

    def __reduce__(self):
        return (Product, (self.factors,))


class IntPower(Expr):
    __slots__ = ("base", "exponent")
    _rank = 4

    def __init__(self, base: Expr, exponent: int):
        self.base = base
        self.exponent = exponent
        self._h = hash((4, base._h, exponent))

    def children(self):
        return (self.base,)

    def _same(self, other):
        return self.exponent == other.exponent and self.base == other.base

    def _key(self):
        return (4, self.base.sort_key(), self.exponent)

    def __reduce__(self):
        return (IntPower, (self.base, self.exponent))


class Apply(Expr):
    __slots__ = ("fn", "arg")
    _rank = 7

    def __init__(self, fn: str, arg: Expr):
        if fn not in FUNCTIONS:
            raise ValueError(f"unknown function {fn!r}")
        self.fn = fn
        self.arg = arg
        self._h = hash((7, _crc(fn), arg._h))

    def children(self):
        return (self.arg,)

    def _same(self, other):
        return self.fn == other.fn and self.arg == other.arg

    def _key(self):
        return (7, self.fn, self.arg.sort_key())

    def __reduce__(self):
        return (Apply, (self.fn, self.arg))


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def const(v) -> Const:
    return Const(Scalar.coerce(v))


def _e(v) -> Expr:
    if isinstance(v, Expr):
        return v
    return const(v)


ZERO = const(0)
ONE = const(1)
IMAG = Const(Scalar(0, 1))
X1, X2, X3 = Coord(1), Coord(2), Coord(3)
COORDS = (X1, X2, X3)
R, RT, PHI, THETA = Geom("r"), Geom("rt"), Geom("phi"), Geom("theta")


def coord(axis: int) -> Coord:
    return COORDS[axis - 1]


def param(name: str) -> Param:
    return Param(name)


def _split_coeff(t: Expr):
    """Return (scalar coefficient, coefficient-free rest) of a term."""
    if isinstance(t, Product) and isinstance(t.factors[0], Const):
        rest = t.factors[1:]
        return t.factors[0].value, (rest[0] if len(rest) == 1 else Product(rest))
    return Scalar(1), t


def add(*args) -> Expr:
    coeffs: dict = {}
    order: list = []
    total = Scalar(0)
    stack = list(args)
    stack.reverse()
    while stack:
        t = _e(stack.pop())
        if isinstance(t, Sum):
            stack.extend(reversed(t.terms))
            continue
        if isinstance(t, Const):
            total = total + t.value
            continue
        c, rest = _split_coeff(t)
        if rest in coeffs:
            coeffs[rest] = coeffs[rest] + c
        else:
            coeffs[rest] = c
            order.append(rest)
    terms = []
    for rest in order:
        c = coeffs[rest]
        if c.is_zero():
            continue
        if c.is_one():
            terms.append(rest)
        elif isinstance(rest, Product):
            terms.append(Product((Const(c),) + rest.factors))
        else:
            terms.append(Product((Const(c), rest)))
    terms.sort(key=lambda t: _split_coeff(t)[1].sort_key())
    if not total.is_zero():
        terms.insert(0, Const(total))
    if not terms:
        return Const(Scalar(0))
    if len(terms) == 1:
        return terms[0]
    return Sum(tuple(terms))


def _is_r2(e: Expr, which: Expr) -> bool:
    return e == (R2 if which is R else RT2)


def mul(*args) -> Expr:
    coeff = Scalar(1)
    exps: dict = {}
    order: list = []
    stack = [(_e(a), 1) for a in reversed(args)]
    while stack:
        f, n = stack.pop()
        if isinstance(f, Product):
            stack.extend((g, n) for g in reversed(f.factors))
            continue
        if isinstance(f, IntPower):
            stack.append((f.base, f.exponent * n))
            continue
        if isinstance(f, Const):
            if f.value.is_zero():
                if n < 0:
                    raise ZeroDivisionError("division by the zero expression")
                return Const(Scalar(0))
            coeff = coeff * f.value ** n
            continue
        if f in exps:
            exps[f] += n
        else:
            exps[f] = n
            order.append(f)
    # sqrt(u)^k with |k| >= 2 pulls out integer powers of u
    changed = True
    while changed:
        changed = False
        for f in list(order):
            k = exps.get(f, 0)
            if isinstance(f, Apply) and f.fn == "sqrt" and (k >= 2 or k <= -2):
                exps[f] = k % 2
                extra = k // 2
                inner = f.arg
                sub_c, sub = (inner.value, None) if isinstance(inner, Const) else (None, inner)
                if sub_c is not None:
                    coeff = coeff * sub_c ** extra
                else:
                    for g, m in _power_items(sub):
                        if g in exps:
                            exps[g] += m * extra
                        else:
                            exps[g] = m * extra
                            order.append(g)
                changed = True
    # geometric squares: r^2 = x1^2+x2^2+x3^2, rt^2 = x1^2+x2^2
    for atom, poly in ((R, R2), (RT, RT2)):
        if atom in exps:
            t = exps[atom] + 2 * exps.get(poly, 0)
            exps[atom] = t % 2
            q = t // 2
            if q:
                if poly not in exps:
                    order.append(poly)
                exps[poly] = q
            elif poly in exps:
                exps[poly] = 0
    factors = []
    for f in order:
        n = exps[f]
        if n == 0:
            continue
        factors.append(f if n == 1 else IntPower(f, n))
    factors.sort(key=lambda g: (g.base if isinstance(g, IntPower) else g).sort_key())
    if not factors:
        return Const(coeff)
    if coeff.is_one():
        return factors[0] if len(factors) == 1 else Product(tuple(factors))
    return Product((Const(coeff),) + tuple(factors))


def _power_items(e: Expr):
    if isinstance(e, Product):
        out = []
        for f in e.factors:
            out.extend(_power_items(f))
        return out
    if isinstance(e, IntPower):
        return [(g, m * e.exponent) for g, m in _power_items(e.base)] if isinstance(e.base, Product) \
            else [(e.base, e.exponent)]
    return [(e, 1)]


def power(base, n: int) -> Expr:
    if not isinstance(n, int):
        raise TypeError("only integer exponents are supported")
    base = _e(base)
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Const):
        return Const(base.value ** n)
    return mul(IntPower(base, n)) if not isinstance(base, (Product, IntPower)) else _power_compound(base, n)


def _power_compound(base, n):
    if isinstance(base, IntPower):
        return power(base.base, base.exponent * n)
    return mul(*[power(f, n) for f in base.factors])


def neg(e) -> Expr:
    return mul(Const(Scalar(-1)), _e(e))


def sub(a, b) -> Expr:
    return add(_e(a), neg(_e(b)))


def div(a, b) -> Expr:
    return mul(_e(a), power(_e(b), -1))


def _exact_sqrt(q: Scalar):
    if not q.is_real() or q.re < 0:
        return None
    from math import isqrt
    n, d = q.re.numerator, q.re.denominator
    sn, sd = isqrt(n), isqrt(d)
    if sn * sn == n and sd * sd == d:
        return Scalar(sn) / Scalar(sd)
    return None


def apply(fn: str, arg) -> Expr:
    arg = _e(arg)
    if fn not in FUNCTIONS:
        raise ValueError(f"unknown function {fn!r}")
    if isinstance(arg, Const):
        v = arg.value
        if v.is_zero():
            if fn in ("sin", "sqrt"):
                return ZERO
            if fn in ("cos", "exp"):
                return ONE
            raise ValueError("ln(0) is undefined")
        if fn == "ln" and v.is_one():
            return ZERO
        if fn == "sqrt":
            s = _exact_sqrt(v)
            if s is not None:
                return Const(s)
    if fn == "ln" and isinstance(arg, Apply) and arg.fn == "exp":
        return arg.arg
    if fn == "exp" and isinstance(arg, Apply) and arg.fn == "ln":
        return arg.arg
    return Apply(fn, arg)


def sin(u) -> Expr:
    return apply("sin", u)


def cos(u) -> Expr:
    return apply("cos", u)


def exp(u) -> Expr:
    return apply("exp", u)


def ln(u) -> Expr:
    return apply("ln", u)


def sqrt(u) -> Expr:
    return apply("sqrt", u)


R2 = add(IntPower(X1, 2), IntPower(X2, 2), IntPower(X3, 2))
RT2 = add(IntPower(X1, 2), IntPower(X2, 2))


# ---------------------------------------------------------------------------
# traversal
# ---------------------------------------------------------------------------

def walk(e: Expr) -> Iterable[Expr]:
    """Pre-order traversal visiting each distinct subtree once."""
    seen = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        stack.extend(node.children())


def count_nodes(e: Expr) -> int:
    return sum(1 for _ in walk(e))


@lru_cache(maxsize=65536)
def params_of(e: Expr) -> frozenset:
    if isinstance(e, Param):
        return frozenset((e.name,))
    out = frozenset()
    for c in e.children():
        out |= params_of(c)
    return out


@lru_cache(maxsize=65536)
def _flags(e: Expr):
    """(has_geom, has_odd_geom_or_angle, has_apply)."""
    if isinstance(e, Geom):
        return (True, True, False)
    if isinstance(e, Apply):
        return (True, True, True)
    g = a = ap = False
    for c in e.children():
        cg, ca, cap = _flags(c)
        g, a, ap = g or cg, a or ca, ap or cap
    return (g, a, ap)


def is_rational(e: Expr) -> bool:
    """True when ``e`` has no geometric atom and no elementary function."""
    return not _flags(e)[0]


def is_algebraic(e: Expr) -> bool:
    """True when ``e`` is rational in x, parameters, ``r`` and ``rt`` only."""
    for node in walk(e):
        if isinstance(node, Apply):
            return False
        if isinstance(node, Geom) and node.name in ("phi", "theta"):
            return False
    return True


# ---------------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------------

def _geom_grad(name: str, axis: int) -> Expr:
    x = COORDS
    if name == "r":
        return div(x[axis - 1], R)
    if name == "rt":
        return ZERO if axis == 3 else div(x[axis - 1], RT)
    if name == "phi":
        if axis == 3:
            return ZERO
        return div(neg(X2), RT2) if axis == 1 else div(X1, RT2)
    if name == "theta":
        if axis == 3:
            return neg(div(RT, R2))
        return mul(x[axis - 1], X3, power(R2, -1), power(RT, -1))
    raise ValueError(name)


@lru_cache(maxsize=262144)
def diff(e: Expr, axis: int) -> Expr:
    """Partial derivative of ``e`` with respect to ``x_axis``."""
    if isinstance(e, (Const, Param)):
        return ZERO
    if isinstance(e, Coord):
        return ONE if e.axis == axis else ZERO
    if isinstance(e, Geom):
        return _geom_grad(e.name, axis)
    if isinstance(e, Sum):
        return add(*[diff(t, axis) for t in e.terms])
    if isinstance(e, Product):
        fs = e.factors
        terms = []
        for i, f in enumerate(fs):
            df = diff(f, axis)
            if isinstance(df, Const) and df.value.is_zero():
                continue
            terms.append(mul(*fs[:i], df, *fs[i + 1:]))
        return add(*terms)
    if isinstance(e, IntPower):
        db = diff(e.base, axis)
        if isinstance(db, Const) and db.value.is_zero():
            return ZERO
        return mul(const(e.exponent), power(e.base, e.exponent - 1), db)
    if isinstance(e, Apply):
        du = diff(e.arg, axis)
        if isinstance(du, Const) and du.value.is_zero():
            return ZERO
        u = e.arg
        if e.fn == "sin":
            return mul(cos(u), du)
        if e.fn == "cos":
            return neg(mul(sin(u), du))
        if e.fn == "exp":
            return mul(e, du)
        if e.fn == "ln":
            return div(du, u)
        if e.fn == "sqrt":
            return div(du, mul(const(2), e))
    raise TypeError(f"cannot differentiate {type(e).__name__}")


def gradient(e: Expr) -> tuple:
    return tuple(diff(e, a) for a in (1, 2, 3))


# ---------------------------------------------------------------------------
# substitution
# ---------------------------------------------------------------------------

def substitute(e: Expr, leaf: Callable[[Expr], Expr | None]) -> Expr:
    """Rebuild ``e`` bottom-up; ``leaf`` may replace any atom (or return None)."""
    memo: dict = {}

    def go(node: Expr) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Sum):
            out = add(*[go(t) for t in node.terms])
        elif isinstance(node, Product):
            out = mul(*[go(f) for f in node.factors])
        elif isinstance(node, IntPower):
            out = power(go(node.base), node.exponent)
        elif isinstance(node, Apply):
            out = apply(node.fn, go(node.arg))
        else:
            rep = leaf(node)
            out = node if rep is None else rep
        memo[key] = out
        return out

    return go(e)


def subs_params(e: Expr, values: Mapping[str, object]) -> Expr:
    vals = {k: _e(v) for k, v in values.items()}
    if not vals or not (params_of(e) & vals.keys()):
        return e
    return substitute(e, lambda n: vals.get(n.name) if isinstance(n, Param) else None)


def scale_coords(e: Expr, factor) -> Expr:
    """Substitute x -> factor*x (factor a positive rational)."""
    lam = _e(factor)
    if not isinstance(lam, Const) or not lam.value.is_real() or lam.value.re <= 0:
        raise ValueError("scale factor must be a positive rational")

    def leaf(n):
        if isinstance(n, Coord):
            return mul(lam, n)
        if isinstance(n, Geom) and n.name in ("r", "rt"):
            return mul(lam, n)
        return None

    return substitute(e, leaf)
