"""High-precision evaluation of scalar fields at rational points."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from . import expr as E
from .scalar import Scalar

LOW, HIGH = Fraction(1, 2), Fraction(2)


class EvalError(ArithmeticError):
    """Evaluation hit a singular or out-of-branch value."""


class UnboundParameter(KeyError):
    def __init__(self, name):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"parameter {self.name!r} is not bound"


@dataclass(frozen=True)
class Point:
    coords: tuple
    precision: int = 64

    def __post_init__(self):
        cs = tuple(Fraction(c) for c in self.coords)
        if len(cs) != 3:
            raise ValueError("a Point has three coordinates")
        for c in cs:
            if not (LOW <= c <= HIGH):
                raise ValueError(f"coordinate {c} outside the sampling box [1/2, 2]")
        if self.precision < 32:
            raise ValueError("precision must be at least 32 digits")
        object.__setattr__(self, "coords", cs)

    def to_json(self):
        return [str(c) for c in self.coords]


def context(dps: int):
    ctx = mpmath.MPContext()
    ctx.dps = dps
    return ctx


def _num(ctx, s: Scalar):
    re = ctx.mpf(s.re.numerator) / s.re.denominator
    if not s.im:
        return re
    return ctx.mpc(re, ctx.mpf(s.im.numerator) / s.im.denominator)


def evaluate(e: E.Expr, p: Point, bindings=None, ctx=None):
    """Value of ``e`` at ``p``; parameters come from ``bindings`` (name -> Scalar)."""
    ctx = ctx or context(p.precision + 10)
    bindings = bindings or {}
    x = [ctx.mpf(c.numerator) / c.denominator for c in p.coords]
    rt2 = x[0] ** 2 + x[1] ** 2
    geom = {
        "r": ctx.sqrt(rt2 + x[2] ** 2),
        "rt": ctx.sqrt(rt2),
        "phi": ctx.atan2(x[1], x[0]),
    }
    geom["theta"] = ctx.atan2(geom["rt"], x[2])
    memo: dict = {}

    def go(n):
        key = id(n)
        if key in memo:
            return memo[key]
        if isinstance(n, E.Const):
            v = _num(ctx, n.value)
        elif isinstance(n, E.Coord):
            v = x[n.axis - 1]
        elif isinstance(n, E.Geom):
            v = geom[n.name]
        elif isinstance(n, E.Param):
            if n.name not in bindings:
                raise UnboundParameter(n.name)
            v = _num(ctx, Scalar.coerce(bindings[n.name]))
        elif isinstance(n, E.Sum):
            v = ctx.fsum(go(t) for t in n.terms)
        elif isinstance(n, E.Product):
            v = ctx.mpf(1)
            for f in n.factors:
                v = v * go(f)
        elif isinstance(n, E.IntPower):
            b = go(n.base)
            if n.exponent < 0 and b == 0:
                raise EvalError("division by zero")
            v = b ** n.exponent
        elif isinstance(n, E.Apply):
            a = go(n.arg)
            v = _apply(ctx, n.fn, a)
        else:
            raise TypeError(type(n).__name__)
        memo[key] = v
        return v

    return go(e)


def _apply(ctx, fn, a):
    if fn == "sin":
        return ctx.sin(a)
    if fn == "cos":
        return ctx.cos(a)
    if fn == "exp":
        return ctx.exp(a)
    if fn in ("ln", "sqrt"):
        if ctx.im(a) == 0 and ctx.re(a) <= 0 and not (fn == "sqrt" and a == 0):
            raise EvalError(f"{fn} of a non-positive value")
        return ctx.log(a) if fn == "ln" else ctx.sqrt(a)
    raise ValueError(fn)


def random_point(rng: random.Random, precision: int = 64) -> Point:
    # dyadic rationals with denominator 1024 inside [1/2, 2]
    return Point(tuple(Fraction(rng.randint(512, 2048), 1024) for _ in range(3)), precision)


def random_param(rng: random.Random) -> Fraction:
    """Nonzero rational in [-3, 3] with denominator at most 64."""
    while True:
        v = Fraction(rng.randint(-192, 192), 64)
        if v:
            return v


def exact_value(e: E.Expr, coords, bindings=None) -> Scalar:
    """Exact value of a rational Expr (no r, rt, angles or functions) at rational coordinates."""
    bindings = bindings or {}
    xs = [Scalar.coerce(Fraction(c)) for c in coords]
    memo: dict = {}

    def go(n):
        key = id(n)
        if key in memo:
            return memo[key]
        if isinstance(n, E.Const):
            v = n.value
        elif isinstance(n, E.Coord):
            v = xs[n.axis - 1]
        elif isinstance(n, E.Param):
            if n.name not in bindings:
                raise UnboundParameter(n.name)
            v = Scalar.coerce(bindings[n.name])
        elif isinstance(n, E.Sum):
            v = Scalar(0)
            for t in n.terms:
                v = v + go(t)
        elif isinstance(n, E.Product):
            v = Scalar(1)
            for f in n.factors:
                v = v * go(f)
        elif isinstance(n, E.IntPower):
            b = go(n.base)
            if n.exponent < 0 and b.is_zero():
                raise EvalError("division by zero")
            v = b ** n.exponent
        else:
            raise TypeError(f"{type(n).__name__} has no exact rational value")
        memo[key] = v
        return v

    return go(e)
