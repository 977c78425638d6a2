"""Syntax trees over the conformal generators P_a, K_a, L_a, D."""

from __future__ import annotations

from dataclasses import dataclass

from .expr import Expr

GENERATOR_NAMES = ("P1", "P2", "P3", "K1", "K2", "K3", "L1", "L2", "L3", "D")


class GenExpr:
    """Base class; nodes are frozen dataclasses so equality is structural."""

    def order(self) -> int:
        raise NotImplementedError

    def __str__(self):
        from .exprlang import serialize_operator
        return serialize_operator(self)


@dataclass(frozen=True)
class Gen(GenExpr):
    name: str  # one of GENERATOR_NAMES

    def __post_init__(self):
        if self.name not in GENERATOR_NAMES:
            raise ValueError(f"unknown generator {self.name!r}")

    def order(self):
        return 1


@dataclass(frozen=True)
class Scal(GenExpr):
    """Multiplication by a scalar field (an order-0 operator)."""
    expr: Expr

    def order(self):
        return 0


@dataclass(frozen=True)
class OpSum(GenExpr):
    terms: tuple

    def order(self):
        return max(t.order() for t in self.terms)


@dataclass(frozen=True)
class OpProd(GenExpr):
    """Composition, applied right to left like ordinary operator products."""
    factors: tuple

    def order(self):
        return sum(f.order() for f in self.factors)


@dataclass(frozen=True)
class Anti(GenExpr):
    left: GenExpr
    right: GenExpr

    def order(self):
        return self.left.order() + self.right.order()


@dataclass(frozen=True)
class OpPow(GenExpr):
    base: GenExpr
    exponent: int

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("operator powers must be non-negative")

    def order(self):
        return self.base.order() * self.exponent


def generators_in(g: GenExpr) -> set:
    if isinstance(g, Gen):
        return {g.name}
    if isinstance(g, Scal):
        return set()
    if isinstance(g, OpSum):
        return set().union(*(generators_in(t) for t in g.terms))
    if isinstance(g, OpProd):
        return set().union(*(generators_in(t) for t in g.factors))
    if isinstance(g, Anti):
        return generators_in(g.left) | generators_in(g.right)
    if isinstance(g, OpPow):
        return generators_in(g.base)
    raise TypeError(type(g).__name__)


def scalar_part(g: GenExpr):
    """Split a top-level sum into (operator part, scalar Expr terms)."""
    from . import expr as E
    terms = g.terms if isinstance(g, OpSum) else (g,)
    ops, scal = [], []
    for t in terms:
        (scal if isinstance(t, Scal) else ops).append(t)
    op = None
    if ops:
        op = ops[0] if len(ops) == 1 else OpSum(tuple(ops))
    return op, E.add(*[s.expr for s in scal])


def substitute_scalars(g: GenExpr, fn) -> GenExpr:
    """Apply ``fn`` to every scalar Expr inside ``g``."""
    if isinstance(g, Gen):
        return g
    if isinstance(g, Scal):
        return Scal(fn(g.expr))
    if isinstance(g, OpSum):
        return OpSum(tuple(substitute_scalars(t, fn) for t in g.terms))
    if isinstance(g, OpProd):
        return OpProd(tuple(substitute_scalars(t, fn) for t in g.factors))
    if isinstance(g, Anti):
        return Anti(substitute_scalars(g.left, fn), substitute_scalars(g.right, fn))
    if isinstance(g, OpPow):
        return OpPow(substitute_scalars(g.base, fn), g.exponent)
    raise TypeError(type(g).__name__)
