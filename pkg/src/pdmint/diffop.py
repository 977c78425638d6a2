"""Differential operators with scalar-field coefficients.

A :class:`DiffOp` is stored in monomial form ``sum_alpha c_alpha d^alpha``
where ``alpha = (n1, n2, n3)`` counts derivatives along each axis.  The
totally symmetric tensor form is available through :meth:`DiffOp.tensor`.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct
from fractions import Fraction
from math import comb, factorial

from . import expr as E
from .genexpr import Anti, Gen, GenExpr, OpPow, OpProd, OpSum, Scal
from .poly import normal
from .scalar import Scalar

MAX_ORDER = 4
_UNITS = {1: (1, 0, 0), 2: (0, 1, 0), 3: (0, 0, 1)}


class OrderOverflow(ValueError):
    pass


def _is_zero_expr(e: E.Expr) -> bool:
    return isinstance(e, E.Const) and e.value.is_zero()


def _multinomial(alpha) -> int:
    n = sum(alpha)
    out = factorial(n)
    for a in alpha:
        out //= factorial(a)
    return out


def _vec(indices) -> tuple:
    v = [0, 0, 0]
    for a in indices:
        v[a - 1] += 1
    return tuple(v)


class DiffOp:
    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        out = {}
        for alpha, c in (coeffs or {}).items():
            alpha = tuple(alpha)
            if len(alpha) != 3 or sum(alpha) > MAX_ORDER or min(alpha) < 0:
                raise OrderOverflow(f"derivative multi-index {alpha} exceeds order {MAX_ORDER}")
            c = E._e(c)
            if not _is_zero_expr(c):
                out[alpha] = c
        self.coeffs = out

    # -- constructors --------------------------------------------------------
    @staticmethod
    def scalar(e) -> "DiffOp":
        return DiffOp({(0, 0, 0): E._e(e)})

    @staticmethod
    def partial(axis: int) -> "DiffOp":
        return DiffOp({_UNITS[axis]: E.ONE})

    @staticmethod
    def from_tensors(tensors: dict) -> "DiffOp":
        """Build from ``{k: {index tuple: Expr}}`` symmetric tensors."""
        out: dict = {}
        for k, comps in tensors.items():
            for idx, c in comps.items():
                if len(idx) != k:
                    raise ValueError("tensor index length does not match its rank")
                alpha = _vec(idx)
                out[alpha] = E.add(out.get(alpha, E.ZERO), c)
        return DiffOp(out)

    # -- structure -------------------------------------------------------------
    @property
    def order(self) -> int:
        return max((sum(a) for a in self.coeffs), default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, alpha) -> E.Expr:
        if isinstance(alpha, int):
            alpha = _UNITS[alpha]
        return self.coeffs.get(tuple(alpha), E.ZERO)

    def tensor(self, k: int) -> dict:
        """Totally symmetric rank-k coefficient tensor as ``{index tuple: Expr}``."""
        out = {}
        for idx in iproduct((1, 2, 3), repeat=k):
            alpha = _vec(idx)
            c = self.coeffs.get(alpha)
            if c is None:
                continue
            out[idx] = E.mul(E.const(Scalar(1) / _multinomial(alpha)), c)
        return out

    def items(self):
        return sorted(self.coeffs.items(), key=lambda kv: (-sum(kv[0]), tuple(-a for a in kv[0])))

    # -- algebra -----------------------------------------------------------------
    def __add__(self, other: "DiffOp") -> "DiffOp":
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = E.add(out[a], c) if a in out else c
        return DiffOp(out)

    def __neg__(self) -> "DiffOp":
        return DiffOp({a: E.neg(c) for a, c in self.coeffs.items()})

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self + (-other)

    def scale(self, e) -> "DiffOp":
        """Left multiplication by a scalar field."""
        e = E._e(e)
        return DiffOp({a: E.mul(e, c) for a, c in self.coeffs.items()})

    def simplify(self) -> "DiffOp":
        return DiffOp({a: normal(c) for a, c in self.coeffs.items()})

    def apply(self, psi: E.Expr) -> E.Expr:
        terms = []
        for alpha, c in self.coeffs.items():
            d = psi
            for axis, n in zip((1, 2, 3), alpha):
                for _ in range(n):
                    d = E.diff(d, axis)
            terms.append(E.mul(c, d))
        return E.add(*terms)

    def __eq__(self, other):
        return isinstance(other, DiffOp) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def __repr__(self):
        return f"DiffOp({render(self)!r})"

    def to_json(self) -> dict:
        from .exprlang import serialize
        return {"".join(f"d{ax}" * n for ax, n in zip((1, 2, 3), a)) or "1": serialize(c)
                for a, c in self.items()}


def _deriv(e: E.Expr, gamma) -> E.Expr:
    for axis, n in zip((1, 2, 3), gamma):
        for _ in range(n):
            e = E.diff(e, axis)
            if _is_zero_expr(e):
                return e
    return e


def compose(A: DiffOp, B: DiffOp) -> DiffOp:
    """The operator ``A B`` (B applied first), by the generalized Leibniz rule."""
    if A.order + B.order > MAX_ORDER:
        raise OrderOverflow(f"composition of orders {A.order} and {B.order} exceeds {MAX_ORDER}")
    out: dict = {}
    for alpha, a in A.coeffs.items():
        for beta, b in B.coeffs.items():
            for gamma in iproduct(*(range(n + 1) for n in alpha)):
                db = _deriv(b, gamma)
                if _is_zero_expr(db):
                    continue
                k = comb(alpha[0], gamma[0]) * comb(alpha[1], gamma[1]) * comb(alpha[2], gamma[2])
                key = tuple(al - g + be for al, g, be in zip(alpha, gamma, beta))
                term = E.mul(E.const(k), a, db) if k != 1 else E.mul(a, db)
                out.setdefault(key, []).append(term)
    return DiffOp({k: E.add(*v) for k, v in out.items()})


def commutator(A: DiffOp, B: DiffOp) -> DiffOp:
    """``[A, B] = AB - BA`` with coefficients in rational normal form."""
    return (compose(A, B) - compose(B, A)).simplify()


def anticommutator(A: DiffOp, B: DiffOp) -> DiffOp:
    return compose(A, B) + compose(B, A)


# ---------------------------------------------------------------------------
# Hamiltonians and the self-adjoint form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Hamiltonian:
    """``H = p_a f p_a + V`` with ``p = -i d``."""
    f: E.Expr
    V: E.Expr

    def to_diffop(self) -> DiffOp:
        return from_hamiltonian(self)


def from_hamiltonian(h: Hamiltonian) -> DiffOp:
    coeffs = {}
    for a in (1, 2, 3):
        coeffs[tuple(2 if b == a else 0 for b in (1, 2, 3))] = E.neg(h.f)
        coeffs[_UNITS[a]] = E.neg(E.diff(h.f, a))
    coeffs[(0, 0, 0)] = h.V
    return DiffOp(coeffs)


@dataclass(frozen=True)
class SelfAdjointForm:
    mu: dict      # {(a, b): Expr}, symmetric, a, b in 1..3
    eta: E.Expr
    defect: tuple  # three Exprs

    def defect_is_zero(self, policy=None, seed=0):
        from .certify import certify_many
        return certify_many(self.defect, policy, seed)


def mu_matrix(op: DiffOp) -> dict:
    t = op.tensor(2)
    return {(a, b): t.get((a, b), E.ZERO) for a in (1, 2, 3) for b in (1, 2, 3)}


def to_selfadjoint_form(q: DiffOp) -> SelfAdjointForm:
    if q.order > 2:
        raise ValueError("the self-adjoint form needs an operator of order at most 2")
    mu = mu_matrix(q)
    defect = tuple(
        normal(E.sub(q.coeff(a), E.add(*[E.diff(mu[(a, b)], b) for b in (1, 2, 3)])))
        for a in (1, 2, 3))
    return SelfAdjointForm(mu, q.coeff((0, 0, 0)), defect)


def from_selfadjoint(mu: dict, eta) -> DiffOp:
    """``d_b mu^{ab} d_a + eta``."""
    coeffs: dict = {}
    for a in (1, 2, 3):
        for b in (1, 2, 3):
            m = mu.get((a, b), E.ZERO)
            key = _vec((a, b))
            coeffs[key] = E.add(coeffs.get(key, E.ZERO), m)
        coeffs[_UNITS[a]] = E.add(*[E.diff(mu.get((a, b), E.ZERO), b) for b in (1, 2, 3)])
    coeffs[(0, 0, 0)] = E._e(eta)
    return DiffOp(coeffs)


# ---------------------------------------------------------------------------
# conformal generators
# ---------------------------------------------------------------------------

MINUS_I = E.Const(Scalar(0, -1))
_EPS = {(1, 2, 3): 1, (2, 3, 1): 1, (3, 1, 2): 1, (1, 3, 2): -1, (3, 2, 1): -1, (2, 1, 3): -1}


def levi_civita(a, b, c) -> int:
    return _EPS.get((a, b, c), 0)


def _build_generators() -> dict:
    x = E.COORDS
    gens = {}
    for a in (1, 2, 3):
        gens[f"P{a}"] = DiffOp({_UNITS[a]: MINUS_I})
    for a in (1, 2, 3):
        coeffs = {}
        for b in (1, 2, 3):
            for c in (1, 2, 3):
                s = levi_civita(a, b, c)
                if s:
                    coeffs[_UNITS[c]] = E.add(coeffs.get(_UNITS[c], E.ZERO),
                                             E.mul(E.const(s), MINUS_I, x[b - 1]))
        gens[f"L{a}"] = DiffOp(coeffs)
    d = {(0, 0, 0): E.mul(E.const(Fraction(3, 2)), MINUS_I)}
    for a in (1, 2, 3):
        d[_UNITS[a]] = E.mul(MINUS_I, x[a - 1])
    gens["D"] = DiffOp(d)
    for a in (1, 2, 3):
        # K_a = r^2 p_a - 2 x_a D
        gens[f"K{a}"] = (DiffOp({_UNITS[a]: E.mul(MINUS_I, E.R2)})
                         - gens["D"].scale(E.mul(E.const(2), x[a - 1]))).simplify()
    return gens


GENERATORS = _build_generators()


def generator(name: str) -> DiffOp:
    return GENERATORS[name]


def expand_generators(g: GenExpr) -> DiffOp:
    """Multiply out a generator expression into a DiffOp."""
    if isinstance(g, Gen):
        return GENERATORS[g.name]
    if isinstance(g, Scal):
        return DiffOp.scalar(g.expr)
    if isinstance(g, OpSum):
        out = DiffOp()
        for t in g.terms:
            out = out + expand_generators(t)
        return out
    if isinstance(g, OpProd):
        if sum(f.order() for f in g.factors) > MAX_ORDER:
            raise OrderOverflow("generator product exceeds order 4")
        out = expand_generators(g.factors[-1])
        for f in reversed(g.factors[:-1]):
            out = compose(expand_generators(f), out)
        return out
    if isinstance(g, Anti):
        a, b = expand_generators(g.left), expand_generators(g.right)
        return anticommutator(a, b)
    if isinstance(g, OpPow):
        if g.order() > MAX_ORDER:
            raise OrderOverflow("generator power exceeds order 4")
        base = expand_generators(g.base)
        out = DiffOp.scalar(E.ONE)
        for _ in range(g.exponent):
            out = compose(base, out)
        return out
    raise TypeError(type(g).__name__)


# ---------------------------------------------------------------------------
# inversion x -> x / x^2, psi -> |x|^-3 psi(x / x^2)
# ---------------------------------------------------------------------------

def invert_field(e: E.Expr) -> E.Expr:
    """The scalar field ``g(x / x^2)``."""
    inv_s = E.power(E.R2, -1)

    def leaf(n):
        if isinstance(n, E.Coord):
            return E.mul(n, inv_s)
        if isinstance(n, E.Geom):
            if n.name == "r":
                return E.power(E.R, -1)
            if n.name == "rt":
                return E.mul(E.RT, inv_s)
        return None  # the angles are invariant

    return E.substitute(e, leaf)


def _inversion_partials() -> dict:
    # conjugate of d_a: r^2 d_a - 2 x_a (x.d) - 3 x_a
    x = E.COORDS
    out = {}
    for a in (1, 2, 3):
        coeffs = {_UNITS[a]: E.R2, (0, 0, 0): E.mul(E.const(-3), x[a - 1])}
        for b in (1, 2, 3):
            coeffs[_UNITS[b]] = E.add(coeffs.get(_UNITS[b], E.ZERO),
                                      E.mul(E.const(-2), x[a - 1], x[b - 1]))
        out[a] = DiffOp(coeffs).simplify()
    return out


_T = _inversion_partials()

# fixed once by direct computation (see tests): P -> +K, K -> +P, L -> +L, D -> -D
INVERSION_SIGNS = {"P": 1, "K": 1, "L": 1, "D": -1}


def inversion_conjugate(q: DiffOp) -> DiffOp:
    """``I q I`` for the weighted inversion ``I``; an involution."""
    if q.order > 2:
        raise ValueError("inversion conjugation is implemented for order at most 2")
    out = DiffOp()
    for alpha, c in q.coeffs.items():
        op = DiffOp.scalar(E.ONE)
        for axis, n in zip((1, 2, 3), alpha):
            for _ in range(n):
                op = compose(_T[axis], op)
        out = out + compose(DiffOp.scalar(invert_field(c)), op)
    return out.simplify()


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def render(op: DiffOp) -> str:
    from .exprlang import serialize
    if op.is_zero():
        return "0"
    parts = []
    for alpha, c in op.items():
        d = "*".join(f"d{ax}" if n == 1 else f"d{ax}^{n}" for ax, n in zip((1, 2, 3), alpha) if n)
        s = serialize(c)
        if not d:
            parts.append(s)
        elif s == "1":
            parts.append(d)
        elif s == "-1":
            parts.append("-" + d)
        else:
            parts.append(f"({s})*{d}")
    out = parts[0]
    for p in parts[1:]:
        out += " - " + p[1:] if p.startswith("-") else " + " + p
    return out
