"""Determining equations for second-order integrals ``Q = mu d d + xi d + eta``.

The residual conventions reproduce the commutator coefficients exactly: for
``H = -d_a f d_a + V`` the third-order part of ``[H, Q]`` vanishes iff the
Killing identity and the f-equation hold, the second-order part is minus
the (a,b) equation, the first-order part is minus the eta equation and the
scalar part is minus the last consistency equation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iproduct

from . import expr as E
from .certify import Certificate, Policy, combine, derive_seed, zero_certificate
from .diffop import DiffOp
from .linalg import sparse_solve
from .poly import RatFunc, coefficient_rows, normal, to_ratfunc

IDX = (1, 2, 3)


def _mu_of(mu) -> dict:
    mu = getattr(mu, "mu", mu)
    out = {}
    for a in IDX:
        for b in IDX:
            out[(a, b)] = E._e(mu.get((a, b), mu.get((b, a), E.ZERO)))
    return out


def _d(e, *axes):
    for a in axes:
        e = E.diff(e, a)
    return e


def _delta(a, b):
    return E.ONE if a == b else E.ZERO


@dataclass
class DeterminingResiduals:
    third_order: dict = field(default_factory=dict)    # ("killing", a, b, c) and ("f", a)
    second_order: dict = field(default_factory=dict)   # (a, b)
    first_order: dict = field(default_factory=dict)    # a
    scalar: dict = field(default_factory=dict)         # "trace", "eta"

    # equations the source keeps; the others are differential consequences
    RETAINED = ("killing", "f", "first")

    def items(self):
        for k, v in sorted(self.third_order.items(), key=str):
            yield ("third",) + tuple(k), v
        for k, v in sorted(self.second_order.items()):
            yield ("second",) + tuple(k), v
        for k, v in sorted(self.first_order.items()):
            yield ("first", k), v
        for k, v in sorted(self.scalar.items()):
            yield ("scalar", k), v

    def retained(self):
        return [(k, v) for k, v in self.items()
                if k[0] == "first" or (k[0] == "third")]

    def consequences(self):
        return [(k, v) for k, v in self.items() if k[0] in ("second", "scalar")]

    def certify(self, policy: Policy | None = None, seed: int = 0, which=None) -> Certificate:
        """Aggregate certificate; ``which`` is ``"retained"``, ``"consequences"`` or None (all)."""
        items = {"retained": self.retained, "consequences": self.consequences}.get(which, self.items)()
        certs = []
        for k, v in items:
            c = zero_certificate(v, policy, derive_seed(seed, *k))
            c.label = "/".join(map(str, k))
            certs.append(c)
            if not c.is_zero:
                break
        return combine(certs)


def killing_part(mu: dict) -> dict:
    from .killing import killing_residuals
    return {("killing",) + k: v for k, v in killing_residuals(mu).items()}


def f_equation(mu: dict, f) -> dict:
    """``(mu^{nn}_a + 2 mu^{na}_n) f - 5 mu^{an} f_n`` for each a."""
    out = {}
    for a in IDX:
        t = E.add(*[_d(mu[(n, n)], a) for n in IDX], *[E.mul(E.const(2), _d(mu[(n, a)], n)) for n in IDX])
        out[("f", a)] = E.sub(E.mul(t, f), E.mul(E.const(5), E.add(*[E.mul(mu[(a, n)], _d(f, n)) for n in IDX])))
    return out


def full_residuals(mu, xi, eta, f, V, eta_grad=None) -> DeterminingResiduals:
    """Residuals of the six-equation block for ``Q = mu^{ab} d_a d_b + xi^a d_a + eta``.

    eta enters only through its gradient, so ``eta_grad`` (three Exprs) may
    stand in for an eta that has no closed form; ``eta`` is then ignored.
    """
    mu = _mu_of(mu)
    xi = {a: E._e(v) for a, v in zip(IDX, xi)}
    f, V = E._e(f), E._e(V)
    if eta_grad is None:
        eta = E._e(eta)
        grad = {a: _d(eta, a) for a in IDX}
    else:
        grad = {a: E._e(w) for a, w in zip(IDX, getattr(eta_grad, "W", eta_grad))}
    fd = lambda *n: _d(f, *n)
    res = DeterminingResiduals()
    res.third_order.update(killing_part(mu))
    res.third_order.update(f_equation(mu, f))

    mf = E.add(*[E.mul(mu[(m, n)], fd(m, n)) for m in IDX for n in IDX])
    xf = E.add(*[E.mul(xi[n], fd(n)) for n in IDX])
    for a in IDX:
        for b in IDX:
            if a > b:
                continue
            res.second_order[(a, b)] = E.add(
                E.mul(E.add(*[_d(mu[(a, b)], n, n) for n in IDX], _d(xi[a], b), _d(xi[b], a)), f),
                *[E.mul(_d(mu[(a, b)], n), fd(n)) for n in IDX],
                *[E.neg(E.add(E.mul(mu[(n, a)], fd(n, b)), E.mul(mu[(n, b)], fd(n, a)))) for n in IDX],
                E.neg(E.mul(_delta(a, b), E.add(mf, xf))))
    for a in IDX:
        res.first_order[a] = E.add(
            E.mul(E.const(2), f, grad[a]),
            *[E.mul(_d(xi[a], n), fd(n)) for n in IDX],
            *[E.neg(E.mul(xi[n], fd(a, n))) for n in IDX],
            E.mul(f, E.add(*[_d(xi[a], n, n) for n in IDX])),
            *[E.mul(E.const(2), mu[(a, n)], _d(V, n)) for n in IDX],
            *[E.neg(E.mul(mu[(m, n)], fd(m, n, a))) for m in IDX for n in IDX])
    res.scalar["trace"] = E.add(
        E.mul(f, E.add(*[_d(mu[(m, m)], n, n) for m in IDX for n in IDX],
                       *[E.mul(E.const(2), _d(xi[n], n)) for n in IDX])),
        *[E.mul(E.sub(E.add(*[_d(mu[(n, n)], m) for n in IDX]), E.mul(E.const(3), xi[m])), fd(m)) for m in IDX],
        E.mul(E.const(-5), mf))
    res.scalar["eta"] = E.add(
        *[_d(E.mul(f, grad[n]), n) for n in IDX],
        *[E.mul(xi[n], _d(V, n)) for n in IDX],
        *[E.mul(mu[(m, n)], _d(V, m, n)) for m in IDX for n in IDX])
    return res


def selfadjoint_xi(mu) -> tuple:
    """``xi^a = mu^{an}_n``, the first-order part of ``d_b mu^{ab} d_a``."""
    mu = _mu_of(mu)
    return tuple(E.add(*[_d(mu[(a, n)], n) for n in IDX]) for a in IDX)


def _eta_source(mu: dict, f, V, a) -> E.Expr:
    """``2 mu^{ab} V_b + (mu^{am}_{nm} f - mu^{nm} f_{am})_n``."""
    inner = lambda n: E.sub(E.mul(E.add(*[_d(mu[(a, m)], n, m) for m in IDX]), f),
                            E.add(*[E.mul(mu[(n, m)], _d(f, a, m)) for m in IDX]))
    return E.add(*[E.mul(E.const(2), mu[(a, b)], _d(V, b)) for b in IDX], *[_d(inner(n), n) for n in IDX])


def reduced_residuals(mu, eta, f, V) -> DeterminingResiduals:
    """The f-equation and the eta equation after ``xi^a = mu^{ab}_b``."""
    mu = _mu_of(mu)
    eta, f, V = E._e(eta), E._e(f), E._e(V)
    res = DeterminingResiduals()
    res.third_order.update(f_equation(mu, f))
    for a in IDX:
        res.first_order[a] = E.add(E.mul(E.const(2), f, _d(eta, a)), _eta_source(mu, f, V, a))
    return res


def assemble(mu, xi, eta) -> DiffOp:
    """The operator ``mu^{ab} d_a d_b + xi^a d_a + eta``."""
    mu = _mu_of(mu)
    t2 = {(a, b): mu[(a, b)] for a in IDX for b in IDX}
    t1 = {(a,): E._e(v) for a, v in zip(IDX, xi)}
    return DiffOp.from_tensors({2: t2, 1: t1, 0: {(): E._e(eta)}})


# ---------------------------------------------------------------------------
# eta from its gradient
# ---------------------------------------------------------------------------

@dataclass
class EtaGradient:
    W: tuple      # d_a eta = W_a
    curl: tuple   # d_1 W_2 - d_2 W_1, d_1 W_3 - d_3 W_1, d_2 W_3 - d_3 W_2

    def certify_curl(self, policy: Policy | None = None, seed: int = 0) -> Certificate:
        certs = [zero_certificate(c, policy, derive_seed(seed, "curl", k)) for k, c in enumerate(self.curl)]
        return combine(certs, label="curl")

    def radial(self) -> E.Expr:
        """``x_a W_a``; vanishes when eta is homogeneous of degree 0."""
        return normal(E.add(*[E.mul(E.coord(a), w) for a, w in zip(IDX, self.W)]))


def gradient_field(W) -> EtaGradient:
    W = tuple(normal(E._e(w)) for w in W)
    curl = tuple(normal(E.sub(_d(W[b - 1], a), _d(W[a - 1], b))) for a, b in ((1, 2), (1, 3), (2, 3)))
    return EtaGradient(W, curl)


def eta_gradient(mu, f, V) -> EtaGradient:
    """Solve the reduced eta equation for ``d_a eta``; singular only where f = 0."""
    mu = _mu_of(mu)
    f, V = E._e(f), E._e(V)
    inv = E.power(E.mul(E.const(2), f), -1)
    return gradient_field([E.neg(E.mul(_eta_source(mu, f, V, a), inv)) for a in IDX])


def _parse_list(items):
    from .exprlang import parse_expr
    return [parse_expr(s) for s in items]


# logarithms and angles are not reachable by the rational ansatz below;
# the remaining entries are the closure of the tables' scalar terms
DEFAULT_DICTIONARY_SOURCE = (
    "ln(r)", "ln(rt)", "ln(x1)", "ln(x2)", "ln(x3)", "phi", "theta",
    "1/r", "1/rt", "1/x1^2", "1/x2^2", "1/x3^2", "r^2/x3^2", "r^2/rt^2", "x1/rt", "x3/r", "x3/rt",
    "exp(phi)*x3/rt", "exp(-phi)*x3/rt", "exp(2*phi)*x3/rt^2", "exp(-2*phi)*x3/rt^2",
    "exp(2*phi)*r^2/rt^2", "exp(-2*phi)*r^2/rt^2", "exp(2*phi)*x3^2/rt^2", "exp(-2*phi)*x3^2/rt^2",
)


def default_dictionary() -> list:
    return _parse_list(DEFAULT_DICTIONARY_SOURCE)


def _mono_degree(m) -> int:
    deg = 0
    for key, ex in m:
        atom = _atom_of(key)
        if isinstance(atom, E.Coord) or (isinstance(atom, E.Geom) and atom.name in ("r", "rt")):
            deg += ex
    return deg


def _atom_of(key):
    from .poly import _ATOMS
    return _ATOMS[key]


def _degrees(rf: RatFunc) -> set:
    dd = sum(_mono_degree(next(iter(f.terms))) * e for f, e in rf.den)
    return {_mono_degree(m) - dd for m in rf.num.terms}


def _kernel_atoms(rf: RatFunc) -> set:
    out = set()
    for m in rf.num.terms:
        for key, _ in m:
            a = _atom_of(key)
            if isinstance(a, E.Apply) or (isinstance(a, E.Geom) and a.name in ("phi", "theta")):
                out.add(a)
    return out


def rational_ansatz(W: tuple, limit: int = 400) -> list:
    """Candidate terms ``N / B`` for a rational-algebraic potential of ``W``.

    ``B`` collects every denominator factor of W with its multiplicity
    lowered by one; ``N`` runs over monomials in x, r, rt (and the
    kernels of W) of the matching homogeneous degree.
    """
    rfs = [to_ratfunc(w) for w in W]
    if all(rf.is_zero() for rf in rfs):
        return []
    mult: dict = {}
    for rf in rfs:
        for f, e in rf.den:
            mult[f] = max(mult.get(f, 0), e)
    B = {f: e - 1 for f, e in mult.items() if e > 1}
    Bexpr = from_den(B)
    degB = sum(_mono_degree(next(iter(f.terms))) * e for f, e in B.items())
    degs = set()
    for rf in rfs:
        if not rf.is_zero():
            degs |= _degrees(rf)
    kernels = set()
    for rf in rfs:
        kernels |= _kernel_atoms(rf)
    mults = [E.ONE] + sorted(kernels, key=lambda a: a.sort_key())
    out = []
    for d in sorted({d + 1 + degB for d in degs}):
        for i, j in iproduct((0, 1), (0, 1)):
            k = d - i - j
            if k < 0:
                continue
            for a1 in range(k + 1):
                for a2 in range(k - a1 + 1):
                    a3 = k - a1 - a2
                    mono = E.mul(E.power(E.X1, a1), E.power(E.X2, a2), E.power(E.X3, a3),
                                 E.power(E.R, i), E.power(E.RT, j))
                    for m in mults:
                        out.append(E.mul(m, mono, Bexpr))
                        if len(out) > limit:
                            return []
    return out


def from_den(den: dict) -> E.Expr:
    from .poly import poly_to_expr
    return E.mul(*[E.power(poly_to_expr(f), -e) for f, e in den.items() if e > 0])


def recover_eta(W, dictionary=None, policy: Policy | None = None, seed: int = 0,
                rational: bool = True):
    """A potential ``eta`` with ``grad eta = W`` built from ``dictionary``, or None.

    Coefficients are found by matching numerator coefficients of the
    rational normal form exactly (parameters of W enter linearly through
    per-parameter copies of each basis term), then the result is certified.
    """
    if isinstance(W, EtaGradient):
        W = W.W
    W = tuple(normal(E._e(w)) for w in W)
    basis = [b for b in (default_dictionary() if dictionary is None else list(dictionary))
             if not isinstance(normal(b), E.Const)]
    if rational:
        basis += rational_ansatz(W)
    params = sorted(set().union(*[E.params_of(w) for w in W]))
    mults = [E.ONE] + [E.Param(p) for p in params]
    cols = [(b, m) for b in basis for m in mults]
    if not cols:
        return E.ZERO if all(to_ratfunc(w).is_zero() for w in W) else None

    rows = []
    for a in IDX:
        grads = [normal(E.diff(b, a)) for b in basis]
        rows += coefficient_rows([E.mul(m, g) for g in grads for m in mults], W[a - 1])
    sol = sparse_solve([r for r, _ in rows], [b for _, b in rows])
    if sol is None:
        return None
    eta = normal(E.add(*[E.mul(E.Const(c), m, b) for (b, m), c in ((cols[j], v) for j, v in sorted(sol.items()))]))
    certs = [zero_certificate(E.sub(E.diff(eta, a), W[a - 1]), policy, derive_seed(seed, "eta", a))
             for a in IDX]
    if not combine(certs).is_zero:
        return None
    return eta
