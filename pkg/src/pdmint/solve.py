"""Search for second-order integrals of motion of ``H = p_a f p_a + V``.

The unknown operator is ``Q = d_b mu^{ab} d_a + eta`` with ``mu`` a linear
combination of Killing-family tensors.  Two linear conditions cut the
ansatz down: the f-equation (linear in mu, free of V) and integrability of
the eta gradient (curl of W, linear in mu).  Whatever survives is handed to
eta recovery and then certified against the full commutator.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from . import expr as E
from .certify import Certificate, Policy, certify_many, derive_seed
from .determining import (eta_gradient, f_equation, full_residuals, recover_eta, selfadjoint_xi)
from .diffop import (DiffOp, Hamiltonian, commutator, expand_generators, from_hamiltonian, from_selfadjoint,
                     inversion_conjugate, mu_matrix)
from .genexpr import Anti, Gen, OpPow, OpProd, OpSum, Scal
from .killing import FAMILY_SPEC, IDX, PAIRS, _family_tensor, _Params, family_parameter_names
from .linalg import nullspace, sparse_nullspace, sparse_solve
from .numeric import EvalError, context, evaluate, exact_value, random_param, random_point
from .poly import Poly, coefficient_rows, normal, poly_to_expr, to_ratfunc, _ATOMS
from .scalar import Scalar


class TranscendentalInput(ValueError):
    """f or V leaves the algebraic class and the numeric fallback is off."""


class SoundnessError(RuntimeError):
    """A candidate that passed the linear filters failed certification."""


@dataclass
class FindOptions:
    policy: Policy = field(default_factory=Policy)
    seed: int = 0
    numeric_fallback: bool = False
    oversample: int = 3
    assembly: str = "auto"      # auto, evaluate, coefficients or numeric
    recover: bool = True
    dictionary: list | None = None
    render: bool = True
    partners: bool = False      # add inversion images of degree 0 and 1 results


# ---------------------------------------------------------------------------
# ansatz
# ---------------------------------------------------------------------------

@dataclass
class AnsatzSpace:
    degrees: tuple
    basis: list          # [(label, {(a, b): Expr})]

    @property
    def size(self) -> int:
        return len(self.basis)

    def combine(self, vec) -> dict:
        out = {}
        for a in IDX:
            for b in IDX:
                out[(a, b)] = normal(E.add(*[E.mul(E.Const(Scalar.coerce(c)), t[(a, b)])
                                             for c, (_, t) in zip(vec, self.basis) if not Scalar.coerce(c).is_zero()]))
        return out


def _split_by_params(e: E.Expr) -> dict:
    """``{parameter monomial Expr: coefficient Expr}`` for an Expr linear in its parameter monomials."""
    rf = to_ratfunc(e)
    den = E.mul(*[E.power(poly_to_expr(f), -m) for f, m in rf.den])
    groups: dict = {}
    for mono, c in rf.num.terms.items():
        pp = tuple((k, x) for k, x in mono if isinstance(_ATOMS[k], E.Param))
        rest = tuple((k, x) for k, x in mono if not isinstance(_ATOMS[k], E.Param))
        groups.setdefault(pp, Poly())
        groups[pp] = groups[pp] + Poly({rest: c})
    return {E.mul(*[E.power(_ATOMS[k], x) for k, x in pp]): E.mul(poly_to_expr(p), den)
            for pp, p in groups.items()}


@lru_cache(maxsize=None)
def _degree_basis(n: int) -> tuple:
    """Linearly independent Killing tensors spanning the degree-n families."""
    cands = []
    for fam, spec in FAMILY_SPEC.items():
        if spec[3] != n:
            continue
        mu = _family_tensor(fam, _Params(family_parameter_names(fam), None, True))
        parts: dict = {}
        for a, b in PAIRS:
            for pm, coef in _split_by_params(mu[(a, b)]).items():
                parts.setdefault(pm, {})[(a, b)] = coef
        for pm in sorted(parts, key=lambda p: str(p)):
            comps = parts[pm]
            t = {}
            for a, b in PAIRS:
                v = normal(comps.get((a, b), E.ZERO))
                t[(a, b)] = t[(b, a)] = v
            cands.append((f"family{fam}:{pm}", t))
    # drop dependent candidates by exact evaluation at rational points
    rng = random.Random(derive_seed(0, "ansatz", n))
    pts = [random_point(rng).coords for _ in range(8)]
    rows, keep = [], []
    from .linalg import rank
    for label, t in cands:
        vec = [exact_value(t[ab], p) for p in pts for ab in PAIRS]
        if rank(rows + [vec]) > len(rows):
            rows.append(vec)
            keep.append((label, t))
    return tuple(keep)


def ansatz_space(degrees) -> AnsatzSpace:
    degrees = tuple(sorted(set(int(d) for d in degrees)))
    for d in degrees:
        if d not in (0, 1, 2, 3, 4):
            raise ValueError(f"homogeneity degree must be in 0..4, got {d}")
    basis = []
    for d in degrees:
        basis += list(_degree_basis(d))
    return AnsatzSpace(degrees, basis)


# ---------------------------------------------------------------------------
# linear assembly
# ---------------------------------------------------------------------------

def _kind(exprs) -> str:
    if all(E.is_rational(e) for e in exprs):
        return "rational"
    if all(E.is_algebraic(e) for e in exprs):
        return "algebraic"
    return "transcendental"


def constraint_nullspace(columns, mode: str = "auto", seed: int = 0, oversample: int = 3,
                         numeric_fallback: bool = False) -> list:
    """Nullspace of ``sum_k u_k columns[k][i] == 0`` for every component i.

    ``columns[k]`` lists the component Exprs of the k-th unknown.  Rational
    systems are assembled by exact evaluation at seeded rational Points,
    algebraic ones by exact numerator-coefficient matching; transcendental
    ones need the numeric fallback.
    """
    K = len(columns)
    if K == 0:
        return []
    flat = [e for col in columns for e in col]
    kind = _kind(flat)
    if mode == "auto":
        mode = {"rational": "evaluate", "algebraic": "coefficients"}.get(kind, "numeric")
    if mode == "evaluate" and kind != "rational":
        raise ValueError("exact evaluation needs rational constraints")
    if mode == "numeric" and not numeric_fallback and kind == "transcendental":
        raise TranscendentalInput("constraints involve transcendental functions; enable the numeric fallback")
    ncomp = len(columns[0])
    if mode == "evaluate":
        return _evaluate_nullspace(columns, ncomp, seed, oversample)
    if mode == "coefficients":
        rows = []
        for i in range(ncomp):
            rows += [r for r, _ in coefficient_rows([col[i] for col in columns])]
        return sparse_nullspace(rows, K)
    if mode == "numeric":
        return _numeric_nullspace(columns, ncomp, seed, oversample)
    raise ValueError(f"unknown assembly mode {mode!r}")


def _evaluate_nullspace(columns, ncomp, seed, oversample):
    K = len(columns)
    names = sorted(set().union(*[E.params_of(e) for col in columns for e in col]))
    rng = random.Random(derive_seed(seed, "points"))
    rows = []
    wanted = max(oversample * K, 4)
    failures = 0
    while len(rows) < wanted * ncomp:
        p = random_point(rng).coords
        binds = {n: random_param(rng) for n in names}
        try:
            block = [[exact_value(col[i], p, binds) for col in columns] for i in range(ncomp)]
        except (EvalError, ZeroDivisionError):
            failures += 1
            if failures > 10 * wanted:
                raise
            continue
        rows += block
    rows = [r for r in rows if any(not v.is_zero() for v in r)]
    if not rows:
        return [[Scalar(int(i == j)) for i in range(K)] for j in range(K)]
    return nullspace(rows, K)


def _numeric_nullspace(columns, ncomp, seed, oversample, dps: int = 128):
    """Floating nullspace at ``dps`` digits with rational reconstruction of the reduced basis."""
    K = len(columns)
    ctx = context(dps)
    names = sorted(set().union(*[E.params_of(e) for col in columns for e in col]))
    rng = random.Random(derive_seed(seed, "numeric-points"))
    rows = []
    while len(rows) < max(oversample * K, 4) * ncomp:
        p = random_point(rng, dps)
        binds = {n: random_param(rng) for n in names}
        try:
            rows += [[evaluate(col[i], p, binds, ctx) for col in columns] for i in range(ncomp)]
        except (EvalError, ZeroDivisionError):
            continue
    tol = ctx.mpf(10) ** (-(dps // 2))
    m = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(K):
        best = max(range(r, len(m)), key=lambda i: abs(m[i][c]), default=None)
        if best is None or abs(m[best][c]) < tol:
            continue
        m[r], m[best] = m[best], m[r]
        pv = m[r][c]
        m[r] = [v / pv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    out = []
    for f in range(K):
        if f in pivots:
            continue
        v = [Scalar(0)] * K
        v[f] = Scalar(1)
        for k, c in enumerate(pivots):
            val = -m[k][f]
            re = Fraction(str(ctx.re(val))).limit_denominator(10 ** 6)
            im = Fraction(str(ctx.im(val))).limit_denominator(10 ** 6)
            v[c] = Scalar(re, im)
        out.append(v)
    return out


# ---------------------------------------------------------------------------
# recognition in terms of conformal generators
# ---------------------------------------------------------------------------

_GROUP_ORDER = ("PP", "LL", "PL", "DD", "PD", "LD", "PK", "LK", "DK", "KK")


def _group_members(group: str) -> list:
    a, b = group
    left = ["D"] if a == "D" else [f"{a}{i}" for i in IDX]
    right = ["D"] if b == "D" else [f"{b}{i}" for i in IDX]
    out = []
    for x in left:
        for y in right:
            if a == b and right.index(y) < left.index(x):
                continue
            out.append(OpPow(Gen(x), 2) if x == y else Anti(Gen(x), Gen(y)))
    return out


@lru_cache(maxsize=None)
def bilinear_basis() -> tuple:
    """The 55 symmetric bilinears in the generators, in display order, with expansions."""
    out = []
    for g in _GROUP_ORDER:
        for node in _group_members(g):
            out.append((node, expand_generators(node).simplify()))
    return tuple(out)


@lru_cache(maxsize=None)
def linear_basis() -> tuple:
    from .genexpr import GENERATOR_NAMES
    order = ("P1", "P2", "P3", "L1", "L2", "L3", "D", "K1", "K2", "K3")
    assert set(order) == set(GENERATOR_NAMES)
    return tuple((Gen(n), expand_generators(Gen(n)).simplify()) for n in order)


_SECOND = [(2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)]
_FIRST = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]


def _match(target: DiffOp, basis, alphas):
    rows = []
    for al in alphas:
        rows += coefficient_rows([op.coeff(al) for _, op in basis], target.coeff(al))
    return sparse_solve([r for r, _ in rows], [b for _, b in rows], pivot="first")


@dataclass
class Recognition:
    bilinear: list     # [(node, Scalar)]
    linear: list       # [(node, Scalar)]
    scalar: E.Expr
    expr: object       # GenExpr

    def text(self) -> str:
        from .exprlang import serialize_operator
        return serialize_operator(self.expr)


def recognize(q: DiffOp):
    """Write ``q`` as bilinears + generators + scalar field, or None."""
    if q.order > 2:
        return None
    bb = bilinear_basis()
    sol2 = _match(q, bb, _SECOND)
    if sol2 is None:
        return None
    rest = q
    for j, c in sol2.items():
        rest = rest - bb[j][1].scale(E.Const(c))
    rest = rest.simplify()
    if any(sum(al) == 2 for al in rest.coeffs):
        return None
    lb = linear_basis()
    sol1 = _match(rest, lb, _FIRST)
    if sol1 is None:
        return None
    for j, c in sol1.items():
        rest = rest - lb[j][1].scale(E.Const(c))
    rest = rest.simplify()
    if rest.order > 0:
        return None
    scalar = rest.coeff((0, 0, 0))
    bil = [(bb[j][0], c) for j, c in sorted(sol2.items())]
    lin = [(lb[j][0], c) for j, c in sorted(sol1.items())]
    terms = [_scaled(node, c) for node, c in bil + lin]
    if not to_ratfunc(scalar).is_zero():
        terms.append(Scal(scalar))
    if not terms:
        terms = [Scal(E.ZERO)]
    expr = terms[0] if len(terms) == 1 else OpSum(tuple(terms))
    return Recognition(bil, lin, scalar, expr)


def _scaled(node, c: Scalar):
    return node if c.is_one() else OpProd((Scal(E.Const(c)), node))


def in_span(q: DiffOp, ops, policy: Policy | None = None, seed: int = 0):
    """Coefficients ``a_j`` with ``q - sum a_j ops_j`` a constant, or None."""
    alphas = sorted({al for op in list(ops) + [q] for al in op.coeffs if sum(al) > 0})

    def comps(op):
        s = op.coeff((0, 0, 0))
        return [op.coeff(al) for al in alphas] + [E.diff(s, a) for a in IDX]

    cols = [comps(op) for op in ops]
    tgt = comps(q)
    rows = []
    for i in range(len(tgt)):
        rows += coefficient_rows([c[i] for c in cols], tgt[i])
    sol = sparse_solve([r for r, _ in rows], [b for _, b in rows])
    if sol is None:
        return None
    resid = q
    for j, c in sol.items():
        resid = resid - ops[j].scale(E.Const(c))
    resid = resid.simplify()
    checks = [resid.coeff(al) for al in alphas] + [E.diff(resid.coeff((0, 0, 0)), a) for a in IDX]
    if not certify_many(checks, policy, seed).is_zero:
        return None
    return [sol.get(j, Scalar(0)) for j in range(len(ops))]


# ---------------------------------------------------------------------------
# the finder
# ---------------------------------------------------------------------------

@dataclass
class FoundIntegral:
    degree: tuple
    mu: dict
    eta: E.Expr | None
    W: tuple
    status: str                  # "verified" or "gradient-certified"
    certificate: Certificate
    operator: DiffOp             # d mu d + eta (eta omitted when only its gradient is known)
    rendering: str | None = None
    origin: str = "direct"       # or "inversion" for partners of a direct result

    def to_json(self) -> dict:
        from .exprlang import serialize
        return {
            "degree": list(self.degree),
            "origin": self.origin,
            "status": self.status,
            "rendering": self.rendering,
            "mu": {f"{a}{b}": serialize(self.mu[(a, b)]) for a, b in PAIRS},
            "eta": serialize(self.eta) if self.eta is not None else None,
            "eta_gradient": None if self.eta is not None else [serialize(w) for w in self.W],
            "certificate": self.certificate.to_json(),
        }


def _is_homogeneous(e: E.Expr) -> bool:
    rf = to_ratfunc(e)
    if rf.is_zero():
        return True
    from .determining import _mono_degree
    degs = {_mono_degree(m) for m in rf.num.terms}
    for f, _ in rf.den:
        if len({_mono_degree(m) for m in f.terms}) > 1:
            return False
    return len(degs) == 1


def _as_expr(v) -> E.Expr:
    if isinstance(v, str):
        from .exprlang import parse_expr
        return parse_expr(v)
    return E._e(v)


def find_integrals(f, V, degrees=(0, 1, 2), options: FindOptions | None = None) -> list:
    """Certified second-order integrals whose Killing part has the given homogeneity degrees."""
    opts = options or FindOptions()
    f, V = _as_expr(f), _as_expr(V)
    kind = _kind([f, V])
    if kind == "transcendental" and not opts.numeric_fallback:
        raise TranscendentalInput("f or V is transcendental; enable the numeric fallback")
    H = from_hamiltonian(Hamiltonian(f, V))
    degrees = sorted(set(int(d) for d in degrees))
    blocks = [[d] for d in degrees] if _is_homogeneous(f) and _is_homogeneous(V) else [degrees]
    found = []
    for block in blocks:
        found += _find_block(f, V, H, block, opts)
    if opts.partners:
        found += inversion_partners(found, H, opts)
    return found


def inversion_partners(found, H: DiffOp, opts: FindOptions) -> list:
    """Inversion images of the degree 0 and 1 integrals, when H is inversion invariant.

    Degrees 0, 1 map to 4, 3; degree 2 maps into itself and adds nothing.
    """
    inv = inversion_conjugate(H) - H
    if not certify_many([c for _, c in inv.items()], opts.policy, derive_seed(opts.seed, "inv-H")).is_zero:
        return []
    out = []
    for k, q in enumerate(found):
        if q.status != "verified" or max(q.degree) > 1:
            continue
        Q = inversion_conjugate(q.operator)
        C = commutator(H, Q)
        cert = certify_many([c for _, c in C.items()], opts.policy, derive_seed(opts.seed, "partner", k))
        if not cert.is_zero:
            raise SoundnessError(f"inversion image of integral {k} fails certification: {cert.to_json()}")
        cert.label = "verified"
        eta = Q.coeff((0, 0, 0))
        rec = recognize(Q) if opts.render else None
        out.append(FoundIntegral(tuple(4 - d for d in q.degree), mu_matrix(Q), eta,
                                 tuple(E.diff(eta, a) for a in IDX), "verified", cert, Q,
                                 rec.text() if rec is not None else None, origin="inversion"))
    return out


def _find_block(f, V, H, block, opts: FindOptions) -> list:
    space = ansatz_space(block)
    tag = "-".join(map(str, block))
    cols = [[v for _, v in sorted(f_equation(t, f).items())] for _, t in space.basis]
    null1 = constraint_nullspace(cols, opts.assembly, derive_seed(opts.seed, "f", tag),
                                 opts.oversample, opts.numeric_fallback)
    mus = []
    for k, vec in enumerate(null1):
        mu = space.combine(vec)
        cert = certify_many(list(f_equation(mu, f).values()), opts.policy, derive_seed(opts.seed, "fcheck", tag, k))
        if not cert.is_zero:
            raise SoundnessError(f"nullspace vector {k} of degree block {tag} fails the f-equation")
        mus.append(mu)
    if not mus:
        return []
    grads = [eta_gradient(mu, f, V) for mu in mus]
    null2 = constraint_nullspace([list(g.curl) for g in grads], opts.assembly,
                                 derive_seed(opts.seed, "curl", tag), opts.oversample, opts.numeric_fallback)
    out = []
    for k, w in enumerate(null2):
        mu = {ab: normal(E.add(*[E.mul(E.Const(c), m[ab]) for c, m in zip(w, mus) if not c.is_zero()]))
              for ab in mus[0]}
        out.append(_finish(mu, f, V, H, tuple(block), opts, derive_seed(opts.seed, "integral", tag, k)))
    return out


def _finish(mu, f, V, H, block, opts: FindOptions, seed: int) -> FoundIntegral:
    W = eta_gradient(mu, f, V)
    eta = recover_eta(W, opts.dictionary, opts.policy, seed) if opts.recover else None
    rec = None
    if eta is not None:
        Q = from_selfadjoint(mu, eta).simplify()
        if opts.render:
            rec = recognize(Q)
            if rec is not None:
                lead = (rec.bilinear + rec.linear)[0][1] if (rec.bilinear or rec.linear) else Scalar(1)
                if not lead.is_one():
                    inv = E.Const(lead.inverse())
                    mu = {ab: normal(E.mul(inv, v)) for ab, v in mu.items()}
                    eta = normal(E.mul(inv, eta))
                    W = eta_gradient(mu, f, V)
                    Q = from_selfadjoint(mu, eta).simplify()
                    rec = recognize(Q)
        C = commutator(H, Q)
        cert = certify_many([c for _, c in C.items()], opts.policy, seed) if not C.is_zero() \
            else Certificate("ExactZero", precision=opts.policy.precision)
        status = "verified"
    else:
        Q = from_selfadjoint(mu, E.ZERO).simplify()
        res = full_residuals(mu, selfadjoint_xi(mu), None, f, V, eta_grad=W)
        cert = res.certify(opts.policy, seed)
        status = "gradient-certified"
        if opts.render:
            rec = recognize(Q)
    if not cert.is_zero:
        raise SoundnessError(f"candidate integral failed certification: {cert.to_json()}")
    cert.label = status
    text = rec.text() if rec is not None else None
    if text is not None and status == "gradient-certified":
        text += " + eta"
    return FoundIntegral(block, mu, eta, W.W, status, cert, Q, text)
