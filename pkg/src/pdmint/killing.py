"""Conformal Killing tensors, the third-order identity and the M-matrices.

Parameter names follow the tensor families: ``lam1_12`` is the (1,2)
component of the symmetric parameter lambda_1, ``lam2_3`` the third
component of the vector lambda_2, ``phi1`` the (constant) function value
multiplying the trace part of family 1, and so on.  Symmetric indices may be
given in either order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from . import expr as E
from .certify import Certificate, Policy, combine, zero_certificate, derive_seed
from .diffop import levi_civita
from .poly import normal

IDX = (1, 2, 3)
PAIRS = [(1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)]

# family -> (symmetric tensor params, vector params, scalar params, degree)
FAMILY_SPEC = {
    1: (("lam1",), (), ("phi1",), 0),
    2: ((), ("lam2", "lam3"), ("phi2",), 1),
    3: (("lam3",), (), (), 1),
    4: ((), ("lam4",), (), 2),
    5: ((), (), ("phi5", "k"), 2),
    6: (("lam5", "lam6"), (), ("phi6",), 2),
    7: ((), ("lam7", "lam8"), ("phi7",), 3),
    8: (("lam8",), (), (), 3),
    9: (("lam9", "lam10"), (), ("k", "phi9"), 4),
}


class KillingIdentityError(AssertionError):
    """A family produced a tensor that violates the Killing identity."""


def family_parameter_names(n: int) -> list:
    tens, vecs, scal, _ = FAMILY_SPEC[n]
    out = [f"{t}_{a}{b}" for t in tens for a, b in PAIRS]
    out += [f"{v}_{a}" for v in vecs for a in IDX]
    return out + list(scal)


def _canonical_name(name: str) -> str:
    m = re.fullmatch(r"([A-Za-z]+\d*)_([123])([123])", name)
    if m:
        a, b = sorted((m.group(2), m.group(3)))
        return f"{m.group(1)}_{a}{b}"
    return name


class _Params:
    def __init__(self, allowed, values, symbolic):
        self.allowed = set(allowed)
        self.symbolic = symbolic
        self.values = {}
        for k, v in (values or {}).items():
            cn = _canonical_name(k)
            if cn not in self.allowed:
                raise KeyError(f"unknown parameter {k!r}; expected one of {sorted(self.allowed)}")
            self.values[cn] = E._e(v) if not isinstance(v, str) else _parse(v)

    def get(self, name: str) -> E.Expr:
        name = _canonical_name(name)
        if name in self.values:
            return self.values[name]
        return E.Param(name) if self.symbolic else E.ZERO

    def t(self, base, a, b):
        return self.get(f"{base}_{a}{b}")

    def v(self, base, a):
        return self.get(f"{base}_{a}")


def _parse(s: str) -> E.Expr:
    from .exprlang import parse_expr
    return parse_expr(s)


def _delta(a, b):
    return 1 if a == b else 0


@dataclass
class KillingTensor:
    mu: dict                      # {(a, b): Expr} for all nine index pairs
    family: object                # 1..9, "const", "linear", "bilinear" or "custom"
    params: dict = field(default_factory=dict)
    certificate: Certificate | None = None

    def component(self, a, b) -> E.Expr:
        return self.mu[(a, b)]

    def to_json(self):
        from .exprlang import serialize
        return {
            "family": self.family,
            "params": {k: serialize(v) for k, v in sorted(self.params.items())},
            "mu": {f"{a}{b}": serialize(self.mu[(a, b)]) for a, b in PAIRS},
            "certificate": self.certificate.to_json() if self.certificate else None,
        }


def _sym(fn) -> dict:
    mu = {}
    for a, b in PAIRS:
        v = normal(fn(a, b))
        mu[(a, b)] = v
        mu[(b, a)] = v
    return mu


def _family_tensor(n: int, P: _Params) -> dict:
    x = {a: E.coord(a) for a in IDX}
    x2 = E.R2
    xc = lambda base, a: E.add(*[E.mul(P.t(base, a, c), x[c]) for c in IDX])  # lam^{ac} x^c
    quad = lambda base: E.add(*[E.mul(P.t(base, c, d), x[c], x[d]) for c in IDX for d in IDX])
    lin = lambda base: E.add(*[E.mul(P.v(base, c), x[c]) for c in IDX])
    eps = levi_civita

    if n == 1:
        trace = E.mul(quad("lam1"), E.power(x2, -1), P.get("phi1"))
        return _sym(lambda a, b: E.add(P.t("lam1", a, b), E.mul(E.const(_delta(a, b)), trace)))
    if n == 2:
        return _sym(lambda a, b: E.add(E.mul(P.v("lam2", a), x[b]), E.mul(P.v("lam2", b), x[a]),
                                       E.mul(E.const(_delta(a, b)), lin("lam3"), P.get("phi2"))))
    if n == 3:
        def f3(a, b):
            return E.add(*[E.mul(E.const(eps(a, c, d)), P.t("lam3", c, b), x[d])
                           for c in IDX for d in IDX if eps(a, c, d)]
                         + [E.mul(E.const(eps(b, c, d)), P.t("lam3", c, a), x[d])
                            for c in IDX for d in IDX if eps(b, c, d)])
        return _sym(f3)
    if n == 4:
        def f4(a, b):
            return E.add(*[E.mul(E.const(eps(b, c, d)), x[a], x[c], P.v("lam4", d))
                           for c in IDX for d in IDX if eps(b, c, d)]
                         + [E.mul(E.const(eps(a, c, d)), x[b], x[c], P.v("lam4", d))
                            for c in IDX for d in IDX if eps(a, c, d)])
        return _sym(f4)
    if n == 5:
        return _sym(lambda a, b: E.add(E.mul(E.const(_delta(a, b)), x2, P.get("phi5")),
                                       E.mul(P.get("k"), E.sub(E.mul(x[a], x[b]),
                                                               E.mul(E.const(_delta(a, b)), x2)))))
    if n == 6:
        # the printed "(x^2 lam5^{bc} + x^b lam5^{ac}) x^c" is read as
        # "(x^a lam5^{bc} + x^b lam5^{ac}) x^c"; the literal reading fails the identity
        return _sym(lambda a, b: E.add(
            E.mul(P.t("lam5", a, b), x2),
            E.neg(E.add(E.mul(x[a], xc("lam5", b)), E.mul(x[b], xc("lam5", a)))),
            E.mul(E.const(_delta(a, b)), quad("lam6"), P.get("phi6"))))
    if n == 7:
        return _sym(lambda a, b: E.add(
            E.mul(E.add(E.mul(x[a], P.v("lam7", b)), E.mul(x[b], P.v("lam7", a))), x2),
            E.mul(E.const(-4), x[a], x[b], lin("lam7")),
            E.mul(E.const(_delta(a, b)), lin("lam8"), x2, P.get("phi7"))))
    if n == 8:
        def f8(a, b):
            first = E.add(*[E.mul(E.const(2 * eps(b, c, d)), x[a], P.t("lam8", d, m), x[c], x[m])
                            for c in IDX for d in IDX for m in IDX if eps(b, c, d)]
                          + [E.mul(E.const(2 * eps(a, c, d)), x[b], P.t("lam8", d, m), x[c], x[m])
                             for c in IDX for d in IDX for m in IDX if eps(a, c, d)])
            second = E.add(*[E.mul(E.const(eps(a, c, k)), P.t("lam8", b, k), x[c], x2)
                             for c in IDX for k in IDX if eps(a, c, k)]
                           + [E.mul(E.const(eps(b, c, k)), P.t("lam8", a, k), x[c], x2)
                              for c in IDX for k in IDX if eps(b, c, k)])
            return E.sub(first, second)
        return _sym(f8)
    if n == 9:
        q9 = quad("lam9")
        return _sym(lambda a, b: E.add(
            E.mul(P.t("lam9", a, b), E.power(x2, 2)),
            E.mul(E.const(-2), E.add(E.mul(x[a], xc("lam9", b)), E.mul(x[b], xc("lam9", a))), x2),
            E.mul(E.add(E.mul(E.const(4), x[a], x[b]), E.mul(E.const(_delta(a, b)), P.get("k"), x2)), q9),
            E.mul(E.const(_delta(a, b)), quad("lam10"), x2, P.get("phi9"))))
    raise ValueError(f"Killing family must be 1..9, got {n}")


def killing_family(n: int, params: dict | None = None, symbolic: bool = False,
                   certify: bool = True, policy: Policy | None = None) -> KillingTensor:
    """Tensor of family ``n``; unspecified parameters are 0 (or free symbols)."""
    if n not in FAMILY_SPEC:
        raise ValueError(f"Killing family must be 1..9, got {n}")
    P = _Params(family_parameter_names(n), params, symbolic)
    mu = _family_tensor(n, P)
    kt = KillingTensor(mu, n, dict(P.values))
    if certify:
        cert = check_killing_identity(mu, policy)
        if not cert.is_zero:
            raise KillingIdentityError(f"family {n} violates the Killing identity: {cert.to_json()}")
        kt.certificate = cert
    return kt


def _d(mu, a, b, c):
    return E.diff(mu[(a, b)], c)


def killing_residuals(mu: dict) -> dict:
    """Residuals of the third-order identity for each a <= b <= c."""
    tr = {c: E.add(*[_d(mu, n, n, c) for n in IDX], *[E.mul(E.const(2), _d(mu, c, n, n)) for n in IDX])
          for c in IDX}
    out = {}
    for a in IDX:
        for b in IDX:
            for c in IDX:
                if not (a <= b <= c):
                    continue
                lhs = E.mul(E.const(5), E.add(_d(mu, a, b, c), _d(mu, a, c, b), _d(mu, b, c, a)))
                rhs = E.add(E.mul(E.const(_delta(a, b)), tr[c]), E.mul(E.const(_delta(b, c)), tr[a]),
                            E.mul(E.const(_delta(a, c)), tr[b]))
                out[(a, b, c)] = E.sub(lhs, rhs)
    return out


def check_killing_identity(mu: dict, policy: Policy | None = None, seed: int = 0) -> Certificate:
    mu = _full(mu)
    certs = []
    for k, (idx, res) in enumerate(sorted(killing_residuals(mu).items())):
        c = zero_certificate(res, policy, derive_seed(seed, "killing", k))
        c.label = "".join(map(str, idx))
        certs.append(c)
    return combine(certs)


def _full(mu: dict) -> dict:
    out = {}
    for a in IDX:
        for b in IDX:
            v = mu.get((a, b), mu.get((b, a), E.ZERO))
            out[(a, b)] = E._e(v)
    return out


def rotate_tensor(mu: dict, R) -> dict:
    """``R mu(R^T x) R^T`` for a rational orthogonal 3x3 matrix ``R``."""
    R = [[Fraction(v) for v in row] for row in R]
    for i in range(3):
        for j in range(3):
            dot = sum(R[i][k] * R[j][k] for k in range(3))
            if dot != (1 if i == j else 0):
                raise ValueError("rotation matrix must be orthogonal")
    xs = [E.add(*[E.mul(E.const(R[k][i]), E.coord(k + 1)) for k in range(3)]) for i in range(3)]
    # (R^T x)_i = sum_k R[k][i] x_k

    def leaf(n):
        if isinstance(n, E.Coord):
            return xs[n.axis - 1]
        return None

    src = _full(mu)
    moved = {k: E.substitute(v, leaf) for k, v in src.items()}
    out = {}
    for a in IDX:
        for b in IDX:
            out[(a, b)] = normal(E.add(*[E.mul(E.const(R[a - 1][c - 1] * R[b - 1][d - 1]), moved[(c, d)])
                                         for c in IDX for d in IDX]))
    return out


# ---------------------------------------------------------------------------
# M-matrices
# ---------------------------------------------------------------------------

LINEAR_PARAMS = ("a", "b", "c", "d1", "d2", "lam1", "lam2", "lam3")
BILINEAR_N = ("nu11", "nu22", "nu33", "nu12", "nu21", "nu23", "nu32")
BILINEAR_PARAMS = BILINEAR_N + tuple(f"tnu_{a}{b}" for a, b in PAIRS)


@dataclass
class MMatrix:
    m: dict       # {(a, b): Expr}
    branch: str
    params: dict = field(default_factory=dict)

    def rows(self):
        return [[self.m[(a, b)] for b in IDX] for a in IDX]

    def determinant(self) -> E.Expr:
        return det3(self.m)

    def to_json(self):
        from .exprlang import serialize
        return {"branch": self.branch,
                "m": [[serialize(normal(v)) for v in row] for row in self.rows()]}


def det3(m: dict) -> E.Expr:
    """Cofactor expansion along the first row."""
    g = lambda a, b: m[(a, b)]
    terms = []
    for j, (p, q) in zip(IDX, ((2, 3), (1, 3), (1, 2))):
        minor = E.sub(E.mul(g(2, p), g(3, q)), E.mul(g(2, q), g(3, p)))
        sign = 1 if j % 2 == 1 else -1
        terms.append(E.mul(E.const(sign), g(1, j), minor))
    return E.add(*terms)


def _linear_matrix(P: _Params) -> dict:
    x1, x2, x3 = E.COORDS
    a, b, c = P.get("a"), P.get("b"), P.get("c")
    d1, d2 = P.get("d1"), P.get("d2")
    d3 = E.neg(E.add(d1, d2))  # d1 + d2 + d3 = 0 by definition of the d's
    l1, l2, l3 = P.get("lam1"), P.get("lam2"), P.get("lam3")
    m = {
        (1, 1): E.add(E.mul(E.const(-2), c, x3), E.mul(l1, x1)),
        (1, 2): E.add(E.mul(l2, x1), E.mul(d3, x3)),
        (1, 3): E.add(E.mul(a, x3), E.mul(d2, x2), E.mul(l3, x1)),
        (2, 1): E.add(E.mul(l1, x2), E.mul(d3, x3)),
        (2, 2): E.mul(l2, x2),
        (2, 3): E.add(E.mul(d1, x1), E.mul(l3, x2), E.mul(b, x3)),
        (3, 1): E.add(E.mul(c, x1), E.mul(d2, x2), E.mul(E.add(a, l1), x3)),
        (3, 2): E.add(E.mul(E.add(b, l2), x3), E.mul(d1, x1)),
        (3, 3): E.add(E.mul(l3, x3), E.mul(E.const(-2), a, x1), E.mul(E.const(-2), b, x2)),
    }
    return m


def n_matrices() -> dict:
    """The basis matrices N^{ab} as ``{label: {(row, col): Expr}}``.

    Labels 11, 22, 33 carry their entries as a subscript pair in the source
    table, labels 12 and 21 as a superscript pair; 23 and 32 follow from
    12 and 21 by the cyclic relabelling 1 -> 2 -> 3 -> 1.  The (3,2) entry
    of N^{21} is taken as -2 x1 x3 (the table repeats -2 x1 x2).
    """
    x1, x2, x3 = E.COORDS
    r2, rt2 = E.R2, E.RT2
    m = lambda *fs: E.mul(*fs)
    N = {
        11: {(1, 2): m(E.const(-1), x1, x2), (1, 3): m(E.const(-1), x1, x3), (2, 2): m(x1, x1), (3, 3): m(x1, x1)},
        22: {(1, 1): m(x2, x2), (3, 3): m(x2, x2), (2, 1): m(E.const(-1), x2, x1), (2, 3): m(E.const(-1), x2, x3)},
        33: {(3, 1): m(E.const(-1), x3, x1), (3, 2): m(E.const(-1), x3, x2), (3, 3): rt2},
        12: {(1, 1): m(E.const(-2), x1, x2), (1, 2): r2, (2, 1): E.sub(r2, m(E.const(2), x2, x2)),
             (3, 1): m(E.const(-2), x2, x3)},
        21: {(1, 2): E.sub(r2, m(E.const(2), x1, x1)), (2, 1): r2, (2, 2): m(E.const(-2), x1, x2),
             (3, 2): m(E.const(-2), x1, x3)},
    }
    N[23] = _cycle(N[12])
    N[32] = _cycle(N[21])
    return N


def _cycle(entries: dict) -> dict:
    perm = {1: 2, 2: 3, 3: 1}

    def leaf(n):
        return E.coord(perm[n.axis]) if isinstance(n, E.Coord) else None

    return {(perm[i], perm[j]): normal(E.substitute(v, leaf)) for (i, j), v in entries.items()}


def _bilinear_matrix(P: _Params) -> dict:
    N = n_matrices()
    m = {(a, b): [] for a in IDX for b in IDX}
    for label in (11, 22, 33, 12, 21, 23, 32):
        coef = P.get(f"nu{label}")
        for k, v in N[label].items():
            m[k].append(E.mul(coef, v))
    for a, b in PAIRS:
        coef = P.t("tnu", a, b)
        mult = E.const(1 if a == b else 2)  # tnu^{ab} and tnu^{ba} both multiply x_a x_b
        xx = E.mul(mult, coef, E.coord(a), E.coord(b))
        for i in IDX:
            m[(i, i)].append(xx)
    return {k: E.add(*v) for k, v in m.items()}


def build_m_matrix(branch: str, params: dict | None = None, symbolic: bool = True) -> MMatrix:
    """M-matrix of the linear or bilinear branch; unspecified parameters stay symbolic."""
    params = dict(params or {})
    if branch == "linear":
        if "d3" in params:
            raise KeyError("d3 is not free: it equals -(d1 + d2)")
        P = _Params(LINEAR_PARAMS, params, symbolic)
        m = _linear_matrix(P)
    elif branch == "bilinear":
        P = _Params(BILINEAR_PARAMS, params, symbolic)
        m = _bilinear_matrix(P)
    else:
        raise ValueError(f"unknown branch {branch!r}")
    return MMatrix({k: normal(v) for k, v in m.items()}, branch, dict(P.values))


@dataclass(frozen=True)
class BranchCondition:
    ident: str
    branch: str
    printed: str                 # the relation as stated in the source
    constraints: tuple           # ((param, expression text), ...) substitutions
    matrix: tuple | None = None  # explicit matrix rows (text) instead of params
    note: str = ""

    def substitutions(self) -> dict:
        """Constraints resolved against each other (later ones feed earlier ones)."""
        subs = {k: _parse(v) for k, v in self.constraints}
        for _ in range(len(subs) + 1):
            nxt = {k: normal(E.subs_params(v, subs)) for k, v in subs.items()}
            if nxt == subs:
                break
            subs = nxt
        return subs


def _zero(names):
    return tuple((n, "0") for n in names)


LINEAR_CONDITIONS = (
    BranchCondition("det4", "linear", "a=b=c=d_a=0", _zero(("a", "b", "c", "d1", "d2"))),
    BranchCondition("det6", "linear", "d1=-d2, c=0, lam1=lam2=0",
                    (("d1", "-d2"), ("c", "0"), ("lam1", "0"), ("lam2", "0"))),
    BranchCondition("det1", "linear", "a*d2=-b*c, b*lam1=-2*lam3",
                    (("d2", "-b*c/a"), ("lam3", "-b*lam1/2"))),
    BranchCondition("det2", "linear", "b*lam1=a*lam2, c=0", (("lam2", "b*lam1/a"), ("c", "0"))),
    BranchCondition("det3", "linear", "a=b=d_a=lam2=0", _zero(("a", "b", "d1", "d2", "lam2"))),
    BranchCondition("det5", "linear", "lam1*d1=-c*lam2, d1*lam3=-a*lam2, b=0",
                    (("d1", "-c*lam2/lam1"), ("lam3", "a*lam1/c"), ("b", "0"))),
)

# completions found by direct computation: the printed relations plus these
# extra constraints make the determinant vanish identically
LINEAR_COMPLETIONS = (
    BranchCondition("det1+", "linear", "det1 with b=0, d1=0, lam2=0",
                    (("d2", "-b*c/a"), ("lam3", "-b*lam1/2"), ("b", "0"), ("d1", "0"), ("lam2", "0")),
                    note="minimal completion of det1"),
    BranchCondition("det2+", "linear", "det2 with d1=d2=0",
                    (("lam2", "b*lam1/a"), ("c", "0"), ("d1", "0"), ("d2", "0")),
                    note="minimal completion of det2"),
    BranchCondition("det5+", "linear", "det5 with d2=0, lam2=0",
                    (("d1", "-c*lam2/lam1"), ("lam3", "a*lam1/c"), ("b", "0"), ("d2", "0"), ("lam2", "0")),
                    note="minimal completion of det5"),
)


def _bil(ident, printed, nus, note=""):
    cons = tuple((f"nu{k}", v) for k, v in nus.items())
    rest = tuple((n, "0") for n in BILINEAR_N if n[2:] not in {str(k) for k in nus})
    tn = tuple((f"tnu_{a}{b}", "0") for a, b in PAIRS)
    return BranchCondition(ident, "bilinear", printed, cons + rest + tn, note=note)


BILINEAR_CONDITIONS = tuple(
    [_bil(f"N{k}", f"N^{k} alone", {k: "nu"}) for k in (11, 22, 33, 12, 21, 23, 32)]
    + [
        _bil("ono1|nu3=0", "nu1 N11 + nu2 N22 (nu3 = 0)", {11: "nu1", 22: "nu2"}),
        _bil("ono2|nu5=nu6=0", "nu4 (N11 + N22) (nu5 = nu6 = 0)", {11: "nu4", 22: "nu4"}),
        _bil("ono3|nu7=nu8=0", "nu9 N23 (nu7 = nu8 = 0)", {23: "nu9"}),
        _bil("ono4|nu11=0", "nu10 (N11 + N22) + nu12 (N12 - N21)",
             {11: "nu10", 22: "nu10", 12: "nu12", 21: "-nu12"},
             note="worked example: nontrivial f iff nu11 = 0"),
        _bil("ono5|nu13=0", "nu14 (N12 - N21) + nu15 (N23 - N32)",
             {12: "nu14", 21: "-nu14", 23: "nu15", 32: "-nu15"}),
    ]
    + [BranchCondition("bc", "bilinear", "{K1,P1} + mu {K2,P2} + nu L3^2 reduced matrix", (),
                       matrix=(("2*(x3^2 + (1 + nu)*x2^2)", "-2*(mu + nu)*x1*x2", "-2*x1*x3"),
                               ("-2*(1 + nu)*x1*x2", "2*(mu + nu)*x1^2 + mu*x3^2", "-2*mu*x2*x3"),
                               ("0", "0", "0")),
                       note="matrix printed for the most complicated bilinear case")]
)

GENERIC_CONDITIONS = (
    BranchCondition("generic-linear", "linear", "no constraints", ()),
    BranchCondition("generic-bilinear", "bilinear", "no constraints", ()),
)


def all_conditions() -> list:
    return list(LINEAR_CONDITIONS + LINEAR_COMPLETIONS + BILINEAR_CONDITIONS + GENERIC_CONDITIONS)


def condition(ident: str) -> BranchCondition:
    for c in all_conditions():
        if c.ident == ident:
            return c
    raise KeyError(f"unknown branch condition {ident!r}")


def condition_matrix(cond: BranchCondition) -> MMatrix:
    if cond.matrix is not None:
        m = {(a, b): normal(_parse(cond.matrix[a - 1][b - 1])) for a in IDX for b in IDX}
        return MMatrix(m, cond.branch)
    return build_m_matrix(cond.branch, cond.substitutions(), symbolic=True)


def branch_determinant_check(cond: BranchCondition, policy: Policy | None = None,
                             seed: int = 0) -> Certificate:
    """Certify det(M) under the condition (remaining parameters symbolic)."""
    M = condition_matrix(cond)
    cert = zero_certificate(normal(M.determinant()), policy, derive_seed(seed, cond.ident))
    cert.label = cond.ident
    return cert
