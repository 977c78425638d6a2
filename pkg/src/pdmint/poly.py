"""Generalized rational normal form.

An :class:`~pdmint.expr.Expr` is mapped to a fraction ``num / den`` where

* ``num`` is a sparse polynomial over the Gaussian rationals in the
  coordinates, the parameters, the algebraic atoms ``r`` and ``rt`` (each of
  degree at most one, using ``r^2 = x1^2+x2^2+x3^2`` and ``rt^2 = x1^2+x2^2``)
  and opaque kernels (``phi``, ``theta`` and elementary-function nodes);
* ``den`` is a product of monic irreducible polynomials free of ``r`` and
  ``rt`` (those are rationalized away).

Restricted to expressions without kernels this representation is canonical,
so equal fields give identical normal forms.  With kernels it is still sound
for zero testing in one direction: a zero numerator means the expression
vanishes identically.
"""

from __future__ import annotations

from functools import lru_cache

from . import expr as E
from .scalar import Scalar

_ATOMS: dict = {}

KEY_R = E.R.sort_key()
KEY_RT = E.RT.sort_key()


def _atom_key(atom: E.Expr):
    k = atom.sort_key()
    _ATOMS.setdefault(k, atom)
    return k


def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    out = dict(a)
    for k, e in b:
        out[k] = out.get(k, 0) + e
    return tuple(sorted(out.items()))


class Poly:
    """Sparse polynomial: ``{monomial: Scalar}``; a monomial is a sorted
    tuple of ``(atom key, exponent)`` pairs."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms=None):
        self.terms = terms if terms is not None else {}
        self._hash = None

    @staticmethod
    def const(c) -> "Poly":
        c = Scalar.coerce(c)
        return Poly({(): c}) if not c.is_zero() else Poly()

    @staticmethod
    def atom(a: E.Expr) -> "Poly":
        return Poly({((_atom_key(a), 1),): Scalar(1)})

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def const_value(self) -> Scalar:
        return self.terms.get((), Scalar(0))

    def variables(self) -> set:
        return {k for m in self.terms for k, _ in m}

    def degree_in(self, key) -> int:
        return max((e for m in self.terms for k, e in m if k == key), default=0)

    def __eq__(self, other):
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m)
            if v is None:
                out[m] = c
            else:
                v = v + c
                if v.is_zero():
                    del out[m]
                else:
                    out[m] = v
        return Poly(out)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def scale(self, c: Scalar) -> "Poly":
        if c.is_zero():
            return Poly()
        if c.is_one():
            return self
        return Poly({m: v * c for m, v in self.terms.items()})

    def __mul__(self, other: "Poly") -> "Poly":
        if not self.terms or not other.terms:
            return Poly()
        out: dict = {}
        reduce_needed = False
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                v = out.get(m)
                c = c1 * c2
                out[m] = c if v is None else v + c
        out = {m: c for m, c in out.items() if not c.is_zero()}
        for m in out:
            for k, e in m:
                if e >= 2 and (k == KEY_R or k == KEY_RT):
                    reduce_needed = True
                    break
            if reduce_needed:
                break
        p = Poly(out)
        return _reduce_geom(p) if reduce_needed else p

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative power of a polynomial")
        result = Poly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def substitute_sign(self, key) -> "Poly":
        """Replace the atom ``key`` by its negative."""
        out = {}
        for m, c in self.terms.items():
            e = dict(m).get(key, 0)
            out[m] = -c if e % 2 else c
        return Poly(out)

    def leading(self):
        """Lex-leading (monomial, coefficient) with atoms ordered by key."""
        vs = sorted(self.variables())
        best = None
        best_vec = None
        for m, c in self.terms.items():
            d = dict(m)
            vec = tuple(d.get(v, 0) for v in vs)
            if best_vec is None or vec > best_vec:
                best_vec, best = vec, (m, c)
        return best

    def sorted_items(self):
        def key(item):
            m, _ = item
            return (-sum(e for _, e in m), m)
        return sorted(self.terms.items(), key=key)


_S_POLY = None
_ST_POLY = None


def _geom_polys():
    global _S_POLY, _ST_POLY
    if _S_POLY is None:
        x = [Poly.atom(c) for c in E.COORDS]
        _ST_POLY = x[0] * x[0] + x[1] * x[1]
        _S_POLY = _ST_POLY + x[2] * x[2]
    return _S_POLY, _ST_POLY


def _reduce_geom(p: Poly) -> Poly:
    S, ST = _geom_polys()
    out = Poly()
    for m, c in p.terms.items():
        d = dict(m)
        er = d.get(KEY_R, 0)
        et = d.get(KEY_RT, 0)
        if er < 2 and et < 2:
            out = out + Poly({m: c})
            continue
        d[KEY_R] = er % 2
        d[KEY_RT] = et % 2
        base = Poly({tuple(sorted((k, e) for k, e in d.items() if e)): c})
        if er >= 2:
            base = base * S ** (er // 2)
        if et >= 2:
            base = base * ST ** (et // 2)
        out = out + base
    return out


def divexact(a: Poly, b: Poly):
    """Return ``a / b`` if ``b`` divides ``a`` exactly, else None."""
    if b.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    if a.is_zero():
        return Poly()
    vs = sorted(a.variables() | b.variables())
    idx = {v: i for i, v in enumerate(vs)}
    n = len(vs)

    def dense(m):
        vec = [0] * n
        for k, e in m:
            vec[idx[k]] = e
        return tuple(vec)

    def sparse(vec):
        return tuple((vs[i], e) for i, e in enumerate(vec) if e)

    bd = {dense(m): c for m, c in b.terms.items()}
    rem = {dense(m): c for m, c in a.terms.items()}
    lt = max(bd)
    lc_inv = bd[lt].inverse()
    q = {}
    while rem:
        m = max(rem)
        d = tuple(x - y for x, y in zip(m, lt))
        if any(x < 0 for x in d):
            return None
        c = rem[m] * lc_inv
        q[sparse(d)] = c
        for bm, bc in bd.items():
            t = tuple(x + y for x, y in zip(d, bm))
            v = rem.get(t, Scalar(0)) - c * bc
            if v.is_zero():
                rem.pop(t, None)
            else:
                rem[t] = v
        if len(q) > 100000:
            return None
    return Poly(q)


# ---------------------------------------------------------------------------
# factoring of denominator bases (sympy over QQ)
# ---------------------------------------------------------------------------

def _monic(p: Poly):
    """Split p = lc * monic(p) with the lex-leading coefficient."""
    _, lc = p.leading()
    return lc, p.scale(lc.inverse())


_FACTOR_CACHE: dict = {}


def factor(p: Poly):
    """Return ``(content, [(monic irreducible, multiplicity), ...])``.

    Pure monomials are split without sympy; polynomials with non-real
    coefficients are kept whole after extracting the monomial content.
    """
    if p.is_zero():
        raise ZeroDivisionError("cannot factor the zero polynomial")
    cached = _FACTOR_CACHE.get(p)
    if cached is not None:
        return cached
    # monomial content
    common = None
    for m in p.terms:
        d = dict(m)
        if common is None:
            common = d
        else:
            common = {k: min(e, d.get(k, 0)) for k, e in common.items() if d.get(k, 0)}
    factors: list = []
    content = Scalar(1)
    rest = p
    if common:
        rest = Poly({tuple((k, e - common.get(k, 0)) for k, e in m if e - common.get(k, 0)): c
                     for m, c in p.terms.items()})
        for k, e in sorted(common.items()):
            factors.append((Poly({((k, 1),): Scalar(1)}), e))
    if rest.is_const():
        content = rest.const_value()
    elif len(rest.terms) == 1:
        # cannot happen after content removal, kept for safety
        content, mon = _monic(rest)
        factors.append((mon, 1))
    elif any(not c.is_real() for c in rest.terms.values()):
        content, mon = _monic(rest)
        factors.append((mon, 1))
    else:
        c2, fl = _sympy_factor(rest)
        content = c2
        factors.extend(fl)
    merged: dict = {}
    for f, e in factors:
        merged[f] = merged.get(f, 0) + e
    out = (content, sorted(merged.items(), key=lambda fe: _poly_sort_key(fe[0])))
    if len(_FACTOR_CACHE) > 50000:
        _FACTOR_CACHE.clear()
    _FACTOR_CACHE[p] = out
    return out


def _poly_sort_key(p: Poly):
    return tuple(sorted((m, (c.re, c.im)) for m, c in p.terms.items()))


def _sympy_factor(p: Poly):
    import sympy
    vs = sorted(p.variables())
    syms = sympy.symbols(f"v0:{len(vs)}")
    idx = {v: i for i, v in enumerate(vs)}
    expr = 0
    for m, c in p.terms.items():
        t = sympy.Rational(c.re.numerator, c.re.denominator)
        for k, e in m:
            t = t * syms[idx[k]] ** e
        expr += t
    coeff, fl = sympy.factor_list(sympy.Poly(expr, *syms), domain="QQ")
    content = Scalar(_frac(coeff))
    out = []
    for f, e in fl:
        terms = {}
        for mon, c in f.terms():
            m = tuple((vs[i], ei) for i, ei in enumerate(mon) if ei)
            terms[m] = Scalar(_frac(c))
        fp = Poly(terms)
        lc, mon_p = _monic(fp)
        content = content * lc ** e
        out.append((mon_p, e))
    return content, out


def _frac(c):
    from fractions import Fraction
    return Fraction(int(c.numerator), int(c.denominator))


# ---------------------------------------------------------------------------
# rational functions
# ---------------------------------------------------------------------------

class RatFunc:
    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: tuple = ()):
        self.num = num
        self.den = den  # tuple of (monic factor Poly, multiplicity), sorted

    @staticmethod
    def const(c) -> "RatFunc":
        return RatFunc(Poly.const(c))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __eq__(self, other):
        return isinstance(other, RatFunc) and self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))


def _den_dict(d):
    return dict(d)


def _den_tuple(d: dict) -> tuple:
    return tuple(sorted(((f, e) for f, e in d.items() if e > 0), key=lambda fe: _poly_sort_key(fe[0])))


def _den_product(d: dict) -> Poly:
    out = Poly.const(1)
    for f, e in d.items():
        if e > 0:
            out = out * f ** e
    return out


def _cancel(num: Poly, den: dict) -> RatFunc:
    if num.is_zero():
        return RatFunc(Poly())
    for f in list(den):
        e = den[f]
        while e > 0:
            q = divexact(num, f)
            if q is None:
                break
            num = q
            e -= 1
        den[f] = e
    return RatFunc(num, _den_tuple(den))


def rf_add(a: RatFunc, b: RatFunc) -> RatFunc:
    if a.num.is_zero():
        return b
    if b.num.is_zero():
        return a
    if a.den == b.den:
        return _cancel(a.num + b.num, dict(a.den)) if a.den else RatFunc(a.num + b.num)
    da, db = dict(a.den), dict(b.den)
    lcm = dict(da)
    for f, e in db.items():
        lcm[f] = max(lcm.get(f, 0), e)
    ma = {f: e - da.get(f, 0) for f, e in lcm.items()}
    mb = {f: e - db.get(f, 0) for f, e in lcm.items()}
    num = a.num * _den_product(ma) + b.num * _den_product(mb)
    return _cancel(num, lcm)


def rf_neg(a: RatFunc) -> RatFunc:
    return RatFunc(-a.num, a.den)


def rf_mul(a: RatFunc, b: RatFunc) -> RatFunc:
    if a.num.is_zero() or b.num.is_zero():
        return RatFunc(Poly())
    num = a.num * b.num
    if not a.den and not b.den:
        return RatFunc(num)
    den = dict(a.den)
    for f, e in b.den:
        den[f] = den.get(f, 0) + e
    # only factors introduced by the other operand can cancel
    return _cancel(num, den)


def rf_inv(a: RatFunc) -> RatFunc:
    if a.num.is_zero():
        raise ZeroDivisionError("inverse of the zero expression")
    num = a.num
    top = _den_product(dict(a.den))
    # rationalize the algebraic atoms r, rt out of the new denominator
    for key in (KEY_R, KEY_RT):
        if num.degree_in(key):
            conj = num.substitute_sign(key)
            top = top * conj
            num = num * conj
    content, fl = factor(num)
    top = top.scale(content.inverse())
    return _cancel(top, dict(fl))


def rf_pow(a: RatFunc, n: int) -> RatFunc:
    if n == 0:
        return RatFunc.const(1)
    if n < 0:
        a = rf_inv(a)
        n = -n
    num = a.num ** n
    den = {f: e * n for f, e in a.den}
    return RatFunc(num, _den_tuple(den)) if not den else _cancel(num, den)


@lru_cache(maxsize=131072)
def to_ratfunc(e: E.Expr) -> RatFunc:
    if isinstance(e, E.Const):
        return RatFunc.const(e.value)
    if isinstance(e, (E.Coord, E.Param, E.Geom)):
        return RatFunc(Poly.atom(e))
    if isinstance(e, E.Sum):
        acc = RatFunc(Poly())
        for t in e.terms:
            acc = rf_add(acc, to_ratfunc(t))
        return acc
    if isinstance(e, E.Product):
        acc = RatFunc.const(1)
        for f in e.factors:
            acc = rf_mul(acc, to_ratfunc(f))
        return acc
    if isinstance(e, E.IntPower):
        return rf_pow(to_ratfunc(e.base), e.exponent)
    if isinstance(e, E.Apply):
        arg = normal(e.arg)
        node = E.apply(e.fn, arg)
        if not isinstance(node, E.Apply):
            return to_ratfunc(node)
        return RatFunc(Poly.atom(node))
    raise TypeError(f"unsupported node {type(e).__name__}")


def poly_to_expr(p: Poly) -> E.Expr:
    terms = []
    for m, c in p.sorted_items():
        fs = [E.Const(c)] if not c.is_one() else []
        for k, ex in m:
            fs.append(E.power(_ATOMS[k], ex))
        terms.append(E.mul(*fs) if fs else E.ONE)
    return E.add(*terms)


def from_ratfunc(rf: RatFunc) -> E.Expr:
    num = poly_to_expr(rf.num)
    if not rf.den:
        return num
    return E.mul(num, *[E.power(poly_to_expr(f), -m) for f, m in rf.den])


@lru_cache(maxsize=131072)
def normal(e: E.Expr) -> E.Expr:
    """Canonical rational-normal-form rebuild of ``e``."""
    return from_ratfunc(to_ratfunc(e))


def numerator_is_zero(e: E.Expr) -> bool:
    return to_ratfunc(e).is_zero()


def coefficient_rows(columns, rhs=None) -> list:
    """Exact linear equations for ``sum_k u_k columns[k] == rhs`` identically.

    Every Expr is brought to rational normal form over a common
    denominator; each numerator monomial (in coordinates, r, rt, kernels
    and parameters) yields one row ``({k: coefficient}, rhs coefficient)``.
    """
    rfs = [to_ratfunc(E._e(c)) for c in columns]
    target = to_ratfunc(E._e(rhs)) if rhs is not None else RatFunc(Poly())
    lcm: dict = {}
    for rf in rfs + [target]:
        for f, e in rf.den:
            lcm[f] = max(lcm.get(f, 0), e)

    def lift(rf):
        d = dict(rf.den)
        return rf.num * _den_product({f: e - d.get(f, 0) for f, e in lcm.items()})

    rows: dict = {}
    for k, rf in enumerate(rfs):
        if rf.is_zero():
            continue
        for mono, c in lift(rf).terms.items():
            rows.setdefault(mono, [{}, Scalar(0)])[0][k] = c
    if not target.is_zero():
        for mono, c in lift(target).terms.items():
            rows.setdefault(mono, [{}, Scalar(0)])[1] = c
    return [(r, b) for r, b in rows.values()]
