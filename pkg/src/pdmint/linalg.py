"""Exact linear algebra over the Gaussian rationals.

Forward elimination is fraction-free (Bareiss) on Gaussian-integer rows;
only the final back-substitution divides.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm

from .scalar import Scalar


class GInt:
    """Minimal Gaussian integer used inside elimination."""
    __slots__ = ("a", "b")

    def __init__(self, a: int, b: int = 0):
        self.a, self.b = a, b

    def __mul__(self, o):
        return GInt(self.a * o.a - self.b * o.b, self.a * o.b + self.b * o.a)

    def __sub__(self, o):
        return GInt(self.a - o.a, self.b - o.b)

    def exact_div(self, o):
        n = o.a * o.a + o.b * o.b
        ra = self.a * o.a + self.b * o.b
        rb = self.b * o.a - self.a * o.b
        qa, ma = divmod(ra, n)
        qb, mb = divmod(rb, n)
        if ma or mb:
            raise ArithmeticError("inexact Gaussian-integer division in Bareiss step")
        return GInt(qa, qb)

    def is_zero(self):
        return not self.a and not self.b

    def to_scalar(self):
        return Scalar(self.a, self.b)


def _integer_row(row) -> list:
    den = 1
    for s in row:
        den = lcm(den, s.re.denominator, s.im.denominator)
    return [GInt(int(s.re * den), int(s.im * den)) for s in row]


def echelon(rows) -> tuple:
    """Fraction-free row echelon form; returns (rows of GInt, pivot columns)."""
    m = [_integer_row([Scalar.coerce(v) for v in r]) for r in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots = []
    prev = GInt(1)
    r = 0
    for c in range(ncols):
        if r >= len(m):
            break
        p = next((i for i in range(r, len(m)) if not m[i][c].is_zero()), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        piv = m[r][c]
        for i in range(r + 1, len(m)):
            mic = m[i][c]
            row_i = m[i]
            row_r = m[r]
            m[i] = [(piv * row_i[j] - mic * row_r[j]).exact_div(prev) if j >= c else GInt(0)
                    for j in range(ncols)]
        prev = piv
        pivots.append(c)
        r += 1
    return m[:r], pivots


def rref(rows) -> tuple:
    """Reduced row echelon form over Q(i); returns (rows of Scalar, pivots)."""
    ech, pivots = echelon(rows)
    red = [[g.to_scalar() for g in row] for row in ech]
    for k in range(len(red) - 1, -1, -1):
        c = pivots[k]
        inv = red[k][c].inverse()
        red[k] = [v * inv for v in red[k]]
        for i in range(k):
            f = red[i][c]
            if not f.is_zero():
                red[i] = [a - f * b for a, b in zip(red[i], red[k])]
    return red, pivots


def rank(rows) -> int:
    return len(echelon(rows)[1])


def nullspace(rows, ncols: int | None = None) -> list:
    """Basis of the right nullspace, one vector per free column, in reduced form."""
    if not rows:
        return [[Scalar(int(i == j)) for i in range(ncols)] for j in range(ncols or 0)]
    ncols = len(rows[0])
    red, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [Scalar(0)] * ncols
        v[f] = Scalar(1)
        for k, c in enumerate(pivots):
            v[c] = -red[k][f]
        basis.append(v)
    return basis


def solve(rows, rhs) -> list | None:
    """A particular solution of ``rows @ v = rhs`` (free variables zero), or None."""
    if not rows:
        return None
    aug = [list(r) + [Scalar.coerce(b)] for r, b in zip(rows, rhs)]
    red, pivots = rref(aug)
    n = len(rows[0])
    if pivots and pivots[-1] == n:
        return None
    v = [Scalar(0)] * n
    for k, c in enumerate(pivots):
        v[c] = red[k][n]
    return v


def rational_reconstruct(x, max_den: int = 10**6) -> Fraction:
    """Best rational approximation with bounded denominator (continued fractions)."""
    return Fraction(str(x)).limit_denominator(max_den) if not isinstance(x, Fraction) \
        else x.limit_denominator(max_den)


def _reduce(rows, rhs, pivot):
    piv: dict = {}  # column -> (row dict with pivot 1, rhs)
    for row, b in zip(rows, rhs):
        row = {c: Scalar.coerce(v) for c, v in row.items() if not Scalar.coerce(v).is_zero()}
        b = Scalar.coerce(b)
        for c in [c for c in row if c in piv]:
            f = row.get(c)
            if f is None or f.is_zero():
                continue
            prow, pb = piv[c]
            for k, v in prow.items():
                nv = row.get(k, Scalar(0)) - f * v
                if nv.is_zero():
                    row.pop(k, None)
                else:
                    row[k] = nv
            b = b - f * pb
        if not row:
            if not b.is_zero():
                return None
            continue
        if pivot == "first":
            c0 = min(row)
        else:
            c0 = min(row, key=lambda c: (len(str(row[c])), c))
        inv = row[c0].inverse()
        row = {k: v * inv for k, v in row.items()}
        b = b * inv
        for c, (prow, pb) in list(piv.items()):
            f = prow.get(c0)
            if f is None:
                continue
            for k, v in row.items():
                nv = prow.get(k, Scalar(0)) - f * v
                if nv.is_zero():
                    prow.pop(k, None)
                else:
                    prow[k] = nv
            piv[c] = (prow, pb - f * b)
        piv[c0] = (row, b)
    return piv


def sparse_nullspace(rows, ncols: int, pivot: str = "first") -> list:
    """Reduced nullspace basis of a sparse homogeneous system (one vector per free column)."""
    piv = _reduce(rows, [0] * len(rows), pivot)
    out = []
    for f in range(ncols):
        if f in piv:
            continue
        v = [Scalar(0)] * ncols
        v[f] = Scalar(1)
        for c, (prow, _) in piv.items():
            if f in prow:
                v[c] = -prow[f]
        out.append(v)
    return out


def sparse_solve(rows, rhs, pivot: str = "short"):
    """Particular solution of a sparse system, or None if inconsistent.

    ``rows`` is a list of ``{column: Scalar}`` dicts.  Pivot rows are kept
    fully reduced against each other (Gauss-Jordan), so eliminating a new
    row against them never reintroduces a pivot column.
    """
    piv = _reduce(rows, rhs, pivot)
    if piv is None:
        return None
    return {c: b for c, (_, b) in piv.items() if not b.is_zero()}
