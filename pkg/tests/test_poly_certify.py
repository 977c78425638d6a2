"""Rational normal form, zero certificates and exact evaluation."""

from fractions import Fraction

import pytest
from hypothesis import given

from pdmint import expr as E
from pdmint.certify import (EXACT_ZERO, NON_ZERO, PROBABLY_ZERO, Policy, certify_many,
                            zero_certificate)
from pdmint.exprlang import parse_expr
from pdmint.numeric import EvalError, Point, UnboundParameter, evaluate, exact_value
from pdmint.poly import coefficient_rows, normal, to_ratfunc
from pdmint.scalar import Scalar

from conftest import params, points, rational_exprs


@given(rational_exprs, points, params)
def test_normal_form_preserves_value(e, p, c):
    a = evaluate(e, Point(p), {"c": c})
    b = evaluate(normal(e), Point(p), {"c": c})
    assert abs(a - b) <= 1e-40 * (1 + abs(a))


@given(rational_exprs, rational_exprs)
def test_normal_form_is_canonical_for_sums(a, b):
    assert normal(E.add(a, b)) == normal(E.add(b, a))
    assert to_ratfunc(E.sub(E.add(a, b), E.add(b, a))).is_zero()


def test_rationalized_square_roots():
    assert normal(parse_expr("r*r - x1^2 - x2^2 - x3^2")) == E.ZERO
    assert normal(parse_expr("1/r - r/(x1^2 + x2^2 + x3^2)")) == E.ZERO
    assert normal(parse_expr("rt^3 - rt*(x1^2 + x2^2)")) == E.ZERO


def test_exact_zero_for_rational_identity():
    e = parse_expr("(x1 + x2)^2 - x1^2 - 2*x1*x2 - x2^2")
    assert zero_certificate(e).verdict == EXACT_ZERO


def test_probably_zero_for_trig_identity():
    cert = zero_certificate(parse_expr("sin(phi)^2 + cos(phi)^2 - 1"))
    assert cert.verdict == PROBABLY_ZERO
    assert cert.points == Policy().points


def test_nonzero_has_reproducible_witness():
    e = parse_expr("x1 - x2 + c")
    a, b = zero_certificate(e, seed=7), zero_certificate(e, seed=7)
    assert a.verdict == NON_ZERO and a.witness == b.witness
    assert a.to_json() == b.to_json()


def test_tiny_algebraic_residual_is_not_probably_zero():
    # exact arithmetic refuses to call a nonzero algebraic expression zero
    e = parse_expr("1/10^60*x1")
    assert zero_certificate(e).verdict == NON_ZERO


def test_certify_many_aggregates():
    ok = [parse_expr("x1 - x1"), parse_expr("sin(theta)^2 + cos(theta)^2 - 1")]
    assert certify_many(ok).verdict == PROBABLY_ZERO
    assert certify_many(ok + [parse_expr("x3")]).verdict == NON_ZERO


def test_exact_value():
    assert exact_value(parse_expr("x1^2 + c/x2"), (1, 2, 3), {"c": 4}) == Scalar(3)
    with pytest.raises(EvalError):
        exact_value(parse_expr("1/(x1 - 1)"), (1, 2, 3))
    with pytest.raises(UnboundParameter):
        exact_value(parse_expr("c"), (1, 1, 1))
    with pytest.raises(TypeError):
        exact_value(parse_expr("r"), (1, 1, 1))


def test_point_validation():
    with pytest.raises(ValueError):
        Point((Fraction(1, 4), 1, 1))
    with pytest.raises(ValueError):
        Point((1, 1))


def test_coefficient_rows_solves_linear_identity():
    # u0*x1 + u1*x1*r == 3*x1 - 2*x1*r  forces u = (3, -2)
    rows = coefficient_rows([parse_expr("x1"), parse_expr("x1*r")], parse_expr("3*x1 - 2*x1*r"))
    sol = {}
    for row, rhs in rows:
        assert len(row) == 1
        (k, v), = row.items()
        sol[k] = rhs / v
    assert sol == {0: Scalar(3), 1: Scalar(-2)}
