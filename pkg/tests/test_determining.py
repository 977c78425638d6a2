"""Determining equations and eta recovery."""

import random

import pytest
import sympy as sp

from pdmint import expr as E
from pdmint.certify import certify_many
from pdmint.determining import (eta_gradient, full_residuals, gradient_field, recover_eta,
                                reduced_residuals)
from pdmint.diffop import (Hamiltonian, commutator, expand_generators, from_hamiltonian,
                           mu_matrix, to_selfadjoint_form)
from pdmint.exprlang import parse_expr, parse_operator
from pdmint.poly import to_ratfunc

from conftest import SX1, SX2, SX3, to_sympy


def _op(src):
    return expand_generators(parse_operator(src))


def _residuals(Q, f, V):
    return full_residuals(mu_matrix(Q), tuple(Q.coeff(a) for a in (1, 2, 3)),
                          Q.coeff((0, 0, 0)), f, V)


def _commutes(Q, f, V):
    C = commutator(from_hamiltonian(Hamiltonian(f, V)), Q)
    return certify_many(list(C.coeffs.values())).is_zero


# (f, V, operator) triples; the first few commute, the rest do not
CASES = [
    ("r^2", "c*r^2/x3^2", "{L1,L2} - 2*c*x1*x2/x3^2"),
    ("r^2", "c*r^2/x3^2", "L3"),
    ("x3^2", "c*x3^2/x1^2", "P2"),
    ("x3^2", "c*x3^2/x1^2", "P2^2"),
    ("r^2", "c", "D^2 + L1^2"),
    ("r^2", "c*r^2/x3^2", "{L1,L2} - 4*c*x1*x2/x3^2"),
    ("r^2", "c*r^2/x3^2", "L1"),
    ("x3^2", "c*x3^2/x1^2", "P1^2"),
    ("x3^2", "c*x3^2/x1^2", "{P1,D} + x1"),
    ("r^2", "x1/r", "L3^2"),
]


@pytest.mark.parametrize("f, V, q", CASES)
def test_residuals_vanish_iff_commutator_vanishes(f, V, q):
    f, V, Q = parse_expr(f), parse_expr(V), _op(q)
    assert _residuals(Q, f, V).certify().is_zero == _commutes(Q, f, V)


def test_known_integrals_commute():
    assert sum(_commutes(_op(q), parse_expr(f), parse_expr(V)) for f, V, q in CASES) == 5


def test_hamiltonian_is_its_own_integral():
    f, V = parse_expr("x3^2"), parse_expr("sin(phi) + x3/r")
    H = from_hamiltonian(Hamiltonian(f, V))
    assert _residuals(H, f, V).certify().is_zero


def test_failure_reports_equation_label():
    f, V, Q = parse_expr("r^2"), parse_expr("c*r^2/x3^2"), _op("L1")
    cert = _residuals(Q, f, V).certify()
    assert not cert.is_zero
    # a first-order operator only meets V in the scalar equation
    assert cert.to_json()["label"] == "scalar/eta"


def test_reduced_equations_for_selfadjoint_integral():
    f, V = parse_expr("r^2"), parse_expr("c*r^2/x3^2")
    sa = to_selfadjoint_form(_op("{L1,L2} - 2*c*x1*x2/x3^2"))
    assert certify_many(list(sa.defect)).is_zero
    assert reduced_residuals(sa.mu, sa.eta, f, V).certify().is_zero
    # the reduced eta equation gives back eta up to a constant
    eta = recover_eta(eta_gradient(sa.mu, f, V))
    assert eta is not None
    diff = sp.simplify(to_sympy(eta, {"c": sp.Symbol("c")}) - to_sympy(sa.eta, {"c": sp.Symbol("c")}))
    assert diff.free_symbols <= set()


def _grad(src):
    e = parse_expr(src)
    return [E.diff(e, a) for a in (1, 2, 3)]


@pytest.mark.parametrize("src", ["1/x3^2", "c1/rt + c2/r", "-2*c*ln(r)", "4*c*x1*x2/x3^2",
                                 "x3/r", "exp(2*phi)*x3^2/rt^2"])
def test_recover_eta_up_to_constant(src):
    eta = recover_eta(_grad(src))
    assert eta is not None
    syms = {p: sp.Symbol(p) for p in ("c", "c1", "c2")}
    d = to_sympy(eta, syms) - to_sympy(src, syms)
    pts = [(sp.Rational(3, 2), sp.Rational(1, 3), 2), (1, sp.Rational(5, 7), sp.Rational(1, 2))]
    vals = [d.subs(dict(zip((SX1, SX2, SX3), pt))) for pt in pts]
    for w in [dict(zip(syms.values(), (2, -3, 5))), dict(zip(syms.values(), (1, 7, -1)))]:
        assert abs(sp.N(vals[0].subs(w) - vals[1].subs(w), 50)) < 1e-40


def test_recover_eta_outside_dictionary():
    assert recover_eta(_grad("exp(r)")) is None


def test_recover_eta_rejects_curl():
    W = [parse_expr("x2"), E.ZERO, E.ZERO]
    g = gradient_field(W)
    assert not g.certify_curl().is_zero
    assert recover_eta(g) is None


def test_recover_eta_of_zero_gradient():
    eta = recover_eta([E.ZERO, E.ZERO, E.ZERO])
    assert eta is not None and to_ratfunc(eta).is_zero()


def test_gradient_radial_part_of_homogeneous_scalar():
    rng = random.Random(5)
    for src in ["x1*x2/x3^2", "x3/r", "r^2/rt^2"]:
        g = gradient_field(_grad(src))
        assert to_ratfunc(g.radial()).is_zero()
        assert g.certify_curl(seed=rng.randint(0, 99)).is_zero
