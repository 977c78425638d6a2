"""Differential operators: composition, generators, inversion."""

from fractions import Fraction

import mpmath
import pytest
from hypothesis import given

from pdmint import expr as E
from pdmint.certify import certify_many
from pdmint.diffop import (INVERSION_SIGNS, DiffOp, Hamiltonian, OrderOverflow, commutator,
                           compose, expand_generators, from_hamiltonian, generator,
                           inversion_conjugate, levi_civita, to_selfadjoint_form)
from pdmint.exprlang import parse_expr, parse_operator
from pdmint.numeric import Point, evaluate
from pdmint.poly import to_ratfunc

from conftest import rational_exprs

I = E.IMAG


def _zero(op: DiffOp) -> bool:
    return all(to_ratfunc(c).is_zero() for c in op.coeffs.values())


def _same(a: DiffOp, b: DiffOp) -> bool:
    return _zero(a - b)


def _op(src):
    return expand_generators(parse_operator(src))


def test_leibniz_examples():
    out = compose(DiffOp.partial(1), DiffOp.scalar(E.X1))
    assert _same(out, DiffOp({(1, 0, 0): E.X1, (0, 0, 0): E.ONE}))
    assert _same(compose(generator("P3"), generator("P3")), DiffOp({(0, 0, 2): E.const(-1)}))
    with pytest.raises(OrderOverflow):
        compose(_op("P1^3"), _op("P2^2"))


def _fd_apply(op: DiffOp, psi, p):
    """Apply ``op`` to ``psi`` by finite differences with a rational step."""
    h = Fraction(1, 2 ** 20)
    ctx = mpmath.mp.clone()
    ctx.dps = 80

    def val(e, shift):
        cs = tuple(c + s * h for c, s in zip(p, shift))
        return evaluate(e, Point(cs, 70), ctx=ctx)

    total = 0
    hm = ctx.mpf(h.numerator) / h.denominator
    for alpha, c in op.coeffs.items():
        d = _stencil(lambda s: val(psi, s), alpha, hm)
        total += val(c, (0, 0, 0)) * d
    return total


def _stencil(f, alpha, h):
    # central differences, product over axes (orders up to 2 per axis)
    weights = {0: {0: 1}, 1: {1: 1 / (2 * h), -1: -1 / (2 * h)}, 2: {1: 1 / h ** 2, 0: -2 / h ** 2, -1: 1 / h ** 2}}
    total = 0
    for s1, w1 in weights[alpha[0]].items():
        for s2, w2 in weights[alpha[1]].items():
            for s3, w3 in weights[alpha[2]].items():
                total += w1 * w2 * w3 * f((s1, s2, s3))
    return total


def test_composition_matches_finite_difference_application():
    psi = parse_expr("x1*x3 + x2^2*x3/r")
    p = (Fraction(1), Fraction(1), Fraction(1))
    for a, b in [("D", "P3"), ("L1", "K2"), ("x1*P2", "P1")]:
        op = compose(_op(a), _op(b))
        exact = evaluate(op.apply(psi), Point(p))
        assert abs(exact - _fd_apply(op, psi, p)) < 1e-8 * (1 + abs(exact))


@given(rational_exprs, rational_exprs)
def test_compose_acts_like_sequential_application(a, b):
    A = DiffOp({(1, 0, 0): a, (0, 0, 0): b})
    B = DiffOp({(0, 1, 1): b, (0, 0, 1): a})
    psi = parse_expr("x1^2*x2*x3 + r")
    lhs = compose(A, B).apply(psi)
    rhs = A.apply(B.apply(psi))
    assert to_ratfunc(E.sub(lhs, rhs)).is_zero()


def test_commutator_basic_properties():
    H = from_hamiltonian(Hamiltonian(parse_expr("x3^2"), parse_expr("c*x3^2/x1^2")))
    assert _zero(commutator(H, H))
    A, B = _op("{P1,K2}"), _op("L3^2")
    assert _same(commutator(A, B), -commutator(B, A))


@pytest.mark.parametrize("a", [1, 2, 3])
def test_dilatation_scales_translations(a):
    assert _same(commutator(generator("D"), generator(f"P{a}")), generator(f"P{a}").scale(I))


@pytest.mark.parametrize("a", [1, 2, 3])
@pytest.mark.parametrize("b", [1, 2, 3])
def test_translation_boost_bracket(a, b):
    lhs = commutator(generator(f"P{a}"), generator(f"K{b}"))
    rhs = DiffOp()
    if a == b:
        rhs = generator("D").scale(E.mul(E.const(2), I))
    for c in (1, 2, 3):
        eps = levi_civita(a, b, c)
        if eps:
            rhs = rhs + generator(f"L{c}").scale(E.mul(E.const(-2 * eps), I))
    assert _same(lhs, rhs)


def test_hamiltonian_coefficients():
    H = from_hamiltonian(Hamiltonian(parse_expr("x3^2"), parse_expr("c*x3^2/x1^2")))
    assert H.coeff((2, 0, 0)) == E.neg(parse_expr("x3^2"))
    assert to_ratfunc(E.add(H.coeff(3), E.mul(E.const(2), E.X3))).is_zero()
    assert H.coeff(1) == E.ZERO
    lap = from_hamiltonian(Hamiltonian(E.ONE, E.ZERO))
    assert _same(lap, DiffOp({(2, 0, 0): -1, (0, 2, 0): -1, (0, 0, 2): -1}))


def test_scale_invariance_of_homogeneous_hamiltonians():
    for f, V in [("r^2*cos(theta)", "sin(phi) + x3/r"), ("x3^2", "x1*x2/rt^2")]:
        H = from_hamiltonian(Hamiltonian(parse_expr(f), parse_expr(V)))
        C = commutator(generator("D"), H)
        assert certify_many(list(C.coeffs.values())).is_zero


def test_selfadjoint_defect():
    sa = to_selfadjoint_form(_op("{P3,K3}"))
    assert all(to_ratfunc(d).is_zero() for d in sa.defect)
    q = DiffOp({(1, 0, 0): E.ONE, (2, 0, 0): E.X1})
    # mu^{11} = x1, so d_b mu^{1b} = 1 and the defect vanishes; adding 1 more breaks it
    assert all(to_ratfunc(d).is_zero() for d in to_selfadjoint_form(q).defect)
    q2 = DiffOp({(1, 0, 0): E.const(2), (2, 0, 0): E.X1})
    assert not to_ratfunc(to_selfadjoint_form(q2).defect[0]).is_zero()
    with pytest.raises(ValueError):
        to_selfadjoint_form(_op("P1^3"))


def _q(a, b):
    return _op(" + ".join(f"P{c}*x{a}*x{b}*P{c}" for c in (1, 2, 3)))


def test_quadratic_identities_that_hold():
    # derived by matching principal symbols, then checked at every order
    for a, b in [(1, 2), (1, 3), (2, 3)]:
        lhs = _op(f"-{{L{a},L{b}}} - 1/2*{{P{a},K{b}}} - 1/2*{{P{b},K{a}}}")
        assert _same(lhs, _q(a, b).scale(E.const(2)))
    lhs = _op("{P1,K1} + {P2,K2} - 2*L3^2 + 2*D^2 - 3/2")
    assert _same(lhs, _q(3, 3).scale(E.const(2)))


def test_unsymmetrized_pair_cannot_match():
    # Q^ab is symmetric in a,b while {P_a,K_b} is not
    lhs = _op("{L1,L2} + {P1,K2}")
    swapped = _op("{L2,L1} + {P2,K1}")
    assert not _same(lhs, swapped)


def test_inversion_signs_and_involution():
    for name in ("P1", "P3", "K2", "L1", "L3", "D"):
        image = inversion_conjugate(generator(name))
        partner = {"P": "K", "K": "P"}.get(name[0], name[0]) + name[1:]
        assert _same(image, generator(partner).scale(E.const(INVERSION_SIGNS[name[0]])))
    for src in ["{P3,D} - 2*c/r", "L3^2 + x1/r", "{P1,K2} + sin(phi)"]:
        q = _op(src)
        back = inversion_conjugate(inversion_conjugate(q))
        assert certify_many(list((back - q).coeffs.values())).is_zero


def test_dilatation_flips_under_inversion():
    # P <-> K with L fixed forces D -> -D through [P_a, K_a] = 2i D
    lhs = inversion_conjugate(commutator(generator("P1"), generator("K1")))
    assert _same(lhs, commutator(generator("K1"), generator("P1")))
    assert INVERSION_SIGNS["D"] == -1
