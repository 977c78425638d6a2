"""The integral finder and generator recognition."""

import random

import pytest
import sympy

from pdmint.certify import certify_many
from pdmint.diffop import DiffOp, Hamiltonian, commutator, expand_generators, from_hamiltonian
from pdmint.exprlang import parse_expr, parse_operator, serialize_operator
from pdmint.genexpr import scalar_part
from pdmint.determining import f_equation
from pdmint.solve import (FindOptions, TranscendentalInput, ansatz_space, constraint_nullspace,
                          find_integrals, in_span, recognize)

from conftest import SX1, SX2, SX3, to_sympy

SYMS = (SX1, SX2, SX3)


def _op(src):
    return expand_generators(parse_operator(src))


def _strip(Q):
    return Q - DiffOp.scalar(Q.coeff((0, 0, 0)))


def differential_span(target_src, found):
    """Coefficients writing the printed operator part through found integrals, or None."""
    op, _ = scalar_part(parse_operator(target_src))
    return in_span(_strip(expand_generators(op)), [_strip(q.operator) for q in found])


def _self_verifies(q, f, V):
    C = commutator(from_hamiltonian(Hamiltonian(parse_expr(f), parse_expr(V))), q.operator)
    return certify_many(list(C.coeffs.values())).is_zero


@pytest.fixture(scope="module")
def item1():
    return find_integrals("r^2", "c*r^2/x3^2", (2,))


@pytest.fixture(scope="module")
def item8():
    return find_integrals("x3^2", "c*x3^2/x1^2", (0, 1, 2), FindOptions(partners=True))


def test_every_result_self_verifies(item1, item8):
    for f, V, found in [("r^2", "c*r^2/x3^2", item1), ("x3^2", "c*x3^2/x1^2", item8)]:
        assert found
        assert all(q.status == "verified" for q in found)
        assert all(_self_verifies(q, f, V) for q in found)


def test_item1_space_contains_listed_integrals(item1):
    assert differential_span("{L1,L2} + 4*c*x1*x2/x3^2", item1) is not None
    assert differential_span("L3^2", item1) is not None
    assert any(q.rendering == "{L1,L2} - 2*c*x1*x2/x3^2" for q in item1)


def test_item8_listed_second_order_integrals(item8):
    for src in ["{L3,P1} + 4*c*x2/x1^2", "{P1,K1} + 4*c*r^2/x1^2", "{L3,K1} + 4*c*x2*r^2/x1^2"]:
        assert differential_span(src, item8) is not None, src
    assert {q.origin for q in item8} == {"direct", "inversion"}


def test_constant_potential_block():
    found = find_integrals("x3^2", "17*x3^2", (0,))
    # the f-constraint alone leaves a three-dimensional space of constant mu
    space = ansatz_space((0,))
    cols = [[v for _, v in sorted(f_equation(t, parse_expr("x3^2")).items())] for _, t in space.basis]
    mus = [space.combine(v) for v in constraint_nullspace(cols)]
    rows = [[sympy.nsimplify(to_sympy(mu[ab])) for ab in sorted(mu)] for mu in mus]
    assert sympy.Matrix(rows).rank() == 3
    assert sorted(q.rendering for q in found) == ["P1^2", "P2^2", "{P1,P2}"]


def test_monotone_in_degrees():
    small = find_integrals("x3^2", "c*x3^2/x1^2", (0,))
    big = find_integrals("x3^2", "c*x3^2/x1^2", (0, 1))
    assert len(big) >= len(small)
    for q in small:
        assert in_span(q.operator, [p.operator for p in big]) is not None


def test_seed_independence():
    a = find_integrals("r^2", "c*r^2/x3^2", (2,), FindOptions(seed=1))
    b = find_integrals("r^2", "c*r^2/x3^2", (2,), FindOptions(seed=99))
    assert [q.rendering for q in a] == [q.rendering for q in b]


def test_radial_mass_has_no_constant_tensor_integrals():
    # f = r^2: a constant mu must kill the f-equation, and none does
    assert find_integrals("r^2", "0", (0,)) == []


def test_transcendental_input_needs_fallback():
    with pytest.raises(TranscendentalInput):
        find_integrals("r^2", "sin(phi)", (2,))


def test_recognize_round_trip():
    rng = random.Random(11)
    names = ["P1", "L2", "D", "K3", "{P1,K1}", "L3^2", "{L1,D}"]
    for _ in range(8):
        terms = [f"{rng.randint(1, 5)}*{rng.choice(names)}" for _ in range(3)]
        src = " + ".join(terms) + " + x1/x3"
        q = _op(src)
        rec = recognize(q)
        assert rec is not None
        back = _op(rec.text())
        assert certify_many(list((back - q).coeffs.values())).is_zero


def test_recognize_rejects_non_generator_operator():
    q = DiffOp({(2, 0, 0): parse_expr("x1^3")})
    assert recognize(q) is None


def test_found_eta_matches_recomputed_gradient(item1):
    for q in item1:
        for a, w in zip((1, 2, 3), q.W):
            c = sympy.Symbol("c")
            assert sympy.simplify(sympy.diff(to_sympy(q.eta, {"c": c}), SYMS[a - 1])
                                  - to_sympy(w, {"c": c})) == 0


def test_rendering_parses(item8):
    for q in item8:
        assert q.rendering is not None
        assert serialize_operator(parse_operator(q.rendering))
