"""Parser, serializer and the operator grammar."""

import json
from importlib import resources

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdmint import expr as E
from pdmint.exprlang import ParseError, parse_expr, parse_operator, serialize, serialize_operator
from pdmint.genexpr import Anti, Gen, generators_in, scalar_part
from pdmint.poly import to_ratfunc

from conftest import rational_exprs


def test_precedence_and_associativity():
    assert to_ratfunc(E.sub(parse_expr("-x1^2"), E.neg(E.power(E.X1, 2)))).is_zero()
    assert to_ratfunc(E.sub(parse_expr("2^3^2"), E.const(512))).is_zero()
    assert to_ratfunc(E.sub(parse_expr("x1/x2*x3"), E.mul(E.div(E.X1, E.X2), E.X3))).is_zero()
    assert to_ratfunc(E.sub(parse_expr("1 - 2 - 3"), E.const(-4))).is_zero()


def test_atoms_and_params():
    e = parse_expr("x1 + r + rt + phi + theta + i + c7")
    kinds = {type(n).__name__ for n in E.walk(e)}
    assert {"Coord", "Geom", "Param", "Const"} <= kinds
    assert E.params_of(e) == {"c7"}


def test_table_potentials_parse():
    e = parse_expr("x3^2/x1^2")
    assert to_ratfunc(E.sub(e, E.div(E.power(E.X3, 2), E.power(E.X1, 2)))).is_zero()
    e = parse_expr("c1*exp(-2*phi)*(r^2+x3^2)/rt^2")
    assert E.params_of(e) == {"c1"}
    assert not E.is_algebraic(e)


@pytest.mark.parametrize("src, offset", [("x1 +", 4), ("(x1", 3), ("x1 ^ x2", 5), ("sin x1", 4)])
def test_diagnostics(src, offset):
    with pytest.raises(ParseError) as exc:
        parse_expr(src)
    assert exc.value.diagnostics[0].offset == offset


def test_non_integer_exponent_and_floats():
    with pytest.raises(ParseError, match="integer"):
        parse_expr("x1^(1/2)")
    with pytest.raises(ParseError, match="floating"):
        parse_expr("0.5*x1")


@given(rational_exprs)
def test_round_trip(e):
    s = serialize(e)
    assert parse_expr(s) == e
    assert serialize(parse_expr(s)) == s


@given(st.lists(st.sampled_from(["x1", "+", "*", "(", ")", "^", "2", "-", "sin", "{", ",", "}",
                                 "P3", "c", "/", "i", "K1"]), max_size=12))
def test_fuzzed_tokens_parse_or_diagnose(tokens):
    src = " ".join(tokens)
    for fn in (parse_expr, parse_operator):
        try:
            fn(src)
        except ParseError as exc:
            assert exc.diagnostics


def test_operator_forms():
    g = parse_operator("{P3,K3} + 4*G")
    op, scal = scalar_part(g)
    assert isinstance(op, Anti) and E.params_of(scal) == {"G"}
    g = parse_operator("{L3,D} + 2*c*ln(r)")
    assert generators_in(g) == {"L3", "D"}
    assert parse_operator("L3") == Gen("L3")
    with pytest.raises(ParseError, match="generator"):
        parse_operator("P4")


def test_j_alias():
    g = parse_operator("J2^2", aliases={"J2": "L2"})
    assert generators_in(g) == {"L2"}


def test_operator_round_trip():
    for src in ["{P1,K1} + mu*{P2,K2} + 4*nu*r^2/x3^2", "P3*x1*x2*P3", "{P3,L3 + D} - 2*c/rt"]:
        g = parse_operator(src)
        assert parse_operator(serialize_operator(g)) == g


def test_every_catalog_string_parses():
    rows = json.loads(resources.files("pdmint").joinpath("data/catalog.json").read_text())
    aliases = {"J1": "L1", "J2": "L2", "J3": "L3"}
    for row in rows:
        for s in (row["f"], row["V"]):
            once = serialize(parse_expr(s))
            assert serialize(parse_expr(once)) == once
        for s in row["integrals"]:
            once = serialize_operator(parse_operator(s, aliases=aliases))
            assert serialize_operator(parse_operator(once)) == once
