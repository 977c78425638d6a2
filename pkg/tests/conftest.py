import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from pdmint import expr as E
from pdmint.certify import Policy

settings.register_profile("pdmint", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pdmint")


# acceptance lines, printed once at the end of the run
ACCEPTANCE = {}


@pytest.fixture
def record():
    def _record(n, ok, detail):
        ACCEPTANCE[n] = (ok, detail)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def policy():
    return Policy()


@pytest.fixture
def rng():
    return random.Random(12345)


_ATOMS = [E.X1, E.X2, E.X3, E.R, E.RT, E.param("c")]


def _leaf():
    small = st.fractions(min_value=-5, max_value=5, max_denominator=4).map(E.const)
    return st.one_of(st.sampled_from(_ATOMS), small)


def _grow(children):
    return st.one_of(
        st.lists(children, min_size=2, max_size=3).map(lambda xs: E.add(*xs)),
        st.lists(children, min_size=2, max_size=3).map(lambda xs: E.mul(*xs)),
        st.tuples(children, st.integers(-2, 3)).map(lambda t: _safe_power(*t)),
    )


def _safe_power(base, n):
    # keep negative powers on bases that cannot vanish in the sampling box
    if n < 0:
        base = E.add(base, E.mul(E.const(7), E.R2)) if not isinstance(base, E.Const) else E.R
    return E.power(base, n)


rational_exprs = st.recursive(_leaf(), _grow, max_leaves=8)

points = st.tuples(*[st.fractions(min_value=Fraction(1, 2), max_value=2, max_denominator=64)] * 3)

params = st.fractions(min_value=-3, max_value=3, max_denominator=16).filter(lambda v: v != 0)


# independent oracle: rebuild an expression in sympy from its text form
import sympy as _sp

SX1, SX2, SX3 = _sp.symbols("x1 x2 x3", positive=True)
_R = _sp.sqrt(SX1**2 + SX2**2 + SX3**2)
_RT = _sp.sqrt(SX1**2 + SX2**2)
SYMPY_LOCALS = {"x1": SX1, "x2": SX2, "x3": SX3, "r": _R, "rt": _RT,
                "phi": _sp.atan2(SX2, SX1), "theta": _sp.acos(SX3 / _R),
                "ln": _sp.log, "i": _sp.I, "I": _sp.I}


def to_sympy(e, params=None):
    from pdmint.exprlang import serialize
    text = e if isinstance(e, str) else serialize(e)
    local = dict(SYMPY_LOCALS)
    local.update(params or {})
    return _sp.sympify(text.replace("^", "**"), locals=local)
