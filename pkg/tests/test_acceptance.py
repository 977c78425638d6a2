"""Acceptance suite: one recorded line per criterion, printed after the run."""

import random
import time
from fractions import Fraction
from itertools import combinations

import pytest

from pdmint import catalog as C
from pdmint import expr as E
from pdmint.certify import Policy, certify_many
from pdmint.diffop import DiffOp, commutator, expand_generators, generator, levi_civita
from pdmint.exprlang import parse_operator, serialize
from pdmint.genexpr import scalar_part
from pdmint.killing import (BILINEAR_CONDITIONS, GENERIC_CONDITIONS, LINEAR_CONDITIONS,
                            branch_determinant_check, family_parameter_names, killing_family)
from pdmint.poly import to_ratfunc
from pdmint.solve import FindOptions, find_integrals, in_span, recognize

I = E.IMAG
GENERATORS = [f"P{a}" for a in (1, 2, 3)] + [f"L{a}" for a in (1, 2, 3)] + ["D"] + [f"K{a}" for a in (1, 2, 3)]
ANCHORS = ["T1.1", "T1.2", "T1.5", "T1.7", "T2.1", "T2.8", "T2.14", "T2.15", "T2.16", "T2.17"]
PAIRED = ["T1.2", "T1.3", "T1.4", "T2.4", "T2.5", "T2.6", "T2.7", "T2.8", "T2.11", "T2.12"]


def _op(src):
    return expand_generators(parse_operator(src))


def _exact_zero(op: DiffOp) -> bool:
    return certify_many(list(op.coeffs.values())).verdict == "ExactZero"


def _q(a, b):
    return _op(" + ".join(f"P{c}*x{a}*x{b}*P{c}" for c in (1, 2, 3)))


@pytest.fixture(scope="module")
def full_run():
    t = time.perf_counter()
    out = C.verify_catalog(policy=Policy(points=20, precision=64), seed=0, negatives=50)
    out["elapsed"] = time.perf_counter() - t
    return out


def test_criterion_1_killing_suite(record):
    t = time.perf_counter()
    failures = []
    for n in range(1, 10):
        rng = random.Random(n)
        for _ in range(5):
            params = {p: str(Fraction(rng.randint(-9, 9), rng.randint(1, 7))) for p in family_parameter_names(n)}
            if killing_family(n, params).certificate.verdict != "ExactZero":
                failures.append(n)
    dt = time.perf_counter() - t
    ok = not failures and dt < 30
    record(1, ok, f"45 tensors, failures {failures}, {dt:.1f} s")
    assert ok


def test_criterion_2_conformal_algebra(record):
    t = time.perf_counter()
    closed = 0
    for A, B in combinations(GENERATORS, 2):
        rec = recognize(commutator(generator(A), generator(B)))
        if rec is not None and not rec.bilinear and to_ratfunc(rec.scalar).is_zero():
            closed += 1
    ident = []
    for a in (1, 2, 3):
        lhs = commutator(generator("D"), generator(f"P{a}"))
        ident.append(_exact_zero(lhs - generator(f"P{a}").scale(I)))
        for b in (1, 2, 3):
            rhs = generator("D").scale(E.const(2 * (a == b))).scale(I)
            for c in (1, 2, 3):
                rhs = rhs - generator(f"L{c}").scale(E.const(2 * levi_civita(a, b, c))).scale(I)
            ident.append(_exact_zero(commutator(generator(f"P{a}"), generator(f"K{b}")) - rhs))
    dt = time.perf_counter() - t
    ok = closed == 45 and all(ident) and dt < 30
    record(2, ok, f"{closed}/45 brackets close, {sum(ident)}/{len(ident)} identities ExactZero, {dt:.1f} s")
    assert ok


def test_criterion_3_quadratic_identities(record):
    printed = [(f"{{L{a},L{b}}} + {{P{a},K{b}}}", _q(a, b).scale(E.const(2)))
               for a, b in [(1, 2), (1, 3), (2, 3), (2, 1), (3, 1), (3, 2)]]
    printed.append(("{P1,K1} + {P2,K2} + L3^2", _q(3, 3).scale(E.const(2))))
    results = [_exact_zero(_op(src) - rhs) for src, rhs in printed]
    # forms that do hold, for the report
    sym = all(_exact_zero(_op(f"-{{L{a},L{b}}} - 1/2*{{P{a},K{b}}} - 1/2*{{P{b},K{a}}}")
                          - _q(a, b).scale(E.const(2))) for a, b in [(1, 2), (1, 3), (2, 3)])
    ok = all(results)
    record(3, ok, f"printed identities hold {sum(results)}/{len(results)}; "
                  f"-{{La,Lb}} - ({{Pa,Kb}} + {{Pb,Ka}})/2 = 2Q^ab holds: {sym}")
    assert ok


def test_criterion_4_determinant_branches(record):
    t = time.perf_counter()
    printed = {c.ident: branch_determinant_check(c).verdict for c in LINEAR_CONDITIONS}
    degenerate = {c.ident: branch_determinant_check(c).verdict for c in BILINEAR_CONDITIONS}
    generic = [branch_determinant_check(c) for c in GENERIC_CONDITIONS]
    dt = time.perf_counter() - t
    bad = sorted(k for k, v in {**printed, **degenerate}.items() if v != "ExactZero")
    gen_ok = all(g.verdict == "NonZero" and g.to_json()["witness"] is not None for g in generic)
    ok = not bad and gen_ok and dt < 60
    record(4, ok, f"branches not vanishing: {bad or 'none'}; generic NonZero with witness: {gen_ok}; {dt:.1f} s")
    assert ok


def test_criterion_5_anchor_rows(record, full_run):
    rows = full_run["summary"]["rows"]
    bad = [a for a in ANCHORS if rows[a] != C.VERIFIED]
    ok = not bad
    record(5, ok, f"anchors not Verified: {bad or 'none'}")
    assert ok


def test_criterion_6_full_catalog(record, full_run):
    s = full_run["summary"]
    reps = full_run["reports"]
    unconfirmed = sorted({r["row"] for r in reps for i in r["integrals"]
                          if i["verdict"] == C.DISCREPANT and not i["evidence"]["confirmed"]})
    skipped = [r for r in reps if r["row"] == "T1.11"]
    skip_ok = bool(skipped) and skipped[0]["verdict"] == C.SKIPPED and \
        bool(skipped[0]["checks"].get("compatibility_pde")) and skipped[0]["checks"]["a_equals_b"]["holds"]
    negs = full_run["negatives"]
    ok = (s["unexplained"] == 0 and not unconfirmed and skip_ok and s["equivalence"]
          and len(negs) == 50 and s["negatives_rejected"] and full_run["elapsed"] < 900)
    record(6, ok, f"verified {s['verified']}, discrepant {s['discrepant']}, skipped {s['skipped']}, "
                  f"unexplained {s['unexplained']}; equivalence {s['equivalence']}; "
                  f"negatives rejected {s['negatives_rejected']} ({len(negs)}); {full_run['elapsed']:.0f} s")
    assert ok


def _strip(Q):
    return Q - DiffOp.scalar(Q.coeff((0, 0, 0)))


def _rediscovered(src, found):
    """The found combination matching the printed operator part, rendered, or None."""
    op, _ = scalar_part(parse_operator(src))
    coeffs = in_span(_strip(expand_generators(op)), [_strip(q.operator) for q in found])
    if coeffs is None:
        return None
    Q = DiffOp()
    for c, q in zip(coeffs, found):
        if not c.is_zero():
            Q = Q + q.operator.scale(E.Const(c))
    rec = recognize(Q.simplify())
    return rec.text() if rec is not None else serialize(Q.coeff((0, 0, 0)))


def test_criterion_7_rediscovery(record):
    one = find_integrals("r^2", "c*r^2/x3^2", (2,))
    eight = find_integrals("x3^2", "c*x3^2/x1^2", (0, 1, 2), FindOptions(partners=True))
    sound = all(q.certificate.is_zero for q in one + eight)
    has_one = _rediscovered("{L1,L2} + 4*c*x1*x2/x3^2", one)
    listed = C.find_row("T2.8").integrals
    hits = {src: _rediscovered(src, eight) for src in listed}
    found = [s for s, v in hits.items() if v is not None]
    ok = sound and has_one is not None and len(found) >= 3
    detail = "; ".join(f"{s} -> {v}" for s, v in hits.items() if v is not None)
    record(7, ok, f"item 1: {has_one}; item 8: {len(found)}/5 ({detail}); soundness {sound}")
    assert ok


def test_criterion_8_inversion_pairing(record):
    bad, good = [], 0
    for ident in PAIRED:
        row = C.find_row(ident)
        inst = C.instantiate(row, C.default_bindings(row, 0)[0])
        for i, j in row.pairs:
            res = C.inversion_check(inst, i, j)
            if res["sign"] is None:
                bad.append(f"{ident}[{i},{j}] (operator parts pair with sign {res.get('operator_part_sign')})")
            else:
                good += 1
    ok = not bad
    record(8, ok, f"{good} pairs map into their partner; failing: {bad or 'none'}")
    assert ok
