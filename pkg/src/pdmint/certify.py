"""Zero certificates: exact normal form first, seeded multi-point evaluation otherwise."""

from __future__ import annotations

import hashlib
import os
import random
from dataclasses import dataclass, field

from . import expr as E
from .numeric import EvalError, Point, context, evaluate, random_param, random_point
from .poly import to_ratfunc

EXACT_ZERO = "ExactZero"
PROBABLY_ZERO = "ProbablyZero"
NON_ZERO = "NonZero"


def default_precision() -> int:
    try:
        return max(32, int(os.environ.get("PDMINT_PRECISION", "64")))
    except ValueError:
        return 64


@dataclass(frozen=True)
class Policy:
    points: int = 20
    precision: int = field(default_factory=default_precision)
    threshold: int = 40

    def to_json(self):
        return {"points": self.points, "precision": self.precision, "threshold": self.threshold}


class CertificationError(RuntimeError):
    pass


@dataclass
class Certificate:
    verdict: str
    points: int = 0
    precision: int = 0
    max_residual: str | None = None
    witness: dict | None = None
    residual: str | None = None
    label: str | None = None

    @property
    def is_zero(self) -> bool:
        return self.verdict in (EXACT_ZERO, PROBABLY_ZERO)

    def to_json(self) -> dict:
        out = {"verdict": self.verdict}
        if self.verdict == PROBABLY_ZERO:
            out.update(points=self.points, precision=self.precision, max_residual=self.max_residual)
        if self.verdict == NON_ZERO:
            out.update(witness=self.witness, residual=self.residual, precision=self.precision)
        if self.label:
            out["label"] = self.label
        return out


def derive_seed(root: int, *labels) -> int:
    h = hashlib.sha256(repr((int(root),) + tuple(str(x) for x in labels)).encode()).digest()
    return int.from_bytes(h[:8], "big")


def _nstr(v, digits=12) -> str:
    import mpmath
    return mpmath.nstr(v, digits)


def _sample(e: E.Expr, policy: Policy, rng: random.Random, wanted: int, stop_on_nonzero=False):
    """Evaluate at ``wanted`` good points; returns list of (abs, value, point, bindings)."""
    ctx = context(policy.precision)
    names = sorted(E.params_of(e))
    out = []
    failures = 0
    while len(out) < wanted:
        p = random_point(rng, policy.precision)
        binds = {n: random_param(rng) for n in names}
        try:
            v = evaluate(e, p, binds, ctx)
        except (EvalError, ZeroDivisionError):
            failures += 1
            if failures > 10 * max(wanted, 1):
                raise CertificationError("evaluation kept failing; resampling budget exhausted")
            continue
        a = abs(v)
        out.append((a, v, p, binds))
        if stop_on_nonzero and a >= ctx.mpf(10) ** (-policy.threshold):
            break
    return out, ctx


def _witness(p: Point, binds: dict) -> dict:
    return {"point": p.to_json(), "bindings": {k: str(v) for k, v in sorted(binds.items())}}


def zero_certificate(e: E.Expr, policy: Policy | None = None, seed: int = 0,
                     bindings: dict | None = None, exact: bool = True) -> Certificate:
    """Certify whether ``e`` vanishes identically on the sampling box."""
    policy = policy or Policy()
    if bindings:
        e = E.subs_params(e, bindings)
    rng = random.Random(seed)
    algebraic = False
    if exact:
        if to_ratfunc(e).is_zero():
            return Certificate(EXACT_ZERO, precision=policy.precision)
        algebraic = E.is_algebraic(e)
    samples, ctx = _sample(e, policy, rng, policy.points)
    eps = ctx.mpf(10) ** (-policy.threshold)
    best = max(samples, key=lambda s: s[0])
    if best[0] < eps and algebraic:
        # the normal form is canonical here, so keep looking for a witness
        more, ctx = _sample(e, policy, rng, 10 * policy.points, stop_on_nonzero=True)
        best = max(more + samples, key=lambda s: s[0])
    if best[0] < eps and not algebraic:
        return Certificate(PROBABLY_ZERO, points=len(samples), precision=policy.precision,
                           max_residual=_nstr(best[0], 5))
    return Certificate(NON_ZERO, precision=policy.precision, witness=_witness(best[2], best[3]),
                       residual=_nstr(best[1]), max_residual=_nstr(best[0], 5))


def combine(certs: list, label: str | None = None) -> Certificate:
    """Aggregate component certificates: NonZero wins, then ProbablyZero."""
    bad = [c for c in certs if c.verdict == NON_ZERO]
    if bad:
        out = bad[0]
        return Certificate(out.verdict, out.points, out.precision, out.max_residual,
                           out.witness, out.residual, label or out.label)
    prob = [c for c in certs if c.verdict == PROBABLY_ZERO]
    if prob:
        worst = max(prob, key=lambda c: float(c.max_residual or 0))
        return Certificate(PROBABLY_ZERO, max(c.points for c in prob), worst.precision,
                           worst.max_residual, label=label)
    prec = certs[0].precision if certs else 0
    return Certificate(EXACT_ZERO, precision=prec, label=label)


def certify_many(exprs, policy: Policy | None = None, seed: int = 0, bindings=None,
                 labels=None) -> Certificate:
    certs = []
    for k, e in enumerate(exprs):
        c = zero_certificate(e, policy, derive_seed(seed, k), bindings)
        if labels is not None:
            c.label = str(labels[k])
        certs.append(c)
        if c.verdict == NON_ZERO:
            break
    return combine(certs)
