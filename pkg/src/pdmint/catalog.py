"""The built-in catalog of superintegrable systems and its verification.

Each row is transcribed as printed: f, V, a list of integrals in the
operator grammar, function slots (F, G, R) that depend on one angle only,
and free constants.  Verification instantiates the slots, expands every
integral and certifies ``[H, Q] = 0``.  A failing integral is reported as
Discrepant only when both an exact residual (where one exists) and a
numeric witness agree that it fails.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from itertools import product as iproduct

from . import expr as E
from .certify import (EXACT_ZERO, NON_ZERO, Certificate, Policy, certify_many, combine,
                      derive_seed, zero_certificate)
from .determining import full_residuals, gradient_field, recover_eta
from .diffop import (DiffOp, Hamiltonian, commutator, expand_generators, from_hamiltonian,
                     generator, inversion_conjugate)
from .exprlang import parse_expr, parse_operator, serialize, serialize_operator
from .genexpr import GenExpr, OpSum, Scal, scalar_part, substitute_scalars
from .linalg import sparse_solve
from .numeric import random_param
from .poly import coefficient_rows, normal, to_ratfunc
from .scalar import Scalar

CATALOG_SHA256 = "55f56d6623647b27aba50beb6653ff178ca26dd91f5f980904baca1176b7fd69"
ALIASES = {"J1": "L1", "J2": "L2", "J3": "L3"}

VERIFIED = "Verified"
DISCREPANT = "Discrepant"
UNEXPLAINED = "Unexplained"
SKIPPED = "Skipped"

# default slot values per angle; R gets the lighter set
DEFAULT_SLOT_VALUES = {"phi": ("1", "sin(phi)"), "theta": ("1", "cos(theta)^2"),
                       ("R", "theta"): ("1", "cos(theta)")}
PARAM_DRAWS = 3


class CatalogIntegrityError(RuntimeError):
    pass


class SlotError(ValueError):
    """A slot was bound to a function of the wrong variables."""


@dataclass(frozen=True)
class Slot:
    name: str
    kind: str  # "phi" or "theta"


@dataclass
class CatalogRow:
    table: int
    item: int
    f: str
    V: str
    integrals: list
    slots: list
    params: list
    pairs: list = field(default_factory=list)
    anchor: bool = False
    notes: str = ""
    skip: str | None = None
    compatibility_pde: str | None = None

    @property
    def ident(self) -> str:
        return f"T{self.table}.{self.item}"

    @staticmethod
    def from_json(d: dict) -> "CatalogRow":
        return CatalogRow(
            table=int(d["table"]), item=int(d["item"]), f=d["f"], V=d["V"],
            integrals=list(d["integrals"]),
            slots=[Slot(s["name"], s["kind"]) for s in d.get("slots", [])],
            params=list(d.get("params", [])), pairs=[tuple(p) for p in d.get("pairs", [])],
            anchor=bool(d.get("anchor", False)), notes=d.get("notes", ""),
            skip=d.get("skip"), compatibility_pde=d.get("compatibility_pde"))

    def to_json(self) -> dict:
        out = {"table": self.table, "item": self.item, "f": self.f, "V": self.V,
               "integrals": self.integrals,
               "slots": [{"name": s.name, "kind": s.kind} for s in self.slots],
               "params": self.params, "pairs": [list(p) for p in self.pairs],
               "anchor": self.anchor, "notes": self.notes}
        if self.skip:
            out["skip"] = self.skip
        if self.compatibility_pde:
            out["compatibility_pde"] = self.compatibility_pde
        return out


def undeclared_symbols(row: CatalogRow) -> set:
    """Parameters used by the templates or integrals but not declared by the row."""
    used = set(E.params_of(parse_expr(row.f))) | set(E.params_of(parse_expr(row.V)))

    def note(e):
        used.update(E.params_of(e))
        return e

    for src in row.integrals:
        substitute_scalars(parse_operator(src, aliases=ALIASES), note)
    declared = set(row.params) | {s.name for s in row.slots} | {"V"}
    return used - declared


def _catalog_bytes() -> bytes:
    return resources.files("pdmint").joinpath("data/catalog.json").read_bytes()


def load_catalog(path=None) -> list:
    """Rows from ``path``, or the built-in file checked against its hash."""
    if path is None:
        raw = _catalog_bytes()
        digest = hashlib.sha256(raw).hexdigest()
        if digest != CATALOG_SHA256:
            raise CatalogIntegrityError(f"catalog.json hash {digest} does not match the embedded hash")
    else:
        with open(path, "rb") as fh:
            raw = fh.read()
    rows = [CatalogRow.from_json(d) for d in json.loads(raw)]
    for row in rows:
        missing = undeclared_symbols(row)
        if missing:
            raise ValueError(f"{row.ident}: undeclared symbols {sorted(missing)}")
    return rows


_BUILTIN = None


def builtin_catalog() -> list:
    global _BUILTIN
    if _BUILTIN is None:
        _BUILTIN = load_catalog()
    return list(_BUILTIN)


def find_row(ident: str, rows=None) -> CatalogRow:
    key = ident.upper().replace(" ", "")
    if not key.startswith("T"):
        key = "T" + key
    key = key.replace(",", ".")
    for row in rows or builtin_catalog():
        if row.ident == key:
            return row
    raise KeyError(f"no catalog row {ident!r}")


# ---------------------------------------------------------------------------
# bindings and instantiation
# ---------------------------------------------------------------------------

@dataclass
class Binding:
    slots: dict = field(default_factory=dict)   # name -> Expr or source string
    params: dict = field(default_factory=dict)  # name -> rational

    def to_json(self) -> dict:
        out = {"slots": {k: serialize(_as_expr(v)) for k, v in sorted(self.slots.items())}}
        if self.params:
            out["params"] = {k: str(v) for k, v in sorted(self.params.items())}
        return out

    @staticmethod
    def from_json(d: dict) -> "Binding":
        params = {k: Fraction(v) for k, v in d.get("params", {}).items()}
        return Binding(dict(d.get("slots", {})), params)


def _as_expr(v) -> E.Expr:
    return parse_expr(v) if isinstance(v, str) else E._e(v)


@dataclass
class Instance:
    row: CatalogRow
    binding: Binding
    f: E.Expr
    V: E.Expr
    integrals: list      # GenExpr with slots and V substituted
    H: DiffOp

    def operator(self, k: int) -> DiffOp:
        return expand_generators(self.integrals[k])


def _radial(e):
    return E.add(*[E.mul(E.coord(a), E.diff(e, a)) for a in (1, 2, 3)])


def _slot_residuals(kind: str, e: E.Expr) -> list:
    """Derivatives that vanish iff ``e`` is a function of the slot's angle only."""
    if kind == "phi":
        return [_radial(e), E.diff(e, 3)]
    if kind == "theta":
        return [_radial(e), E.sub(E.mul(E.coord(1), E.diff(e, 2)), E.mul(E.coord(2), E.diff(e, 1)))]
    raise ValueError(f"unknown slot kind {kind!r}")


def check_slot(slot: Slot, value, policy: Policy | None = None, seed: int = 0) -> Certificate:
    return certify_many(_slot_residuals(slot.kind, _as_expr(value)), policy,
                        derive_seed(seed, "slot", slot.name))


def instantiate(row: CatalogRow, binding: Binding | None = None, policy: Policy | None = None,
                seed: int = 0) -> Instance:
    """Substitute slot functions and constants into a row.

    Unbound slots are an error; unbound constants stay symbolic and are
    sampled generically by the certificates.
    """
    binding = binding or Binding()
    values = {}
    for s in row.slots:
        if s.name not in binding.slots:
            raise SlotError(f"{row.ident}: slot {s.name} is not bound")
        e = _as_expr(binding.slots[s.name])
        cert = check_slot(s, e, policy, seed)
        if not cert.is_zero:
            raise SlotError(f"{row.ident}: slot {s.name} must depend on {s.kind} only, "
                            f"got {serialize(e)}")
        values[s.name] = e
    values.update({k: E.const(v) for k, v in binding.params.items()})
    f = E.subs_params(parse_expr(row.f), values)
    V = E.subs_params(parse_expr(row.V), values)
    local = dict(values, V=V)
    ints = [substitute_scalars(parse_operator(s, aliases=ALIASES), lambda e: E.subs_params(e, local))
            for s in row.integrals]
    return Instance(row, binding, f, V, ints, from_hamiltonian(Hamiltonian(f, V)))


def slot_bindings(row: CatalogRow) -> list:
    """Cartesian product of the default slot values; constants stay symbolic."""
    if not row.slots:
        return [Binding()]
    choices = [DEFAULT_SLOT_VALUES.get((s.name, s.kind), DEFAULT_SLOT_VALUES[s.kind]) for s in row.slots]
    return [Binding({s.name: v for s, v in zip(row.slots, combo)}) for combo in iproduct(*choices)]


def default_bindings(row: CatalogRow, seed: int = 0, draws: int = PARAM_DRAWS) -> list:
    """The default suite: slot products, each with ``draws`` seeded rational constant sets."""
    names = [p for p in row.params if p not in ("Vt", "etat")]
    if not names:
        return slot_bindings(row)
    rng = random.Random(derive_seed(seed, row.ident, "params"))
    out = []
    for b in slot_bindings(row):
        for _ in range(draws):
            out.append(Binding(dict(b.slots), {p: random_param(rng) for p in names}))
    return out


# ---------------------------------------------------------------------------
# per-integral verification
# ---------------------------------------------------------------------------

def _components(op: DiffOp) -> list:
    return [c for _, c in op.items()]


def commutator_certificate(H: DiffOp, Q: DiffOp, policy: Policy | None = None, seed: int = 0):
    C = commutator(H, Q)
    labels = ["d" + "".join(str(a) * n for a, n in zip((1, 2, 3), al)) for al, _ in C.items()]
    return C, certify_many(_components(C), policy, seed, labels=labels)


def residual_certificate(inst: Instance, Q: DiffOp, policy: Policy | None = None, seed: int = 0):
    """Certificate of the determining-equation residuals of ``Q``."""
    t2 = Q.tensor(2)
    mu = {(a, b): t2.get((a, b), E.ZERO) for a in (1, 2, 3) for b in (1, 2, 3)}
    xi = tuple(Q.coeff(a) for a in (1, 2, 3))
    return full_residuals(mu, xi, Q.coeff((0, 0, 0)), inst.f, inst.V).certify(policy, seed)


def _dual_confirmation(C: DiffOp, policy: Policy, seed: int) -> dict:
    """Exact and numeric evidence that the commutator does not vanish."""
    comps = [(al, c) for al, c in C.items() if not to_ratfunc(c).is_zero()]
    if not comps:
        return {"symbolic": EXACT_ZERO, "numeric": None, "confirmed": False}
    al, c = min(comps, key=lambda kv: (E.count_nodes(kv[1]), kv[0]))
    label = "d" + "".join(str(a) * n for a, n in zip((1, 2, 3), al))
    algebraic = E.is_algebraic(c)
    symbolic = "NonZeroNormalForm" if algebraic else "not applicable (transcendental)"
    num = zero_certificate(c, policy, derive_seed(seed, "witness"), exact=False)
    confirmed = num.verdict == NON_ZERO
    return {"component": label, "residual": serialize(normal(c)) if algebraic else serialize(c),
            "symbolic": symbolic, "numeric": num.to_json(), "confirmed": confirmed}


def scalar_factor(inst: Instance, g: GenExpr, policy: Policy | None = None, seed: int = 0):
    """The number s making ``operator part + s * printed scalar`` an integral, or None."""
    op, eta = scalar_part(g)
    if op is None or to_ratfunc(eta).is_zero():
        return None
    C_op = commutator(inst.H, expand_generators(op))
    C_eta = commutator(inst.H, DiffOp.scalar(eta))
    alphas = set(C_op.coeffs) | set(C_eta.coeffs)
    rows = []
    for al in alphas:
        rows += coefficient_rows([C_eta.coeff(al)], E.neg(C_op.coeff(al)))
    sol = sparse_solve([r for r, _ in rows], [b for _, b in rows])
    if sol is None:
        return None
    s = sol.get(0, Scalar(0))
    total = C_op + C_eta.scale(E.Const(s))
    if not certify_many(_components(total), policy, derive_seed(seed, "factor")).is_zero:
        return None
    return s


def corrected_scalar(inst: Instance, g: GenExpr, policy: Policy | None = None, seed: int = 0):
    """Diagnose the operator part of ``g``: ``(status, scalar or None)``.

    status is "completed" when a scalar making it an integral was found,
    "higher-order" when the second- and third-order equations already fail,
    "no-potential" when the required eta gradient has nonzero curl and
    "not-recovered" when eta exists but lies outside the search basis.
    """
    op, _ = scalar_part(g)
    if op is None:
        return "no-operator", None
    Q = expand_generators(op)
    t2 = Q.tensor(2)
    mu = {(a, b): t2.get((a, b), E.ZERO) for a in (1, 2, 3) for b in (1, 2, 3)}
    xi = tuple(Q.coeff(a) for a in (1, 2, 3))
    res = full_residuals(mu, xi, E.ZERO, inst.f, inst.V)
    if not combine([zero_certificate(v, policy, derive_seed(seed, *k))
                    for k, v in res.items() if k[0] in ("third", "second")]).is_zero:
        return "higher-order", None
    inv = E.power(E.mul(E.const(-2), inst.f), -1)
    W = gradient_field([E.mul(res.first_order[a], inv) for a in (1, 2, 3)])
    if not W.certify_curl(policy, seed).is_zero:
        return "no-potential", None
    total = recover_eta(W, policy=policy, seed=seed)
    if total is None:
        return "not-recovered", None
    # W is the gradient of the whole scalar coefficient; Q already carries part of it
    eta = normal(E.sub(total, Q.coeff((0, 0, 0))))
    _, cert = commutator_certificate(inst.H, Q + DiffOp.scalar(eta), policy, derive_seed(seed, "fix"))
    return ("completed", eta) if cert.is_zero else ("not-recovered", None)


@dataclass
class IntegralReport:
    index: int
    source: str
    verdict: str
    certificate: Certificate | None = None
    residual_certificate: Certificate | None = None
    evidence: dict | None = None
    scalar_factor: Scalar | None = None
    corrected: str | None = None
    operator_part: str | None = None

    @property
    def equivalent(self) -> bool:
        if self.certificate is None or self.residual_certificate is None:
            return True
        return self.certificate.is_zero == self.residual_certificate.is_zero

    def to_json(self) -> dict:
        out = {"index": self.index, "source": self.source, "verdict": self.verdict}
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_json()
        if self.residual_certificate is not None:
            out["determining_residuals"] = self.residual_certificate.to_json()
        if self.evidence is not None:
            out["evidence"] = self.evidence
        if self.scalar_factor is not None:
            out["scalar_factor"] = str(self.scalar_factor)
        if self.corrected is not None:
            out["corrected"] = self.corrected
        if self.operator_part is not None:
            out["operator_part"] = self.operator_part
        return out


def verify_integral(inst: Instance, k: int, policy: Policy | None = None, seed: int = 0,
                    diagnose: bool = True) -> IntegralReport:
    policy = policy or Policy()
    g = inst.integrals[k]
    Q = expand_generators(g)
    s = derive_seed(seed, inst.row.ident, k)
    C, cert = commutator_certificate(inst.H, Q, policy, s)
    rcert = residual_certificate(inst, Q, policy, derive_seed(s, "residuals"))
    rep = IntegralReport(k, inst.row.integrals[k], VERIFIED, cert, rcert)
    if cert.is_zero:
        return rep
    rep.evidence = _dual_confirmation(C, policy, s)
    rep.verdict = DISCREPANT if rep.evidence["confirmed"] else UNEXPLAINED
    if diagnose:
        rep.scalar_factor = scalar_factor(inst, g, policy, s)
        op, printed = scalar_part(g)
        if rep.scalar_factor is not None:
            rep.operator_part = "completed"
            eta = normal(E.mul(E.Const(rep.scalar_factor), printed))
        else:
            rep.operator_part, eta = corrected_scalar(inst, g, policy, s)
        if eta is not None and op is not None:
            rep.corrected = serialize_operator(OpSum((op, Scal(eta))))
    return rep


# ---------------------------------------------------------------------------
# per-row checks
# ---------------------------------------------------------------------------

def scale_invariance(inst: Instance, policy=None, seed=0) -> Certificate:
    """``[D, H] = 0``."""
    _, cert = commutator_certificate(inst.H, generator("D"), policy, derive_seed(seed, "D"))
    return cert


def homogeneity(inst: Instance, policy=None, seed=0) -> Certificate:
    """f has degree 2 and V degree 0."""
    lam = E.const(2)
    return certify_many([E.sub(E.scale_coords(inst.f, lam), E.mul(E.const(4), inst.f)),
                         E.sub(E.scale_coords(inst.V, lam), inst.V)], policy, derive_seed(seed, "hom"))


def inversion_check(inst: Instance, i: int, j: int, policy=None, seed=0) -> dict:
    """Does inversion map integral i onto plus or minus integral j?"""
    Qi, Qj = inst.operator(i), inst.operator(j)
    image = inversion_conjugate(Qi)
    out = {"pair": [i, j], "sign": None}
    for sign in (1, -1):
        diff = image - Qj.scale(E.const(sign))
        cert = certify_many(_components(diff.simplify()), policy, derive_seed(seed, "inv", i, j, sign))
        if cert.is_zero:
            out.update(sign=sign, certificate=cert.to_json())
            return out
    op_i, _ = scalar_part(inst.integrals[i])
    op_j, _ = scalar_part(inst.integrals[j])
    if op_i is not None and op_j is not None:
        img = inversion_conjugate(expand_generators(op_i))
        for sign in (1, -1):
            d = img - expand_generators(op_j).scale(E.const(sign))
            if certify_many(_components(d.simplify()), policy, derive_seed(seed, "invop", sign)).is_zero:
                out["operator_part_sign"] = sign
                break
    out["certificate"] = cert.to_json()
    return out


def compatibility_residual(V, a="a", b="b") -> E.Expr:
    """Residual of the compatibility PDE for a degree-0 potential, in x coordinates.

    With ``y = (x1/x3, x2/x3)`` a y-derivative is ``x3`` times the x-derivative.
    """
    V = _as_expr(V)
    a, b = _as_expr(a), _as_expr(b)
    x1, x2, x3 = E.COORDS
    y1, y2 = E.div(x1, x3), E.div(x2, x3)
    d = lambda *ax: _nd(V, ax)
    x3s = E.power(x3, 2)
    t1 = E.mul(E.add(E.mul(a, E.power(y2, 2)), E.neg(E.mul(b, E.power(y1, 2))), a, E.neg(b)), x3s, d(1, 2))
    t2 = E.mul(y1, y2, x3s, E.sub(E.mul(a, d(1, 1)), E.mul(b, d(2, 2))))
    t3 = E.mul(E.const(3), x3, E.sub(E.mul(a, y2, d(1)), E.mul(b, y1, d(2))))
    return E.add(t1, t2, t3)


def _nd(e, axes):
    for a in axes:
        e = E.diff(e, a)
    return e


@dataclass
class RowReport:
    row: CatalogRow
    binding: Binding
    verdict: str
    integrals: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"row": self.row.ident, "anchor": self.row.anchor, "binding": self.binding.to_json(),
                "verdict": self.verdict, "integrals": [r.to_json() for r in self.integrals],
                "checks": self.checks, "notes": self.row.notes}


def _row_verdict(reports) -> str:
    verdicts = {r.verdict for r in reports}
    for v in (UNEXPLAINED, DISCREPANT):
        if v in verdicts:
            return v
    return VERIFIED


def verify_row(row: CatalogRow, binding: Binding | None = None, policy: Policy | None = None,
               seed: int = 0, diagnose: bool = True) -> RowReport:
    policy = policy or Policy()
    if row.skip:
        return _skipped_row(row, policy, seed)
    binding = binding or default_bindings(row, seed)[0]
    inst = instantiate(row, binding, policy, seed)
    reps = [verify_integral(inst, k, policy, seed, diagnose) for k in range(len(row.integrals))]
    checks = {
        "scale_invariance": scale_invariance(inst, policy, seed).to_json(),
        "homogeneity": homogeneity(inst, policy, seed).to_json(),
        "inversion": [inversion_check(inst, i, j, policy, seed) for i, j in row.pairs],
        "equivalence": all(r.equivalent for r in reps),
    }
    return RowReport(row, binding, _row_verdict(reps), reps, checks)


def _skipped_row(row: CatalogRow, policy: Policy, seed: int) -> RowReport:
    checks = {"reason": row.skip}
    if row.compatibility_pde:
        checks["compatibility_pde"] = row.compatibility_pde
        checks["a_equals_b"] = compatibility_specialization(policy, seed)
    return RowReport(row, Binding(), SKIPPED, [], checks)


def compatibility_specialization(policy: Policy | None = None, seed: int = 0) -> dict:
    """At a = b the compatibility PDE must hold for every potential of row T1.8."""
    base = find_row("T1.8")
    out = []
    for b in slot_bindings(base):
        inst = instantiate(base, b, policy, seed)
        R = compatibility_residual(inst.V, "a", "a")
        cert = zero_certificate(R, policy, derive_seed(seed, "pde", repr(b.slots)))
        out.append({"binding": b.to_json(), "certificate": cert.to_json()})
    return {"row": base.ident, "results": out,
            "holds": all(r["certificate"]["verdict"] != NON_ZERO for r in out)}


# ---------------------------------------------------------------------------
# perturbed negatives
# ---------------------------------------------------------------------------

PERTURBATIONS = ("x1/r", "x2^2/r^2", "x3/rt", "ln(r)", "x1*x2/rt^2", "cos(theta)", "sin(phi)")


def perturbed_negative(inst: Instance, k: int, rng: random.Random, policy=None, seed=0) -> dict:
    """Add a non-constant scalar to integral k; both criteria must reject it."""
    delta = E.mul(E.const(random_param(rng)), parse_expr(rng.choice(PERTURBATIONS)))
    Q = inst.operator(k) + DiffOp.scalar(delta)
    _, cert = commutator_certificate(inst.H, Q, policy, derive_seed(seed, "neg"))
    rcert = residual_certificate(inst, Q, policy, derive_seed(seed, "negres"))
    return {"row": inst.row.ident, "integral": k, "perturbation": serialize(delta),
            "commutator": cert.verdict, "residuals": rcert.verdict,
            "agree": cert.is_zero == rcert.is_zero, "rejected": not cert.is_zero}


def perturbed_negatives(count: int = 50, policy=None, seed: int = 0, rows=None) -> list:
    rows = [r for r in (rows or builtin_catalog()) if not r.skip]
    rng = random.Random(derive_seed(seed, "negatives"))
    out = []
    for n in range(count):
        row = rows[n % len(rows)]
        binding = rng.choice(default_bindings(row, seed))
        inst = instantiate(row, binding, policy, seed)
        out.append(perturbed_negative(inst, rng.randrange(len(row.integrals)), rng, policy,
                                      derive_seed(seed, n)))
    return out


# ---------------------------------------------------------------------------
# whole catalog
# ---------------------------------------------------------------------------

def _task(args):
    row, binding, policy, seed, diagnose = args
    return verify_row(row, binding, policy, seed, diagnose).to_json()


def verify_catalog(rows=None, policy: Policy | None = None, seed: int = 0, jobs: int = 1,
                   bindings: str = "default", negatives: int = 50, diagnose: bool = True) -> dict:
    """Verify every row under its binding suite.

    ``bindings`` is ``"default"`` (slot products with three seeded rational
    draws of the constants) or ``"generic"`` (constants left symbolic, so
    every certificate samples them afresh).
    """
    policy = policy or Policy()
    rows = rows if rows is not None else builtin_catalog()
    tasks = []
    for row in rows:
        if row.skip:
            tasks.append((row, None, policy, seed, diagnose))
            continue
        suite = slot_bindings(row) if bindings == "generic" else default_bindings(row, seed)
        tasks += [(row, b, policy, seed, diagnose) for b in suite]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            reports = list(ex.map(_task, tasks))
    else:
        reports = [_task(t) for t in tasks]
    negs = perturbed_negatives(negatives, policy, seed, rows) if negatives else []
    return {"policy": policy.to_json(), "seed": seed, "reports": reports,
            "negatives": negs, "summary": summarize(reports, negs)}


def summarize(reports, negatives=()) -> dict:
    rows: dict = {}
    for r in reports:
        rows.setdefault(r["row"], []).append(r)
    verdicts = {}
    anchors_ok = True
    for ident, reps in rows.items():
        vs = {r["verdict"] for r in reps}
        v = next((x for x in (UNEXPLAINED, DISCREPANT, SKIPPED) if x in vs), VERIFIED)
        verdicts[ident] = v
        if reps[0]["anchor"] and v != VERIFIED:
            anchors_ok = False
    counts: dict = {}
    for v in verdicts.values():
        counts[v] = counts.get(v, 0) + 1
    return {"verified": counts.get(VERIFIED, 0), "discrepant": counts.get(DISCREPANT, 0),
            "skipped": counts.get(SKIPPED, 0), "unexplained": counts.get(UNEXPLAINED, 0),
            "rows": verdicts, "anchors_ok": anchors_ok,
            "equivalence": all(r["checks"].get("equivalence", True) for r in reports),
            "negatives_rejected": all(n["rejected"] and n["agree"] for n in negatives)}
