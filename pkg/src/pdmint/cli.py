"""Command-line front end: ``pdmint verify|find|killing|commute|catalog``.

Reports are JSON on stdout (or ``--out``); ``--pretty`` prints a short
human summary instead.  Exit status: 0 on success, 1 when an anchor row
fails, 2 on invalid input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .certify import Policy, default_precision

DEFAULT_SEED = 20240601


class UsageError(ValueError):
    pass


def _policy(args) -> Policy:
    return Policy(points=args.points, precision=args.precision)


def _emit(args, payload: dict, pretty_text: str) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    if args.pretty:
        sys.stdout.write(pretty_text.rstrip("\n") + "\n")
    elif not args.out:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _load_bindings(path, rows):
    from .catalog import Binding
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, list):
        data = {row.ident: data for row in rows}
    if not isinstance(data, dict):
        raise UsageError("bindings file must hold a list of bindings or an object keyed by row id")
    out = {}
    for key, items in data.items():
        if not isinstance(items, list):
            raise UsageError(f"bindings for {key} must be a list")
        out[key.upper()] = [Binding.from_json(b) for b in items]
    return out


def cmd_verify(args) -> int:
    from .catalog import builtin_catalog, load_catalog, verify_catalog
    rows = load_catalog(args.catalog) if args.catalog else builtin_catalog()
    if args.table is not None:
        rows = [r for r in rows if r.table == args.table]
    if args.item is not None:
        rows = [r for r in rows if r.item == args.item]
    if not rows:
        raise UsageError("no catalog row matches the selection")
    suite = args.suite
    overrides = _load_bindings(args.bindings, rows) if args.bindings else None
    policy = _policy(args)
    if overrides:
        from .catalog import summarize, verify_row
        reports = []
        for row in rows:
            for b in overrides.get(row.ident, [None]):
                reports.append(verify_row(row, b, policy, args.seed).to_json())
        result = {"policy": policy.to_json(), "seed": args.seed, "reports": reports,
                  "negatives": [], "summary": summarize(reports)}
    else:
        result = verify_catalog(rows, policy, args.seed, args.jobs, suite, negatives=args.negatives)
    lines = []
    for ident, verdict in result["summary"]["rows"].items():
        lines.append(f"{ident:6s} {verdict}")
    s = result["summary"]
    lines.append(f"verified {s['verified']}  discrepant {s['discrepant']}  skipped {s['skipped']}"
                 f"  anchors {'ok' if s['anchors_ok'] else 'FAILED'}")
    _emit(args, result, "\n".join(lines))
    bad = not s["anchors_ok"] or s.get("unexplained", 0) > 0
    return 1 if bad else 0


# ---------------------------------------------------------------------------
# find
# ---------------------------------------------------------------------------

def _degrees(text: str) -> tuple:
    try:
        out = tuple(sorted({int(t) for t in text.split(",") if t.strip()}))
    except ValueError:
        raise UsageError(f"--degrees expects a comma-separated list of integers, got {text!r}")
    if not out or min(out) < 0 or max(out) > 4:
        raise UsageError("degrees must lie in 0..4")
    return out


def cmd_find(args) -> int:
    from .exprlang import parse_expr
    from .solve import FindOptions, find_integrals
    f, V = parse_expr(args.f), parse_expr(args.V)
    degrees = _degrees(args.degrees)
    opts = FindOptions(policy=_policy(args), seed=args.seed, numeric_fallback=args.numeric_fallback,
                       partners=args.partners)
    found = find_integrals(f, V, degrees, opts)
    payload = {"f": args.f, "V": args.V, "degrees": list(degrees), "seed": args.seed,
               "integrals": [q.to_json() for q in found]}
    lines = [f"{len(found)} integral(s) for f = {args.f}, V = {args.V}"]
    for q in found:
        tag = q.status if q.origin == "direct" else f"{q.status}, {q.origin}"
        lines.append(f"  [{tag}] {q.rendering or '(no generator form)'}")
    _emit(args, payload, "\n".join(lines))
    return 0


# ---------------------------------------------------------------------------
# killing, commute, catalog
# ---------------------------------------------------------------------------

def _kv(text: str) -> dict:
    out = {}
    for part in filter(None, (p.strip() for p in (text or "").split(","))):
        if "=" not in part:
            raise UsageError(f"--params entries must look like name=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def cmd_killing(args) -> int:
    from .killing import killing_family
    kt = killing_family(args.family, _kv(args.params), symbolic=args.symbolic,
                        policy=_policy(args))
    payload = kt.to_json()
    lines = [f"family {args.family}: {payload['certificate']['verdict']}"]
    lines += [f"  mu{k} = {v}" for k, v in payload["mu"].items() if v != "0"]
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_commute(args) -> int:
    from .diffop import commutator, expand_generators, render
    from .exprlang import parse_operator
    from .solve import recognize
    A = expand_generators(parse_operator(args.A))
    B = expand_generators(parse_operator(args.B))
    C = commutator(A, B)
    rec = recognize(C) if C.order <= 2 else None
    payload = {"A": args.A, "B": args.B, "diffop": C.to_json(), "canonical": render(C),
               "generators": rec.text() if rec is not None else None}
    lines = [f"[{args.A}, {args.B}] = {render(C)}"]
    if rec is not None:
        lines.append(f"  = {rec.text()}")
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_catalog(args) -> int:
    from .catalog import builtin_catalog, load_catalog
    rows = load_catalog(args.catalog) if args.catalog else builtin_catalog()
    payload = {"rows": [r.to_json() | {"id": r.ident} for r in rows]}
    lines = []
    for r in rows:
        flag = " (anchor)" if r.anchor else ""
        skip = " [skipped]" if r.skip else ""
        lines.append(f"{r.ident:6s} f = {r.f}; V = {r.V}; {len(r.integrals)} integral(s){flag}{skip}")
    _emit(args, payload, "\n".join(lines))
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _positive(text):
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--points", type=_positive, default=20)
    common.add_argument("--precision", type=_positive, default=None,
                        help="working digits (default: $PDMINT_PRECISION or 64)")
    common.add_argument("--jobs", type=_positive, default=1)
    common.add_argument("--out", default=None)
    common.add_argument("--pretty", action="store_true")

    p = argparse.ArgumentParser(prog="pdmint", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="verify catalog rows")
    v.add_argument("--table", type=int, choices=(1, 2))
    v.add_argument("--item", type=_positive)
    v.add_argument("--bindings", help="JSON file with slot/constant bindings")
    v.add_argument("--catalog", help="alternative catalog JSON file")
    v.add_argument("--suite", choices=("default", "generic"), default="default")
    v.add_argument("--negatives", type=int, default=0,
                   help="number of perturbed negatives for the equivalence check")
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("find", parents=[common], help="search for second-order integrals")
    f.add_argument("--f", required=True)
    f.add_argument("--V", required=True)
    f.add_argument("--degrees", default="0,1,2")
    f.add_argument("--numeric-fallback", action="store_true")
    f.add_argument("--partners", action="store_true",
                   help="also report inversion images of degree 0 and 1 integrals")
    f.set_defaults(func=cmd_find)

    k = sub.add_parser("killing", parents=[common], help="a conformal Killing tensor family")
    k.add_argument("--family", type=int, required=True, choices=range(1, 10))
    k.add_argument("--params", default="")
    k.add_argument("--symbolic", action="store_true", help="leave unset parameters symbolic")
    k.set_defaults(func=cmd_killing)

    c = sub.add_parser("commute", parents=[common], help="commutator of two generator expressions")
    c.add_argument("--A", required=True)
    c.add_argument("--B", required=True)
    c.set_defaults(func=cmd_commute)

    cat = sub.add_parser("catalog", parents=[common], help="catalog inventory")
    cat.add_argument("action", choices=("list",))
    cat.add_argument("--catalog", help="alternative catalog JSON file")
    cat.set_defaults(func=cmd_catalog)
    return p


def main(argv=None) -> int:
    from .exprlang import ParseError
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if args.precision is None:
        args.precision = default_precision()
    if args.out:
        outdir = os.path.dirname(os.path.abspath(args.out))
        if not os.path.isdir(outdir):
            print(f"pdmint: output directory {outdir} does not exist", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"pdmint: parse error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"pdmint: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
