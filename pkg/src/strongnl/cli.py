"""Command-line front end.

Exit codes: 0 pass, 1 check failed, 2 usage error, 3 indeterminate.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

from . import __version__
from .entanglement import verify_oes, verify_oges
from .nonlocality import (IndeterminateError, MeasurementGroup, deduce_fixpoint,
                          verify_strongest)
from .states import ParseError, StateSet, build, deserialize, serialize
from .tensor import DEFAULT_TOL

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INDETERMINATE = 0, 1, 2, 3

CONVENTIONS = {
    "basis_order": "lexicographic, party 1 most significant",
    "orbit_representative": "lexicographic minimum",
    "orbit_order": "cyclic left-shift iteration from the representative",
    "hermitian_params": "m diagonal reals, then (re, im) of upper entries row-major",
}


class UsageError(Exception):
    pass


def write_atomic(path: str, text: str) -> None:
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".strongnl-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _envelope(command: str, tol: float | None = None, **body) -> dict:
    doc = {"tool": "strongnl", "version": __version__, "command": command}
    if tol is not None:
        doc["tolerance"] = tol
    doc["conventions"] = CONVENTIONS
    doc.update(body)
    return doc


def load_set(args) -> StateSet:
    if getattr(args, "input", None):
        with open(args.input, encoding="utf-8") as fh:
            try:
                return deserialize(fh.read())
            except ParseError as exc:
                raise UsageError(f"{args.input}: {exc}") from None
    if not args.set:
        raise UsageError("give --set or --input")
    try:
        return build(args.set, args.d, args.N)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _set_info(ss: StateSet) -> dict:
    return {"label": ss.label, "d": ss.d, "N": ss.N, "size": len(ss), "families": len(ss.families)}


# -- rendering -------------------------------------------------------------

def _text_lines(obj, indent=0) -> list[str]:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines += _text_lines(v, indent + 1)
            else:
                lines.append(f"{pad}{k}: {json.dumps(v)}")
    elif isinstance(obj, list):
        for item in obj:
            if isinstance(item, (dict, list)):
                lines.append(f"{pad}-")
                lines += _text_lines(item, indent + 1)
            else:
                lines.append(f"{pad}- {json.dumps(item)}")
    else:
        lines.append(pad + json.dumps(obj))
    return lines


def render(doc: dict, fmt: str, rows: list[dict] | None = None) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "csv":
        rows = rows if rows is not None else [doc]
        buf = io.StringIO()
        fields = list(rows[0]) if rows else []
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (json.dumps(v) if isinstance(v, (dict, list)) else v)
                             for k, v in r.items()})
        return buf.getvalue()
    return "\n".join(_text_lines(doc)) + "\n"


# -- commands --------------------------------------------------------------

def cmd_construct(args) -> int:
    ss = load_set(args)
    text = serialize(ss) + "\n"
    if args.out:
        write_atomic(args.out, text)
        print(f"{ss.label}: d={ss.d} N={ss.N} size={len(ss)} families={len(ss.families)} -> {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_PASS


def cmd_verify(args) -> int:
    ss = load_set(args)
    want = [name for name in ("oes", "oges", "strongest") if getattr(args, name)]
    if not want:
        want = ["oes", "strongest"]
    checks = []
    status = EXIT_PASS
    for name in want:
        if name == "oes":
            checks.append(verify_oes(ss, args.tol))
        elif name == "oges":
            checks.append(verify_oges(ss, args.tol))
        else:
            try:
                checks.append(verify_strongest(ss, args.tol, args.exhaustive))
            except IndeterminateError as exc:
                checks.append({"check": "strongest_nonlocality", "pass": None,
                               "indeterminate": str(exc)})
                status = EXIT_INDETERMINATE
    ok = all(c["pass"] is True for c in checks)
    if status != EXIT_INDETERMINATE and not ok:
        status = EXIT_FAIL
    doc = _envelope("verify", args.tol, set=_set_info(ss), checks=checks,
                    **{"pass": ok if status != EXIT_INDETERMINATE else None})
    rows = [{"check": c["check"], "pass": c["pass"], "worst_residual": c.get("worst_residual"),
             "witnesses": len(c.get("witnesses", []))} for c in checks]
    emit(render(doc, args.format, rows), args.out)
    return status


def cmd_prove(args) -> int:
    ss = load_set(args)
    if args.group is None:
        args.group = 1
    try:
        group = MeasurementGroup.all_but(args.group, ss.N)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = deduce_fixpoint(ss, group)
    doc = _envelope("prove", set=_set_info(ss), **result.to_dict())
    rows = [{"step": i, "rule": e["rule"], "families": " ".join(e["names"]),
             "zeros_added": " ".join(f"a_{{{r},{s}}}" for r, s in e["zeros_added"]),
             "diagonals_merged": "=".join(e["diagonals_merged"])}
            for i, e in enumerate(result.state.log)]
    emit(render(doc, args.format, rows), args.out)
    return EXIT_PASS if result.proved else EXIT_FAIL


def size_table(ds, Ns=(3, 4)) -> list[dict]:
    """Comparison rows: cited OPS sizes vs the orbit-set OGES sizes."""
    rows = []
    for d in ds:
        if d == 3 and 3 in Ns:
            rows.append({"system": "C3xC3xC3", "d": 3, "N": 3, "ops_size": 19,
                         "ops_source": "cited UPB", "oges_size": 18, "oges_source": "A18"})
        for N in Ns:
            oges = d ** N - (d - 1) ** N + 1
            if N == 3:
                ops, src = (6 * (d - 1) ** 2, "6(d-1)^2") if d >= 3 else (None, "")
            elif N == 4:
                ops, src = (d ** 4 - (d - 2) ** 4, "d^4-(d-2)^4") if d >= 3 else (None, "")
            else:
                ops, src = None, ""
            label = "Bbar4" if N == 4 else "B"
            rows.append({"system": "x".join([f"C{d}"] * N), "d": d, "N": N, "ops_size": ops,
                         "ops_source": src, "oges_size": oges,
                         "oges_source": f"{label}: d^N-(d-1)^N+1"})
    return rows


def cmd_table(args) -> int:
    lo = args.d if args.d is not None else 3
    hi = args.d_max if args.d_max is not None else lo
    if lo < 2 or hi < lo:
        raise UsageError("need 2 <= --d <= --d-max")
    Ns = (args.N,) if args.N is not None else (3, 4)
    rows = size_table(range(lo, hi + 1), Ns)
    doc = _envelope("table", rows=rows)
    emit(render(doc, args.format, rows), args.out)
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="strongnl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"strongnl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_set=True):
        if with_set:
            p.add_argument("--set", choices=["B", "Bbar4", "A18", "product"])
            p.add_argument("--input", help="state-set JSON file instead of --set")
        p.add_argument("--d", type=int)
        p.add_argument("--N", type=int)
        p.add_argument("--tol", type=float, default=DEFAULT_TOL)
        p.add_argument("--out")
        p.add_argument("--format", choices=["json", "csv", "text"], default="text")

    p = sub.add_parser("construct", help="build a set and write canonical JSON")
    common(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="run OES / OGES / strongest-nonlocality checks")
    common(p)
    p.add_argument("--oes", action="store_true")
    p.add_argument("--oges", action="store_true")
    p.add_argument("--strongest", action="store_true")
    p.add_argument("--exhaustive", action="store_true",
                   help="check every proper subset of parties, not only all-but-one")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("prove", help="symbolic deduction certificate for one group")
    common(p)
    p.add_argument("--group", type=int, help="the party left out of the measuring group")
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("table", help="size comparison table")
    common(p, with_set=False)
    p.add_argument("--d-max", type=int)
    p.set_defaults(func=cmd_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tol <= 0:
        parser.error("--tol must be positive")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"strongnl {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IndeterminateError as exc:
        print(f"strongnl {args.command}: indeterminate: {exc}", file=sys.stderr)
        return EXIT_INDETERMINATE


if __name__ == "__main__":
    sys.exit(main())
