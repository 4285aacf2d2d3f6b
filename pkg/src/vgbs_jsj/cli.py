"""Command-line front end.

Exit codes: 0 success, 1 invalid input (parse or validation failure), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ParamError, ParseError, ValidationError, VgbsError
from .generate import GenParams, generate_random
from .graph import abelianization, reduce, validate
from .io import parse, serialize, to_dot
from .jsj import compute_jsj
from .lattice import UnimodularAuto, matrix_from_json
from .normal_forms import classify_semidirect


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _load(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _Usage(f"cannot read {path}: {exc.strerror}")
    g = parse(text)
    diags = validate(g)
    if diags:
        raise ValidationError(diags)
    return g


def cmd_check(a) -> int:
    _load(a.file)
    print("ok")
    return 0


def cmd_reduce(a) -> int:
    g, _ = reduce(_load(a.file))
    _emit(serialize(g), a.output)
    return 0


def cmd_jsj(a) -> int:
    out, report = compute_jsj(_load(a.file), checked=a.checked)
    if a.reduce:
        out, _ = reduce(out)
    _emit(serialize(out), a.output)
    if a.report:
        Path(a.report).write_text(_dump(report.to_json()))
    if a.dot:
        Path(a.dot).write_text(to_dot(out))
    return 0


def cmd_classify(a) -> int:
    try:
        rows = json.loads(a.matrix)
        m = matrix_from_json(rows)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise _Usage(f"matrix must be a JSON array of integer rows: {exc}")
    cls = classify_semidirect(UnimodularAuto(m))
    print(json.dumps(cls.to_json(), separators=(",", ":")))
    return 0


def cmd_abel(a) -> int:
    free, torsion = abelianization(_load(a.file))
    print(json.dumps({"free_rank": free, "torsion": torsion}, separators=(",", ":")))
    return 0


def cmd_gen(a) -> int:
    p = GenParams(seed=a.seed, max_rank=a.max_rank, n_vertices=a.vertices, n_edges=a.edges,
                  max_entry=a.max_entry, w_generic=a.w_generic, w_bijective=a.w_bijective,
                  w_loop=a.w_loop, w_one_one=a.w_one_one, w_two_two=a.w_two_two)
    _emit(serialize(generate_random(p)), a.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="vgbs-jsj", description="Abelian JSJ decompositions of vGBS groups.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="parse and validate a graph document")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("reduce", help="contract edges that are bijective at an endpoint")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("jsj", help="compute the JSJ decomposition")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.add_argument("--report")
    p.add_argument("--dot")
    p.add_argument("--reduce", action="store_true", help="reduce the output graph")
    p.add_argument("--checked", action="store_true", help="verify abelianization after every move")
    p.set_defaults(func=cmd_jsj)

    p = sub.add_parser("classify-matrix", help="classify Z^n x|_phi Z for a unimodular phi")
    p.add_argument("matrix", help="JSON rows, e.g. '[[0,-1],[1,0]]'")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("abel", help="abelianization invariants of the fundamental group")
    p.add_argument("file")
    p.set_defaults(func=cmd_abel)

    p = sub.add_parser("gen", help="generate a seeded random instance")
    d = GenParams(seed=0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-rank", type=int, default=d.max_rank)
    p.add_argument("--vertices", type=int, default=d.n_vertices)
    p.add_argument("--edges", type=int, default=d.n_edges)
    p.add_argument("--max-entry", type=int, default=d.max_entry)
    for name in ("generic", "bijective", "loop", "one_one", "two_two"):
        p.add_argument(f"--w-{name.replace('_', '-')}", dest=f"w_{name}", type=float,
                       default=getattr(d, f"w_{name}"))
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)
    return ap


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ParamError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, ValidationError) as exc:
        for d in exc.diagnostics:
            print(f"{d[0]}: {d[1]}" if isinstance(d, tuple) else str(d), file=sys.stderr)
        return 1
    except VgbsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
