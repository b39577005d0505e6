"""Command line interface: ``densalg run | parse | pencil | bv | repl``.

Exit codes: 0 all checks pass, 1 a check failed, 2 parse or semantic error,
3 internal inconsistency (two routes that must agree disagreed).
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from densalg.errors import DensalgError
from densalg.expr import ParseError, ast_to_sexpr, format_value, parse, parse_value
from densalg.graded import Chart
from densalg.manifest import CHECK_TARGETS, Check, ManifestError, manifest_ast, parse_manifest, print_manifest
from densalg.pencil import canonical_pencil
from densalg.report import (
    EXIT_ERROR,
    EXIT_PASS,
    data_json,
    dumps,
    exit_code_for,
    pencil_json,
    run_check,
    run_checks,
)

CERTIFICATE_SCHEMA = "densalg-certificate/1"
PENCIL_SCHEMA = "densalg-pencil/1"


def _read(path):
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _load(path):
    return parse_manifest(_read(path))


def _emit(text, out_path=None):
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _weights(text):
    return tuple(Fraction(p) for p in text.split(",") if p.strip())


# verbs -----------------------------------------------------------------------------------


def cmd_run(args):
    raw = _read(args.manifest)
    manifest = parse_manifest(raw)
    report, code = run_checks(manifest, seed=args.seed, source_text=raw, timing=args.timing)
    text = dumps(report)
    if args.json:
        _emit(text, args.json)
        for rec in report["checks"]:
            sys.stdout.write(f"{rec['verdict'].upper():8} {rec['kind']} {rec['target']}\n")
    else:
        _emit(text)
    return code


def cmd_parse(args):
    if args.expr is not None:
        if args.ast:
            _emit(ast_to_sexpr(parse(args.expr)) + "\n")
            return EXIT_PASS
        chart = Chart.of(*[s for s in args.chart.split(",") if s.strip()])
        _emit((format_value(parse_value(args.expr, chart)) or "0") + "\n")
        return EXIT_PASS
    manifest = _load(args.manifest)
    if args.ast:
        _emit(dumps(manifest_ast(manifest)))
    else:
        _emit(print_manifest(manifest))
    return EXIT_PASS


def _single(args, kind, target, params):
    manifest = _load(args.manifest)
    check = Check(kind, target, params, 0)
    manifest.get(target, CHECK_TARGETS[kind])
    record = run_check(manifest, check, seed=getattr(args, "seed", 0))
    record.pop("line", None)
    record["schema"] = CERTIFICATE_SCHEMA
    _emit(dumps(record), getattr(args, "json", None))
    return exit_code_for([record])


def cmd_pencil(args):
    if args.verb == "build":
        manifest = _load(args.manifest)
        data = manifest.get(args.target, ("data",)).value
        payload = {
            "schema": PENCIL_SCHEMA,
            "target": args.target,
            "data": data_json(data),
            "pencil": pencil_json(canonical_pencil(data)),
        }
        _emit(dumps(payload), args.json)
        return EXIT_PASS
    if args.verb == "recover":
        return _single(args, "recover", args.target, {"weight": Fraction(args.weight)})
    params = {"weights": _weights(args.weights)} if args.weights else {}
    return _single(args, "selfadjoint", args.target, params)


def cmd_bv(args):
    kind = args.verb
    params = {}
    if kind in ("flatness", "theorem3"):
        params["seed"] = args.seed
    if kind == "master":
        if not args.action:
            raise ManifestError("bv master requires --action")
        params["action"] = args.action
        params["weight"] = Fraction(args.weight)
    if kind == "modular" and args.weights:
        params["weights"] = _weights(args.weights)
    return _single(args, kind, args.target, params)


def cmd_repl(args, stdin=None, stdout=None):
    """Evaluate expressions line by line; ``:chart x, xi:odd`` switches charts."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    chart = Chart.of(*[s for s in args.chart.split(",") if s.strip()])
    interactive = stdin.isatty()
    while True:
        if interactive:
            stdout.write("densalg> ")
            stdout.flush()
        line = stdin.readline()
        if not line:
            break
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line in (":q", ":quit"):
            break
        try:
            if line.startswith(":chart"):
                chart = Chart.of(*[s for s in line[len(":chart"):].split(",") if s.strip()])
                stdout.write(f"chart {', '.join(n + (':odd' if p else '') for n, p in chart.coords)}\n")
            elif line.startswith(":ast"):
                stdout.write(ast_to_sexpr(parse(line[4:].strip())) + "\n")
            else:
                stdout.write((format_value(parse_value(line, chart)) or "0") + "\n")
        except DensalgError as exc:
            stdout.write(f"error: {exc}\n")
    return EXIT_PASS


# argument parsing ----------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="densalg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every check of a manifest")
    run.add_argument("manifest")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--json", metavar="OUT", help="write the report here instead of stdout")
    run.add_argument("--timing", action="store_true", help="record per-check seconds (not deterministic)")
    run.set_defaults(func=cmd_run)

    prs = sub.add_parser("parse", help="canonicalize a manifest or an expression")
    prs.add_argument("manifest", nargs="?", default="-")
    prs.add_argument("--ast", action="store_true", help="print the syntax tree")
    prs.add_argument("--expr", help="parse a single expression instead of a manifest")
    prs.add_argument("--chart", default="", help="coordinates for --expr, e.g. 'x, xi:odd'")
    prs.set_defaults(func=cmd_parse)

    pen = sub.add_parser("pencil", help="canonical pencils")
    pen_sub = pen.add_subparsers(dest="verb", required=True)
    for verb in ("build", "recover", "check-selfadjoint"):
        p = pen_sub.add_parser(verb)
        p.add_argument("manifest")
        p.add_argument("target")
        p.add_argument("--json", metavar="OUT")
        if verb == "recover":
            p.add_argument("--weight", required=True)
        if verb == "check-selfadjoint":
            p.add_argument("--weights")
    pen.set_defaults(func=cmd_pencil)

    bvp = sub.add_parser("bv", help="odd-bracket certificates")
    bv_sub = bvp.add_subparsers(dest="verb", required=True)
    for verb in ("jacobi", "flatness", "theorem3", "modular", "reduce", "master"):
        p = bv_sub.add_parser(verb)
        p.add_argument("manifest")
        p.add_argument("target")
        p.add_argument("--json", metavar="OUT")
        p.add_argument("--seed", type=int, default=0)
        if verb == "master":
            p.add_argument("--action")
            p.add_argument("--weight", default="1/2")
        if verb == "modular":
            p.add_argument("--weights")
    bvp.set_defaults(func=cmd_bv)

    repl = sub.add_parser("repl", help="interactive expression evaluator")
    repl.add_argument("--chart", default="x, xi:odd")
    repl.set_defaults(func=cmd_repl)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ManifestError, ParseError) as exc:
        where = getattr(args, "manifest", None) or "<expr>"
        sys.stderr.write(f"{where}:{exc}\n" if isinstance(exc, ManifestError) and exc.line else f"{where}: {exc}\n")
        return EXIT_ERROR
    except (DensalgError, ValueError, ZeroDivisionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
