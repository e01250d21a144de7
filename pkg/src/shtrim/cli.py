"""Command line entry point.

Subcommands: ``analyze``, ``transform``, ``bench``, ``plotdata``,
``gen-corpus`` and ``selftest``.  Exit codes: 0 ok, 1 usage or I/O
problem, 2 parse error, 3 timeout, 4 size or iteration guard, 5 selftest
mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench as B
from .gen import GenParams, write_corpus
from .reassoc import transform_program
from .selftest import run_selftest
from .solver import AnalysisError, analyze, select_entries
from .syntax import ParseError, parse_program, program_to_str

EXIT_OK, EXIT_IO, EXIT_PARSE, EXIT_TIMEOUT, EXIT_GUARD, EXIT_SELFTEST = 0, 1, 2, 3, 4, 5

log = logging.getLogger("shtrim")


def _positive(text: str) -> float:
    v = float(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _int_range(text: str) -> list[int]:
    """``4..14`` or ``3,5,8``."""
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x]


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _status_code(status: str) -> int:
    return EXIT_TIMEOUT if status == "timeout" else EXIT_GUARD


def cmd_analyze(args) -> int:
    builtins = B.load_builtins(args.builtins)
    results = []
    code = EXIT_OK
    for f in args.files:
        try:
            program = parse_program(Path(f).read_text())
        except ParseError as exc:
            print(f"{f}: {exc}", file=sys.stderr)
            return EXIT_PARSE
        if args.reassoc:
            program = transform_program(program).program
        strategy = "classic" if args.reassoc else args.mode
        try:
            entries = select_entries(program, args.entry)
            res = analyze(program, args.domain, strategy, entries, builtins=builtins,
                          timeout_ms=args.timeout_ms)
        except AnalysisError as exc:
            print(f"{f}: {exc.status}: {exc}", file=sys.stderr)
            results.append({"file": f, "status": exc.status,
                            "stats": exc.stats.as_dict(not args.no_times) if exc.stats else {}})
            code = code or _status_code(exc.status)
            continue
        obj = {"file": f, "status": "ok"}
        obj.update(res.to_json_obj(not args.no_times))
        if args.reassoc:
            obj["strategy"] = "reassoc"
        results.append(obj)
    doc = results[0] if len(results) == 1 else {"results": results}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return code


def cmd_transform(args) -> int:
    try:
        program = parse_program(Path(args.file).read_text())
    except ParseError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    t = transform_program(program, args.budget, args.objective)
    _emit(program_to_str(t.program), args.out)
    if args.report:
        Path(args.report).write_text(json.dumps([r.as_dict() for r in t.reports], indent=2) + "\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    files = []
    for p in args.paths:
        path = Path(p)
        files.extend(sorted(path.glob("*.pl")) if path.is_dir() else [path])
    rows = B.run_bench(files, args.domains, args.modes, args.timeout_ms, args.max_size,
                       B.load_builtins(args.builtins), args.jobs, not args.no_times)
    _emit(B.bench_csv(rows), args.out)
    return EXIT_OK


def cmd_plotdata(args) -> int:
    rows = B.read_rows(Path(args.csv).read_text())
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "cactus.csv").write_text(B.cactus_csv(rows))
    (out / "scatter.csv").write_text(B.scatter_csv(rows))
    return EXIT_OK


def cmd_gen_corpus(args) -> int:
    params = GenParams(predicates=args.predicates, max_clauses=args.max_clauses, max_body=args.max_body,
                       max_arity=args.max_arity, max_vars=args.max_vars, reuse=args.reuse)
    written = write_corpus(args.out_dir, args.seed, args.count, params, args.dead_temps)
    print(f"wrote {len(written)} files to {args.out_dir}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    checks = run_selftest(args.max_vars)
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shtrim", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--timeout-ms", type=_positive, default=300000.0)
        p.add_argument("--builtins", help="JSON table of builtins: {\"functor/N\": [grounded positions]}")
        p.add_argument("--out", help="write to FILE instead of stdout")
        p.add_argument("--no-times", action="store_true", help="zero every timing field")

    p = sub.add_parser("analyze", help="analyze programs from their entry declarations")
    p.add_argument("files", nargs="+")
    p.add_argument("--domain", choices=B.DOMAINS, default="share")
    p.add_argument("--mode", choices=("classic", "trim"), default="classic")
    p.add_argument("--reassoc", action="store_true", help="reassociate clause bodies first")
    p.add_argument("--entry", metavar="P/N", help="only the entries of this predicate")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("transform", help="reassociate clause bodies")
    p.add_argument("file")
    p.add_argument("--out")
    p.add_argument("--report", metavar="FILE", help="per-clause cost report as JSON")
    p.add_argument("--budget", type=int, default=200_000)
    p.add_argument("--objective", choices=("max", "sum"), default="max")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("bench", help="run the benchmark matrix and write CSV")
    p.add_argument("paths", nargs="+", help="corpus directories or files")
    p.add_argument("--domains", nargs="+", choices=B.DOMAINS, default=list(B.DOMAINS))
    p.add_argument("--modes", nargs="+", choices=B.MODES, default=list(B.MODES))
    p.add_argument("--max-size", type=int, default=1 << 22)
    p.add_argument("--jobs", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plotdata", help="cactus and scatter data from a bench CSV")
    p.add_argument("csv")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_plotdata)

    p = sub.add_parser("gen-corpus", help="write pseudo-random programs")
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--dead-temps", type=_int_range, default=[], metavar="K..K")
    p.add_argument("--predicates", type=int, default=3)
    p.add_argument("--max-clauses", type=int, default=3)
    p.add_argument("--max-body", type=int, default=6)
    p.add_argument("--max-arity", type=int, default=3)
    p.add_argument("--max-vars", type=int, default=8)
    p.add_argument("--reuse", type=float, default=0.6)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("selftest", help="oracle, commutation, corpus and golden checks")
    p.add_argument("--max-vars", type=int, default=4)
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"shtrim: {exc}", file=sys.stderr)
        return EXIT_IO
