"""Command-line front end: ``hodgekit <subcommand> ...``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on input errors.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import os
import sys
from contextlib import nullcontext
from pathlib import Path

from .exceptions import HodgeKitError
from .io import InputError, dumps, load_json
from .pipelines import KINDS, describe, run_scenario, scenario_path, shipped_scenarios

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _thread_limit():
    raw = os.environ.get("HODGEKIT_THREADS")
    if not raw:
        return nullcontext()
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"HODGEKIT_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InputError(f"HODGEKIT_THREADS must be a positive integer, got {raw!r}")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists() or p.suffix:
        return p
    shipped = scenario_path(path)
    return Path(str(shipped)) if shipped.is_file() else p


def _u64(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def path_csv(report: dict) -> str | None:
    """One row per path sample for continuation reports, else ``None``."""
    path = report.get("results", {}).get("path")
    if not path:
        return None
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    h = len(path["alpha0"][0]) if path["alpha0"] else 0
    w.writerow(["param", "norm_A"] + [f"alpha0_{k}_{part}" for k in range(h) for part in ("re", "im")])
    for p, n, a in zip(path["params"], path["norm_A"], path["alpha0"]):
        w.writerow([repr(float(p)), repr(float(n))] + [repr(float(x)) for z in a for x in z])
    return buf.getvalue()


def _run(args, kind: str | None) -> int:
    doc = load_json(_resolve(args.scenario))
    with _thread_limit():
        report = run_scenario(doc, seed=args.seed, tol=args.tol, degree=args.degree, kind=kind)
    text = dumps(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.csv:
        table = path_csv(report)
        if table is None:
            raise InputError("--csv is only available for scenarios that produce a continuation path")
        Path(args.csv).write_text(table)
    for name, c in report["checks"].items():
        if not c["pass"]:
            print(f"check failed: {name} ({c['value']} {c['op']} {c['limit']} is false)", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def _validate(args) -> int:
    doc = load_json(_resolve(args.scenario))
    kind = doc.get("kind")
    if kind not in KINDS:
        raise InputError(f"unknown scenario kind {kind!r}; expected one of {list(KINDS)}")
    print(f"{args.scenario}: ok ({kind})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hodgekit", description="Deformation and period-map toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def runner(p):
        p.add_argument("--scenario", required=True, help="scenario JSON path or shipped scenario name")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--seed", type=_u64, help="override the scenario seed")
        p.add_argument("--tol", type=float, help="override eq_tol")
        p.add_argument("--degree", type=int, help="override the truncation degree")
        p.add_argument("--csv", help="write continuation path samples as CSV")

    runner(sub.add_parser("run", help="run a scenario of any kind"))
    for kind in KINDS:
        runner(sub.add_parser(kind, help=f"run a {kind} scenario"))
    sub.add_parser("list-scenarios", help="list shipped scenarios")
    d = sub.add_parser("describe", help="describe a shipped scenario")
    d.add_argument("name")
    v = sub.add_parser("validate", help="parse a scenario file without running it")
    v.add_argument("--scenario", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        if args.command == "list-scenarios":
            for name, doc in shipped_scenarios().items():
                print(f"{name}\t{doc.get('kind')}\t{doc.get('summary', '')}")
            return EXIT_OK
        if args.command == "describe":
            sys.stdout.write(describe(args.name))
            return EXIT_OK
        if args.command == "validate":
            return _validate(args)
        return _run(args, None if args.command == "run" else args.command)
    except HodgeKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
