"""Command line front end.

Examples:
  cpsd-approx generate --family identity --n 10 --out id10.json
  cpsd-approx approximate id10.json --eps 0.4 --mode auto --seed 0 --out report.json
  cpsd-approx verify id10.json report.json
  cpsd-approx bounds --n 10 100 1000 --ell 1 --L 1 --eps 0.4
  cpsd-approx crossover --eps 0.5

Exit codes: 0 success, 1 I/O, parse or verification failure, 2 parameter out
of range, 3 retry budget exhausted, 4 internal bound check failed.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import sys

from . import serialize
from .exceptions import BoundViolationError, CpsdError, EpsilonRangeError, RetryExhaustedError
from .generators import FAMILIES, generate
from .pipeline import ApproxParams, approximate, check_eps_range, crossover_n, rank_bounds
from .verify import check_report, first_failure

EXIT_OK, EXIT_IO, EXIT_RANGE, EXIT_RETRY, EXIT_BOUND = 0, 1, 2, 3, 4
MODE_NAMES = {"stage1": "stage1_only", "stage2": "stage2_full", "auto": "auto"}

log = logging.getLogger("cpsdapprox")


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_generate(args) -> int:
    ranks = [int(r) for r in args.ranks.split(",")] if args.ranks else None
    try:
        inst = generate(args.family, args.n, d=args.d, q=args.q, seed=args.seed,
                        inner_dim=args.inner_dim, ranks=ranks)
    except ValueError as exc:
        print(f"error: invalid generator spec: {exc}", file=sys.stderr)
        return EXIT_RANGE
    _emit(serialize.dumps(serialize.instance_to_dict(inst)), args.out)
    return EXIT_OK


def _load_instance(path):
    return serialize.instance_from_dict(serialize.read_json(path))


def cmd_approximate(args) -> int:
    try:
        inst = _load_instance(args.instance)
    except (OSError, ValueError, CpsdError) as exc:
        print(f"error: cannot read instance {args.instance}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        params = ApproxParams(
            eps=args.eps, mode=MODE_NAMES[args.mode], cp_mode=args.cp, seed=args.seed,
            strategy=args.strategy, carath_retries=args.retries, jl_retries=args.retries,
            threads=args.threads,
        )
        report = approximate(inst, params)
    except EpsilonRangeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except RetryExhaustedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RETRY
    except BoundViolationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BOUND
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANGE
    try:
        _emit(serialize.dumps(serialize.report_to_dict(report, seed=args.seed)), args.out)
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_IO
    log.info("achieved error %.6g < eps %.6g, witness side %d", report.achieved_error, args.eps, report.rep_side)
    return EXIT_OK if report.achieved_error < args.eps else EXIT_BOUND


BOUND_COLUMNS = ["n", "ell", "L", "eps", "first", "second", "min", "which"]


def bound_rows(ns, ells, ls, epss):
    for n, ell, big_l, eps in itertools.product(ns, ells, ls, epss):
        check_eps_range(ell, big_l, eps)
        first, second = rank_bounds(n, ell, big_l, eps)
        yield {
            "n": n, "ell": ell, "L": big_l, "eps": eps, "first": first, "second": second,
            "min": min(first, second), "which": "first" if first <= second else "second",
        }


def cmd_bounds(args) -> int:
    try:
        rows = list(bound_rows(args.n, args.ell, args.big_l, args.eps))
    except EpsilonRangeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANGE
    if args.format == "json":
        _emit(json.dumps(rows, indent=1) + "\n", args.out)
        return EXIT_OK
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(fh, fieldnames=BOUND_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def cmd_crossover(args) -> int:
    try:
        n_star = crossover_n(args.eps, args.ell, args.big_l)
    except EpsilonRangeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANGE
    if args.format == "json":
        print(json.dumps({"eps": args.eps, "ell": args.ell, "L": args.big_l, "n_star": n_star}))
    else:
        print(n_star)
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        inst = _load_instance(args.instance)
        report = serialize.report_from_dict(serialize.read_json(args.report))
    except (OSError, ValueError, CpsdError) as exc:
        print(f"error: cannot read inputs: {exc}", file=sys.stderr)
        return EXIT_IO
    failure = first_failure(check_report(inst, report))
    if failure:
        name, detail = failure
        print(f"FAIL: {name}" + (f" ({detail})" if detail else ""))
        return EXIT_IO
    print("PASS: all checks")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cpsd-approx", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write an instance JSON file")
    g.add_argument("--family", required=True, choices=FAMILIES)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int)
    g.add_argument("--q", type=float)
    g.add_argument("--inner-dim", type=int)
    g.add_argument("--ranks", help="comma-separated projection ranks")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("approximate", help="approximate an instance, write a report")
    a.add_argument("instance")
    a.add_argument("--eps", type=float, required=True)
    a.add_argument("--mode", choices=sorted(MODE_NAMES), default="auto")
    a.add_argument("--cp", action="store_true", help="completely positive mode (diagonal witness)")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--strategy", choices=["auto", "sampling", "greedy"], default="auto")
    a.add_argument("--retries", type=int, default=64)
    a.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    a.add_argument("--out")
    a.add_argument("--format", choices=["json"], default="json")
    a.set_defaults(func=cmd_approximate)

    b = sub.add_parser("bounds", help="tabulate both rank bounds over a parameter grid")
    b.add_argument("--n", type=int, nargs="+", required=True)
    b.add_argument("--ell", type=float, nargs="+", required=True)
    b.add_argument("--L", "--big-l", dest="big_l", type=float, nargs="+", required=True)
    b.add_argument("--eps", type=float, nargs="+", required=True)
    b.add_argument("--format", choices=["csv", "json"], default="csv")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bounds)

    c = sub.add_parser("crossover", help="smallest n where the second bound drops below n")
    c.add_argument("--eps", type=float, required=True)
    c.add_argument("--ell", type=float, default=1.0)
    c.add_argument("--L", "--big-l", dest="big_l", type=float, default=1.0)
    c.add_argument("--format", choices=["csv", "json"], default="csv")
    c.set_defaults(func=cmd_crossover)

    v = sub.add_parser("verify", help="re-check a report against its instance")
    v.add_argument("instance")
    v.add_argument("report")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
