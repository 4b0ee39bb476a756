"""Command line: ``ncsg run|validate|list``.

Exit codes: 0 all checks pass, 1 a check failed, 2 the scenario does not validate.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .scenario import ScenarioError, catalogue, clean, load_text, parse_scenario, report_header, run_suite

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


def _seed_override():
    value = os.environ.get("NCSG_SEED")
    return int(value) if value not in (None, "") else None


def _write_series(out: Path, suite: dict):
    for name, rows in suite.get("series", {}).items():
        if not rows:
            continue
        keys = sorted({k for r in rows for k in r})
        with open(out / f"{suite['suite']}_{name}.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow(clean(r))


def _write_report(out: Path, report: dict):
    with open(out / "report.json", "w") as fh:
        json.dump(clean(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_run(args) -> int:
    try:
        text = load_text(args.scenario)
        sc = parse_scenario(text, _seed_override())
    except ScenarioError as err:
        print(f"validation error: {err}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = {**report_header(sc), "results": []}
    suites = sorted(sc.suites)
    if args.parallel > 1 and len(suites) > 1:
        with ProcessPoolExecutor(args.parallel) as pool:
            results = list(pool.map(run_suite, [text] * len(suites), [sc.seed] * len(suites), suites))
    else:
        results = []
        for s in suites:
            results.append(run_suite(text, sc.seed, s))
            # flush partial results after every suite
            report["results"] = [{k: v for k, v in r.items() if k != "series"} for r in results]
            _write_report(out, report)
    for r in results:
        _write_series(out, r)
        for c in r["checks"]:
            print(f"{'PASS' if c['passed'] else 'FAIL'}  {r['suite']}/{c['name']}")
    report["results"] = [{k: v for k, v in r.items() if k != "series"} for r in results]
    report["passed"] = all(r["passed"] for r in results)
    _write_report(out, report)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_validate(args) -> int:
    try:
        sc = parse_scenario(load_text(args.scenario), _seed_override())
    except ScenarioError as err:
        print(f"validation error: {err}", file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps({"valid": True, **report_header(sc)}, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_list(args) -> int:
    cat = catalogue()
    for name, schema in cat["generators"].items():
        print(f"generator  {name}  ({schema})")
    for name, schema in cat["sector_functions"].items():
        print(f"function   {name}:{schema}")
    for name in cat["suites"]:
        print(f"suite      {name}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ncsg", description="Verification suites for symmetric Markov semigroups "
                                                          "on finite tracial algebras.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the suites of a scenario file (or a bundled scenario name)")
    run.add_argument("scenario")
    run.add_argument("--parallel", type=int, default=1, metavar="N")
    run.add_argument("--out", default="ncsg-out", metavar="DIR")
    run.set_defaults(func=cmd_run)
    val = sub.add_parser("validate", help="parse and validate a scenario without running it")
    val.add_argument("scenario")
    val.set_defaults(func=cmd_validate)
    sub.add_parser("list", help="list built-in generators, sector functions and suites").set_defaults(func=cmd_list)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
