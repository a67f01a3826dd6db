"""Command line entry point.

    starris run      --scenario FILE --scheme NAME --out DIR [--seed S] [--p-t 20dBm]
    starris sweep    --scenario FILE --sweep FILE --out DIR [--workers N]
    starris oracle   --fixture FILE
    starris validate --scenario FILE

Exit codes: 0 ok, 2 validation error, 3 infeasible, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bcd import SCHEMES, BcdConfig, compare_schemes, run_scheme
from .network import Network
from .scenario import DEFAULT_SCENARIO, ScenarioError, load_scenario, parse_power

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 2, 3, 4


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=False) + "\n", encoding="utf-8")


def _scenario(args):
    sc = load_scenario(args.scenario)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "p_t", None) is not None:
        changes["p_t_watts"] = parse_power(args.p_t)
    if changes:
        from .scenario import validate_scenario
        sc = validate_scenario(sc.replace(**changes))
    return sc


def cmd_validate(args) -> int:
    sc = _scenario(args)
    users = len(sc.reflection_users) + sum(len(g.positions) for g in sc.transmission_groups)
    print(f"ok: {sc.bs.antenna_count} antennas, {len(sc.star_ris)} surfaces "
          f"({', '.join(str(r.element_count) for r in sc.star_ris) or 'none'} elements), "
          f"{users} users, {sc.stream_count} streams, P_T={sc.p_t_watts:g} W")
    return EXIT_OK


def cmd_run(args) -> int:
    sc = _scenario(args)
    cfg = BcdConfig.from_scenario(sc)
    net = Network(sc, seed=cfg.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.scheme == "all":
        results = compare_schemes(sc, cfg, SCHEMES, net)
    else:
        results = {args.scheme: run_scheme(sc, args.scheme, cfg, net)}
    docs = {}
    for scheme, res in results.items():
        docs[scheme] = res.to_dict(include_timing=not args.no_timing)
        print(f"{scheme}: {res.termination}, sum rate {res.sum_rate:.6f} bits/s/Hz "
              f"after {res.iterations} iterations")
        if res.numerical_failure:
            print("  every subproblem solve failed numerically")
        elif res.termination == "infeasible" and res.binding_users:
            print(f"  binding users: {', '.join(res.binding_users)}")
    doc = docs[args.scheme] if args.scheme != "all" else {"schemes": docs}
    _write_json(out / "result.json", doc)
    with open(out / "trace.jsonl", "w", encoding="utf-8") as fh:
        for scheme, d in docs.items():
            for rec in d["trace"]:
                fh.write(json.dumps({"scheme": scheme, **rec}) + "\n")
    if any(r.numerical_failure for r in results.values()):
        return EXIT_NUMERICAL
    if any(r.termination == "infeasible" for r in results.values()):
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .sweep import load_sweep, run_sweep

    sc = _scenario(args)
    spec = load_sweep(args.sweep)
    if args.workers:
        from dataclasses import replace
        spec = replace(spec, workers=args.workers)
    result = run_sweep(sc, spec, args.out)
    failed = [r for r in result.rows if r.status.startswith("error")]
    print(f"{len(result.rows)} rows written to {Path(args.out) / 'sweep.csv'}"
          + (f" ({len(failed)} failed points)" if failed else ""))
    return EXIT_NUMERICAL if failed and len(failed) == len(result.rows) else EXIT_OK


def cmd_oracle(args) -> int:
    from .oracle import check_against_bcd, load_fixture

    fx = load_fixture(args.fixture)
    res = check_against_bcd(fx)
    print(json.dumps(res, indent=1))
    if res["termination"] == "infeasible":
        return EXIT_INFEASIBLE
    return EXIT_OK if res["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="starris", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="optimise one scenario")
    r.add_argument("--scenario", default=str(DEFAULT_SCENARIO))
    r.add_argument("--scheme", choices=SCHEMES + ("all",), default="proposed")
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--p-t", help="override transmit power, e.g. 0.1W, 100mW, 20dBm, -10dBW")
    r.add_argument("--no-timing", action="store_true", help="omit wall-clock fields")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a parameter sweep")
    s.add_argument("--scenario", default=str(DEFAULT_SCENARIO))
    s.add_argument("--sweep", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_sweep)

    o = sub.add_parser("oracle", help="compare the optimiser with a brute-force fixture")
    o.add_argument("--fixture", required=True)
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("--scenario", required=True)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
