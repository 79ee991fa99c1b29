"""Command-line entry point: ``fracmhd {run,sweep,verify,region}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from fracmhd import diagnostics, harness, verification
from fracmhd.errors import ConfigInvalid

EXIT_OK = 0
EXIT_USAGE = 2  # argparse's own code for bad arguments
EXIT_CONFIG_INVALID = 3
EXIT_NON_FINITE = 4
EXIT_RESOLUTION_LOSS = 5
EXIT_VERIFY_FAILED = 6

_FAILURE_EXIT = {
    "non_finite": EXIT_NON_FINITE,
    "resolution_loss": EXIT_RESOLUTION_LOSS,
}


def _cmd_run(args) -> int:
    result = harness.run(harness.load_run_config(args.config))
    s = result.summary
    print(f"status={s['status']} t_final={s['t_final']!r} steps={s['steps']} region={s['region']}")
    if s["failure"]:
        print(f"failure={s['failure']} at t={s['failure_time']!r}")
        return _FAILURE_EXIT[s["failure"]]
    print(f"final_bkm_integral={s['final_bkm_integral']!r}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    rows = harness.sweep(harness.load_sweep_spec(args.config))
    for row in rows:
        extra = f" error={row['error']}" if row["error"] else ""
        print(f"alpha={row['alpha']!r} beta={row['beta']!r} region={row['region']} "
              f"status={row['status']}{extra}")
    print(f"{len(rows)} point(s)")
    return EXIT_OK


def _cmd_verify(args) -> int:
    results = verification.verify(args.filter)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} properties passed")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


def _cmd_region(args) -> int:
    verdict = diagnostics.classify_region(args.alpha, args.beta)
    if args.json:
        print(json.dumps({"alpha": args.alpha, "beta": args.beta, **verdict.as_dict()}, sort_keys=True))
    else:
        print(f"{verdict.region}: {verdict.detail}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracmhd",
        description="Pseudospectral 2D MHD with fractional dissipation, plus regularity diagnostics.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate one configuration")
    p.add_argument("--config", required=True, help="path to a run configuration (JSON)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run a grid of (alpha, beta) points")
    p.add_argument("--config", required=True, help="path to a sweep specification (JSON)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("verify", help="run the property suite")
    p.add_argument("--filter", default=None, help="only checks whose name contains this text")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("region", help="classify an (alpha, beta) pair")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--json", action="store_true", help="print a JSON object")
    p.set_defaults(func=_cmd_region)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG_INVALID


if __name__ == "__main__":
    sys.exit(main())
