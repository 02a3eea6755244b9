"""Command-line entry point: run scenarios, summarize results, dump traces.

Exit codes: 0 success, 1 scenario parse/validation error, 2 runtime
invariant or causality violation (a bug in a strategy, not a protocol
failure).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import (
    ScenarioError,
    canonical_json,
    load_scenario,
    run_scenario,
    summarize,
    trace_for_round,
)
from .spacetime import CausalityError, InvariantViolation


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpvsim",
        description="Discrete-event simulator for one-dimensional quantum "
                    "position verification")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("scenario", help="path to a scenario TOML file")
    p_run.add_argument("--trials", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None, help="directory for results/trace")

    p_sum = sub.add_parser("summarize", help="combine results files into a matrix")
    p_sum.add_argument("results", nargs="+")
    p_sum.add_argument("--format", choices=("csv", "md"), default="md")

    p_tr = sub.add_parser("trace", help="show trace rows for one round")
    p_tr.add_argument("results")
    p_tr.add_argument("--round", type=int, required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            scenario = load_scenario(args.scenario)
            results = run_scenario(scenario, trials=args.trials,
                                   seed=args.seed, out_dir=args.out)
            sys.stdout.write(canonical_json(results))
        elif args.command == "summarize":
            docs = [json.loads(Path(p).read_text()) for p in args.results]
            sys.stdout.write(summarize(docs, fmt=args.format))
        elif args.command == "trace":
            doc = json.loads(Path(Path(args.results)).read_text())
            for row in trace_for_round(doc, args.round):
                sys.stdout.write(",".join(str(c) for c in row) + "\n")
    except ScenarioError as exc:
        sys.stderr.write(f"scenario error: {exc}\n")
        return 1
    except (CausalityError, InvariantViolation) as exc:
        sys.stderr.write(f"invariant violation: {exc}\n")
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"scenario error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
