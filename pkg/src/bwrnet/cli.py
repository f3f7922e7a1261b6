"""Command-line interface.

Subcommands mirror the module operations: scenario execution, the built-in
demos, graph/chain analysis, the two simulators, rate reports, and artifact
summaries.  Analysis commands print JSON to stdout unless --out is given;
simulators always write an artifact directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .beliefs import learning_rates
from .errors import PreconditionError, ToolkitError
from .graphs import classify_topology, perron, strongly_connected
from .harness import (
    Scenario,
    builtin_scenario,
    load_scenario,
    run,
    summarize,
    _chain_report,
)
from .model import load_model


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.trials is not None:
        updates["trials"] = args.trials
    if args.horizon is not None:
        updates["horizon"] = args.horizon
    return replace(scenario, **updates) if updates else scenario


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--out", default="artifacts")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bwrnet",
        description="Simulate and analyze Bayesian-without-recall learning dynamics.",
    )
    parser.add_argument("--version", action="version", version=f"bwrnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a scenario file")
    p.add_argument("scenario", help="path to a scenario JSON document")
    _add_run_flags(p)

    p = sub.add_parser("example1", help="run the built-in eight-agent root-circle demo")
    _add_run_flags(p)

    p = sub.add_parser("analyze-graph", help="connectivity, spectral radius, centrality")
    p.add_argument("--model", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("analyze-chain", help="exact action-profile chain analysis")
    p.add_argument("--model", required=True)
    p.add_argument("--out", default=None)
    p.add_argument(
        "--kernel-csv",
        default=None,
        help="also dump the transition kernel to this CSV path (n <= 8 only)",
    )

    p = sub.add_parser("simulate-actions", help="Monte Carlo of the action dynamics")
    p.add_argument("--model", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--horizon", type=int, default=50)
    p.add_argument("--out", default="artifacts")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("simulate-beliefs", help="Monte Carlo of the belief dynamics")
    p.add_argument("--model", required=True)
    p.add_argument(
        "--mode",
        choices=("full", "circle", "random-neighbor"),
        default="full",
    )
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--out", default="artifacts")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("rates", help="learning-rate report for a model")
    p.add_argument("--model", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("summarize", help="summarize an artifact directory")
    p.add_argument("artifacts", help="directory written by run/simulate commands")
    p.add_argument("--out", default=None)
    return parser


def _csv_to_json(out_dir: Path) -> None:
    """Convert the CSV artifacts of a run into JSON siblings (--format json)."""
    import pandas as pd

    for csv_path in sorted(out_dir.glob("*.csv")):
        frame = pd.read_csv(csv_path)
        payload = frame.to_dict(orient="list")
        csv_path.with_suffix(".json").write_text(
            json.dumps(payload) + "\n", encoding="utf-8"
        )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("run", "example1"):
            if args.command == "run":
                scenario = _apply_overrides(load_scenario(args.scenario), args)
            else:
                scenario = _apply_overrides(builtin_scenario("example1"), args)
            manifest = run(scenario, args.out)
            if args.format == "json":
                _csv_to_json(Path(args.out))
            sys.stdout.write(
                json.dumps({"out": args.out, "artifacts": manifest["artifacts"]}) + "\n"
            )
        elif args.command == "analyze-graph":
            model = load_model(args.model)
            connected = strongly_connected(model.network)
            payload = {
                "n": model.n,
                "strongly_connected": connected,
                "classification": classify_topology(model.network).value,
            }
            if connected and model.n >= 2:
                spectral = perron(model.network)
                payload["rho"] = spectral.rho
                payload["alpha"] = spectral.alpha.tolist()
            else:
                payload["rho"] = None
                payload["alpha"] = None
            _emit(payload, args.out)
        elif args.command == "analyze-chain":
            model = load_model(args.model)
            payload = _chain_report(model)
            if args.kernel_csv is not None:
                if model.n > 8:
                    raise PreconditionError("kernel CSV dump is limited to n <= 8")
                from .chain import transition_kernel

                np.savetxt(args.kernel_csv, transition_kernel(model), delimiter=",")
            _emit(payload, args.out)
        elif args.command == "simulate-actions":
            model = load_model(args.model)
            scenario = Scenario(
                model=model,
                dynamics="actions",
                horizon=args.horizon,
                trials=args.trials,
                seed=args.seed,
                outputs=("trajectories",),
                name="simulate-actions",
            )
            run(scenario, args.out)
            if args.format == "json":
                _csv_to_json(Path(args.out))
            sys.stdout.write(json.dumps({"out": args.out}) + "\n")
        elif args.command == "simulate-beliefs":
            model = load_model(args.model)
            outputs = ("trajectories", "global-stats") if (
                strongly_connected(model.network) and model.n >= 2
            ) else ("trajectories",)
            scenario = Scenario(
                model=model,
                dynamics=f"beliefs-{args.mode}",
                horizon=args.horizon,
                trials=args.trials,
                seed=args.seed,
                outputs=outputs,
                name="simulate-beliefs",
            )
            run(scenario, args.out)
            if args.format == "json":
                _csv_to_json(Path(args.out))
            sys.stdout.write(json.dumps({"out": args.out}) + "\n")
        elif args.command == "rates":
            model = load_model(args.model)
            _emit(learning_rates(model).to_dict(model), args.out)
        elif args.command == "summarize":
            _emit(summarize(args.artifacts), args.out)
    except ToolkitError as exc:
        category = type(exc).__name__
        sys.stderr.write(f"error[{category}]: {exc}\n")
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
