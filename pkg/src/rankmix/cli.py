"""Command-line entry points: experiments, dataset generation, serving."""

from __future__ import annotations

import argparse
import json
import sys

from .environments import SyntheticSpec, gen_fetch_dataset, gen_synthetic_dataset
from .errors import RankmixError
from .experiment import ExperimentConfig, format_report, report, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankmix",
        description="Active learning of reward-function mixtures from rankings")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulated-expert experiment")
    p_run.add_argument("--config", required=True, help="JSON config file")

    p_syn = sub.add_parser("gen-synthetic", help="write the synthetic dataset")
    p_syn.add_argument("--out", required=True, help="output dataset file")
    p_syn.add_argument("--seed", type=int, default=0)

    p_fetch = sub.add_parser("gen-fetch", help="write the Fetch dataset")
    p_fetch.add_argument("--out", required=True, help="output dataset file")

    p_serve = sub.add_parser("serve", help="serve ranking sessions over HTTP")
    p_serve.add_argument("--dataset", required=True, help="dataset file")
    p_serve.add_argument("--strategy", choices=("ig", "random", "vr"),
                         default="ig")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--data-dir", default=None,
                         help="directory for session persistence")
    p_serve.add_argument("--standardize", action="store_true",
                         help="z-score dataset features before serving")

    p_report = sub.add_parser("report", help="aggregate experiment CSVs")
    p_report.add_argument("--csv", nargs="+", required=True)
    p_report.add_argument("--json", action="store_true",
                          help="emit the full report as JSON")
    return parser


def main(argv: "list[str] | None" = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = ExperimentConfig.load(args.config)
            run_experiment(config)
            print(f"wrote {config.output}")
        elif args.command == "gen-synthetic":
            gen_synthetic_dataset(SyntheticSpec(seed=args.seed)).save(args.out)
            print(f"wrote {args.out}")
        elif args.command == "gen-fetch":
            gen_fetch_dataset().save(args.out)
            print(f"wrote {args.out}")
        elif args.command == "serve":
            _serve(args)
        elif args.command == "report":
            result = report(args.csv)
            if args.json:
                print(json.dumps(result, indent=2, sort_keys=True))
            else:
                print(format_report(result))
    except RankmixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def _serve(args: argparse.Namespace) -> None:
    import uvicorn

    from .model import Dataset
    from .service import SessionSettings, create_app

    dataset = Dataset.load(args.dataset, standardize=args.standardize)
    app = create_app(dataset, SessionSettings(strategy=args.strategy),
                     data_dir=args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    sys.exit(main())
