"""Command-line interface.

Subcommands:

* ``check``     run the robustness test on a graph + dataset
* ``sets``      enumerate adjustment-set collections for a graph
* ``oracle``    exact population quantities for a SEM file
* ``simulate``  run the calibration/power experiment grid

Successful output is JSON on stdout; diagnostics go to stderr. Exit codes
are 0 for success, 1 for input errors and 3 when the test is untestable
for the given graph and pair.
"""

from __future__ import annotations

import argparse
import json
import sys

from .adjustment import (
    AdjustmentCollection,
    Strategy,
    enumerate_all_valid,
    min_plus_collection,
)
from .errors import AdjRobustError, CapExceeded, ConfigError, ParseError
from .harness import (
    cells_to_csv,
    classify_hypothesis,
    experiment_summary,
    format_rejection_table,
    load_config,
    pp_data,
    run_experiment,
)
from .inference import run_test
from .sem import load_dataset, parse_sem, population_beta, total_effect
from .graph import parse_graph

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_UNTESTABLE = 3


def _emit(payload: dict, out_path: str | None) -> None:
    text = json.dumps(payload, sort_keys=True)
    sys.stdout.write(text + "\n")
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")


def _read_text(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def cmd_check(args: argparse.Namespace) -> int:
    g = parse_graph(_read_text(args.graph))
    data = load_dataset(args.data)
    report = run_test(
        g,
        args.x,
        args.y,
        data,
        strategy=Strategy(args.strategy),
        cap=args.cap,
    )
    _emit(report.to_json_dict(verbose=args.verbose), args.out)
    return EXIT_OK if report.tested else EXIT_UNTESTABLE


def cmd_sets(args: argparse.Namespace) -> int:
    g = parse_graph(_read_text(args.graph))
    strategy = Strategy(args.strategy)
    if strategy is Strategy.ALL:
        collection = enumerate_all_valid(g, args.x, args.y, cap=args.cap)
    else:
        collection = min_plus_collection(g, args.x, args.y)
    print(
        f"{len(collection)} adjustment sets ({strategy.value})",
        file=sys.stderr,
    )
    _emit(collection.to_json_dict(), args.out)
    return EXIT_OK


def _oracle_sets(args, model) -> AdjustmentCollection:
    provided = [s is not None for s in (args.sets_file, args.set)]
    if args.set:
        sets = [
            frozenset(tok for tok in spec.split(",") if tok)
            for spec in args.set
        ]
        return AdjustmentCollection(tuple(sets), Strategy.USER, args.x, args.y)
    if args.sets_file:
        payload = json.loads(_read_text(args.sets_file))
        return AdjustmentCollection.from_json_dict(payload, args.x, args.y)
    strategy = Strategy(args.strategy)
    if strategy is Strategy.ALL:
        return enumerate_all_valid(model.graph, args.x, args.y, cap=args.cap)
    return min_plus_collection(model.graph, args.x, args.y)


def cmd_oracle(args: argparse.Namespace) -> int:
    model = parse_sem(_read_text(args.sem))
    collection = _oracle_sets(args, model)
    betas = [
        population_beta(model, args.y, args.x, s) for s in collection.sets
    ]
    payload = {
        "x": args.x,
        "y": args.y,
        "tau": total_effect(model, args.x, args.y),
        "sets": [sorted(s) for s in collection.sets],
        "betas": betas,
        "hypothesis_class": classify_hypothesis(
            model, collection, args.x, args.y
        ).value,
    }
    _emit(payload, args.out)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        import dataclasses

        cfg = dataclasses.replace(cfg, base_seed=args.seed)
    result = run_experiment(cfg)
    summary = experiment_summary(cfg, result)
    if args.out:
        csv_path = f"{args.out}_cells.csv"
        with open(csv_path, "w") as fh:
            fh.write(cells_to_csv(result.cells))
        with open(f"{args.out}_summary.json", "w") as fh:
            fh.write(json.dumps(summary, sort_keys=True) + "\n")
        if args.pp_data:
            with open(f"{args.out}_pp.json", "w") as fh:
                fh.write(json.dumps(pp_data(result.cells), sort_keys=True) + "\n")
    from .harness import rejection_table

    print(format_rejection_table(rejection_table(result.cells)), file=sys.stderr)
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adjrobust",
        description=(
            "Test whether all valid adjustment sets of a candidate causal "
            "DAG estimate the same total effect."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="run the robustness test on data")
    check.add_argument("--graph", required=True, help="graph file (edge list)")
    check.add_argument("--data", required=True, help="dataset CSV")
    check.add_argument("--x", required=True, help="treatment node")
    check.add_argument("--y", required=True, help="outcome node")
    check.add_argument(
        "--strategy", choices=["all", "minplus"], default="minplus"
    )
    check.add_argument("--cap", type=int, default=10_000)
    check.add_argument("--out", default=None, help="also write the JSON here")
    check.add_argument("--verbose", action="store_true", help="include matrices")
    check.set_defaults(func=cmd_check)

    sets = sub.add_parser("sets", help="enumerate adjustment sets")
    sets.add_argument("--graph", required=True)
    sets.add_argument("--x", required=True)
    sets.add_argument("--y", required=True)
    sets.add_argument(
        "--strategy", choices=["all", "minplus"], default="minplus"
    )
    sets.add_argument("--cap", type=int, default=10_000)
    sets.add_argument("--out", default=None)
    sets.set_defaults(func=cmd_sets)

    oracle = sub.add_parser(
        "oracle", help="population coefficients and hypothesis class"
    )
    oracle.add_argument("--sem", required=True, help="SEM file")
    oracle.add_argument("--x", required=True)
    oracle.add_argument("--y", required=True)
    oracle.add_argument(
        "--strategy", choices=["all", "minplus"], default="minplus"
    )
    oracle.add_argument("--cap", type=int, default=10_000)
    oracle.add_argument(
        "--sets-file", default=None, help="JSON collection to evaluate"
    )
    oracle.add_argument(
        "--set",
        action="append",
        default=None,
        help="comma-separated node labels; repeat per set; '' is the empty set",
    )
    oracle.add_argument("--out", default=None)
    oracle.set_defaults(func=cmd_oracle)

    simulate = sub.add_parser("simulate", help="run the experiment grid")
    simulate.add_argument("--config", required=True, help="INI config file")
    simulate.add_argument(
        "--out", default=None, help="prefix for cells CSV / summary JSON"
    )
    simulate.add_argument(
        "--pp-data",
        action="store_true",
        help="also dump sorted p-values per cell",
    )
    simulate.add_argument("--seed", type=int, default=None)
    simulate.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except CapExceeded as exc:
        print(
            f"error: {exc} (try --strategy minplus or raise --cap)",
            file=sys.stderr,
        )
        return EXIT_INPUT_ERROR
    except (ParseError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON input: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except AdjRobustError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


def entry_point() -> None:
    sys.exit(main())
