"""Command line entry point: ``balancedrift <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

EXIT_OK, EXIT_CONFIG, EXIT_ALL_FAILED, EXIT_PARTIAL = 0, 1, 2, 3


def _hp_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def cmd_run(args) -> int:
    from .runner import ConfigError, load_config, run
    from .data import DatasetError, FetchError

    try:
        config = load_config(args.config)
        if args.workers:
            from dataclasses import replace

            config = replace(config, workers=args.workers)
        summary = run(config)
    except (ConfigError, FileNotFoundError, DatasetError, FetchError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{summary.n_cells} cells, {summary.n_failed} failed; results in {summary.output_dir}", file=sys.stderr)
    return summary.exit_code


def cmd_plot(args) -> int:
    from .runner import performance_gain_table, read_results_csv, render_gain_plot

    table = performance_gain_table(read_results_csv(args.results), args.kind)
    render_gain_plot(table, args.facet, args.out, kind=args.kind)
    print(f"{len(table)} points -> {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .data import SimulationScenario, scenario_grid, simulate, summarize, write_csv

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.grid:
        pairs = scenario_grid(args.n, args.seed)
    else:
        if args.beta0 is None:
            print("either --grid or --beta0 is required", file=sys.stderr)
            return EXIT_CONFIG
        sc = SimulationScenario(args.beta0, args.variance, args.n, args.seed)
        pairs = [(sc, simulate(sc))]
    for sc, d in pairs:
        path = write_csv(d, out / f"{d.name}.csv")
        s = summarize(d)
        print(f"{path}\tbeta0={sc.beta0}\tv={sc.error_variance}\tIR={s.imbalance_ratio:.3f}")
    return EXIT_OK


def cmd_registry(args) -> int:
    from .data import registry_csv

    text = registry_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_balance(args) -> int:
    from .balancing import BalancerSpec, balance
    from .data import load_csv, write_csv

    d = load_csv(args.input, args.target)
    spec = BalancerSpec(
        args.method, k_neighbors=args.k, m_neighbors=args.m, near_miss_k=args.near_miss_k, seed=args.seed,
        standardize=args.standardize,
    )
    result = balance(d, spec)
    extra = {"__synthetic": result.synthetic_mask.astype(int)} if result.synthetic_mask.any() else None
    write_csv(result.data, args.output, extra)
    counts = result.data.class_counts()
    print(f"{args.method}: {d.n_rows} -> {result.data.n_rows} rows, class counts {counts.tolist()}", file=sys.stderr)
    return EXIT_OK


def cmd_train(args) -> int:
    from .data import load_csv
    from .learners import LearnerSpec, save_model, train

    hp = {}
    for item in args.hp or []:
        key, sep, value = item.partition("=")
        if not sep:
            print(f"--hp expects key=value, got {item!r}", file=sys.stderr)
            return EXIT_CONFIG
        hp[key] = _hp_value(value)
    d = load_csv(args.input, args.target)
    model = train(LearnerSpec(args.family, hp, args.seed), d)
    save_model(model, args.output)
    print(f"{model.model_id} -> {args.output}", file=sys.stderr)
    return EXIT_OK


def cmd_explain(args) -> int:
    from . import explain as ex
    from .data import Dataset, load_csv
    from .learners import load_model

    model = load_model(args.model)
    bg = load_csv(args.background, args.target)
    missing = set(model.feature_names) ^ set(bg.feature_names)
    if missing:
        print(f"background columns do not match the model: {sorted(missing)}", file=sys.stderr)
        return EXIT_CONFIG
    # align background columns with the model's training order
    cols = [bg.column_index(v) for v in model.feature_names]
    bg = Dataset(bg.name, bg.features[:, cols], model.feature_names, bg.target, "csv", bg.target_name)
    variables = args.variables or list(model.feature_names)
    out = args.out or sys.stdout
    if args.kind == "vi":
        vi = ex.permutation_importance(model, bg, args.vi_repeats, args.seed)
        _emit(ex.write_importance_csv, [vi], out)
        return EXIT_OK
    if args.kind == "pdp":
        profiles = [ex.pdp(model, bg, ex.make_grid(bg, v, args.grid_k)) for v in variables]
    else:
        profiles = [ex.ale(model, bg, v, args.ale_bins) for v in variables]
    _emit(ex.write_profiles_csv, profiles, out)
    return EXIT_OK


def _emit(writer, items, out) -> None:
    if out is sys.stdout:
        import tempfile

        with tempfile.TemporaryDirectory() as tmp:
            path = writer(items, Path(tmp) / "out.csv")
            sys.stdout.write(path.read_text())
    else:
        writer(items, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="balancedrift", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment grid from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=None, help="override the config's worker count")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="render a performance gain plot from results.csv")
    p.add_argument("--results", required=True)
    p.add_argument("--kind", choices=("pdp", "ale"), default="pdp")
    p.add_argument("--facet", choices=("model", "dataset"), default="model")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("simulate", help="write simulated datasets as CSV")
    p.add_argument("--grid", action="store_true", help="all 12 scenarios")
    p.add_argument("--beta0", type=float)
    p.add_argument("--variance", type=float, default=1.0)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("registry", help="benchmark dataset registry")
    p.add_argument("--list", action="store_true", help="print the registry as CSV (default)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_registry)

    p = sub.add_parser("balance", help="resample a CSV dataset")
    p.add_argument("--method", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--target", default="target")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--near-miss-k", type=int, default=3)
    p.add_argument("--standardize", action="store_true", help="k-NN on standardized features")
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("train", help="train a model on a CSV dataset")
    p.add_argument("--family", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--target", default="target")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hp", nargs="*", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("explain", help="PDP / ALE / permutation importance for a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--background", required=True)
    p.add_argument("--kind", choices=("pdp", "ale", "vi"), required=True)
    p.add_argument("--target", default="target")
    p.add_argument("--grid-k", type=int, default=101)
    p.add_argument("--ale-bins", type=int, default=20)
    p.add_argument("--vi-repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variables", nargs="*")
    p.add_argument("--out")
    p.set_defaults(func=cmd_explain)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
