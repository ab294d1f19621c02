"""Command-line surface tying generation, labeling, training, and evaluation
together. Exit codes: 0 success, 1 validation failure, 2 usage error."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness, heuristics, tsplib_io
from .errors import TsplabError
from .geometry import tour_length
from .instances import (
    LabelBudget,
    generate_uniform,
    hardness_indicator,
    label,
    load_dataset,
    save_dataset,
    LabeledPair,
)
from .model import ModelConfig, grad_check, init_params, save_params, train, write_log


def _fmt_len(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _load_tsplib_dir(directory: str):
    names = tsplib_io.fixture_names(directory)
    instances = []
    opt_tours = {}
    for name in names:
        inst = tsplib_io.to_instance(tsplib_io.load_fixture(name, directory))
        instances.append(inst)
        tf = tsplib_io.load_fixture_tour(name, directory)
        if tf is not None:
            opt_tours[inst.id] = tsplib_io.tour_from_file(tf)
    return instances, opt_tours


def _cmd_gen(args) -> int:
    instances = generate_uniform(args.n, args.count, args.seed)
    save_dataset([LabeledPair(instance=i, tour=None, oracle=None) for i in instances], args.out)
    print(f"wrote {len(instances)} instances to {args.out}")
    return 0


def _cmd_label(args) -> int:
    pairs = load_dataset(args.infile)
    budget = LabelBudget(restarts=args.restarts, seed=args.seed, external_tours=args.tours)
    labeled = label([p.instance for p in pairs], args.oracle.replace("-", "_").upper(), budget)
    save_dataset(labeled, args.out)
    print(f"labeled {len(labeled)} instances with {args.oracle} -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    from .errors import ConfigError

    dataset = load_dataset(args.data)
    overrides = {}
    if args.config:
        try:
            overrides = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{args.config}: not valid JSON: {e}") from e
    try:
        config = ModelConfig(**overrides)
    except TypeError as e:
        raise ConfigError(f"{args.config}: {e}") from e
    params, log = train(dataset, config)
    save_params(params, args.out_checkpoint)
    if args.log:
        write_log(log, args.log)
    final = log[-1].loss if log else float("nan")
    print(f"trained {len(log)} steps; final loss {final:.4f}; checkpoint -> {args.out_checkpoint}")
    return 0


def _cmd_eval(args) -> int:
    if bool(args.data) == bool(args.tsplib_dir):
        print("error: exactly one of --data / --tsplib-dir is required", file=sys.stderr)
        return 2
    opt_tours = None
    if args.data:
        instances = [p.instance for p in load_dataset(args.data)]
    else:
        instances, opt_tours = _load_tsplib_dir(args.tsplib_dir)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    oracle = None if args.oracle in (None, "none") else args.oracle
    cfg = heuristics.HeuristicConfig(seed=args.seed)
    records = harness.evaluate(
        instances,
        methods,
        oracle,
        cfg=cfg,
        opt_tours=opt_tours,
        measure_time=not args.no_timing,
    )
    if args.out_csv:
        harness.write_records_csv(records, args.out_csv)
    text, _ = harness.table(records)
    print(text, end="")
    return 0


def _cmd_solve(args) -> int:
    inst = tsplib_io.to_instance(tsplib_io.load_instance(args.tsplib))
    records = harness.evaluate([inst], [args.method], oracle=None, measure_time=False)
    for r in records:
        print(f"{r.instance_id} {r.method} {_fmt_len(r.tour_len)}")
    return 0


def _cmd_hardness(args) -> int:
    path = Path(args.tsplib)
    inst = tsplib_io.to_instance(tsplib_io.load_instance(path))
    m = inst.matrix()
    source = args.tour_source
    if source == "auto":
        source = "opt-tour" if path.with_suffix(".opt.tour").exists() else "two-opt"
    if source == "opt-tour":
        tf = tsplib_io.load_tour(path.with_suffix(".opt.tour"))
        tour = tsplib_io.tour_from_file(tf)
    elif source == "two-opt":
        tour = heuristics.two_opt(m, heuristics.nearest_neighbor(m), mode="best_improvement")
    else:  # nearest-neighbor
        tour = heuristics.nearest_neighbor(m)
    report = hardness_indicator(
        inst,
        tour_length(m, tour),
        area_convention=args.area.upper(),
        form=args.form.upper(),
        tour_source=source,
    )
    print(
        f"{inst.id} n={report.n} tour_len={_fmt_len(report.tour_len)} area={report.area:.6g} "
        f"form={report.form} indicator={report.indicator:.6f} rank={report.rank:.6f} "
        f"tour-source={report.tour_source}"
    )
    return 0


def _cmd_tsplib_check(args) -> int:
    directory = args.dir or tsplib_io.fixtures_dir()
    expected = tsplib_io.expected_optima()
    failures = 0
    checked = 0
    for name in tsplib_io.fixture_names(directory):
        tf = tsplib_io.load_fixture_tour(name, directory)
        if tf is None:
            continue
        inst = tsplib_io.to_instance(tsplib_io.load_fixture(name, directory))
        tour = tsplib_io.tour_from_file(tf)
        length = tour_length(inst.matrix(), tour)
        checked += 1
        if name in expected:
            if length == expected[name]:
                print(f"{name} {_fmt_len(length)} OK")
            else:
                print(f"{name} {_fmt_len(length)} MISMATCH (expected {expected[name]})")
                failures += 1
        else:
            print(f"{name} {_fmt_len(length)} OK (no reference value; tour is valid)")
    if checked == 0:
        print("no .opt.tour fixtures found", file=sys.stderr)
        return 1
    return 1 if failures else 0


def _cmd_grad_check(args) -> int:
    report = grad_check(trials=args.trials, seed=args.seed)
    print(report)
    return 0 if report.max_rel_err <= args.tol else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsplab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate uniform unit-square instances")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("label", help="attach oracle tours to a dataset")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument(
        "--oracle",
        required=True,
        choices=["brute", "held-karp", "heuristic-best", "external"],
    )
    p.add_argument("--out", required=True)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tours", default=None, help="sidecar JSONL for the external oracle")
    p.set_defaults(func=_cmd_label)

    p = sub.add_parser("train", help="train the pointer model on a labeled dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--config", default=None, help="JSON file of model config overrides")
    p.add_argument("--out-checkpoint", required=True)
    p.add_argument("--log", default=None, help="CSV training log (step, lr, loss)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="run methods over a dataset or TSPLIB directory")
    p.add_argument("--data", default=None)
    p.add_argument("--tsplib-dir", default=None)
    p.add_argument("--methods", required=True, help="comma-separated method names")
    p.add_argument("--oracle", default="none", choices=["none", "held-karp", "opt-tour"])
    p.add_argument("--out-csv", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--no-timing",
        action="store_true",
        help="record wall_ms as 0.0 so outputs are bit-reproducible",
    )
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("solve", help="solve one TSPLIB file with one method")
    p.add_argument("--tsplib", required=True)
    p.add_argument("--method", required=True)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("hardness", help="tour-length hardness statistic of an instance")
    p.add_argument("--tsplib", required=True)
    p.add_argument("--form", default="B", choices=["A", "B", "a", "b"])
    p.add_argument("--area", default="bbox", choices=["bbox", "hull"])
    p.add_argument(
        "--tour-source",
        default="auto",
        choices=["auto", "opt-tour", "two-opt", "nearest-neighbor"],
    )
    p.set_defaults(func=_cmd_hardness)

    p = sub.add_parser("tsplib-check", help="verify bundled optimal-tour fixtures")
    p.add_argument("--dir", default=None)
    p.set_defaults(func=_cmd_tsplib_check)

    p = sub.add_parser("grad-check", help="finite-difference check of model gradients")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=_cmd_grad_check)

    return parser


def cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else 0
    try:
        return args.func(args)
    except (TsplabError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
