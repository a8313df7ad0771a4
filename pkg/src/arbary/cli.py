"""``arbary`` command line: synth, barycenter, sweep, classify, fit.

Exit codes: 0 success, 2 usage error, 3 convergence failure, 4 data error.
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from . import io
from .centroid import multi_start_fit, order_sweep
from .classify import METHODS, evaluate, fit_centroids, format_table
from .config import KEY_HELP, RunConfig, load_config, parse_overrides
from .errors import ArbaryError, ConvergenceError
from .ot import barycenter_objective, free_barycenter
from .spectral import arithmetic_mean_centroid, build_cost
from .synth import SynthSpec, synth_ar_targets, synth_classes

log = logging.getLogger("arbary")

EXIT_OK, EXIT_USAGE, EXIT_CONVERGENCE, EXIT_DATA = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _epilog() -> str:
    defaults = RunConfig()
    width = max(map(len, KEY_HELP))
    lines = ["config keys (--config file of 'key = value' lines, or --set key=value):"]
    for key, text in KEY_HELP.items():
        lines.append(f"  {key:<{width}}  {text} [default: {getattr(defaults, key)}]")
    lines.append("")
    lines.append("exit codes: 0 success, 2 usage, 3 convergence failure, 4 data error")
    return "\n".join(lines)


def _resolve_config(args) -> RunConfig:
    base = load_config(args.config) if args.config else RunConfig()
    pairs = {}
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        pairs[key.strip()] = value
    if args.seed is not None:
        pairs["seed"] = str(args.seed)
    if args.out_dir is not None:
        pairs["out_dir"] = args.out_dir
    return parse_overrides(pairs, base)


def _out(cfg: RunConfig, name: str) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _read_set(path, cfg: RunConfig):
    data = io.read_set_json(path)
    if data.grid.n_bins != cfg.n_bins:
        log.info("input grid has %d bins (config n_bins = %d); using the input grid", data.grid.n_bins, cfg.n_bins)
    return data


def cmd_synth(args, cfg: RunConfig) -> int:
    if args.kind == "classes":
        spec = SynthSpec(
            jitter=cfg.jitter,
            samples_per_class=cfg.samples_per_class,
            signal_length=cfg.signal_length,
            burg_order=cfg.burg_order,
            n_bins=cfg.n_bins,
            seed=cfg.seed,
            shared_jitter=cfg.shared_jitter,
        )
        data = synth_classes(spec)
    else:
        data = synth_ar_targets(cfg.n_targets, cfg.target_order, cfg.n_bins, cfg.seed)
    path = _out(cfg, args.output or f"synth_{args.kind}.json")
    io.write_set_json(data, path)
    print(path)
    return EXIT_OK


def cmd_barycenter(args, cfg: RunConfig) -> int:
    data = _read_set(args.input, cfg)
    cost = build_cost(data.grid)
    sk = cfg.sinkhorn()
    mean = arithmetic_mean_centroid(data.psds)
    otbc = free_barycenter(data.psds, cost, sk)
    header = ["omega", "mean", "otbc"]
    columns = [list(map(float, data.grid.points)), list(map(float, mean.mass)), list(map(float, otbc.mass))]
    names, costs = ["mean", "otbc"], [
        barycenter_objective(mean, data.psds, cost, sk)[0],
        barycenter_objective(otbc, data.psds, cost, sk)[0],
    ]
    if not args.no_otp:
        report = multi_start_fit(data.psds, cfg.portfolio(), cost, cfg.optimizer(), barycenter=otbc)
        header.append("otp")
        columns.append(list(map(float, report.best_fit.psd.mass)))
        names.append("otp")
        costs.append(report.best_fit.objective)
    io.write_columns_csv(_out(cfg, "barycenter.csv"), header, columns)
    io.write_columns_csv(_out(cfg, "barycenter_cost.csv"), ["method", "objective"], [names, costs])
    print(_out(cfg, "barycenter.csv"))
    return EXIT_OK


def _parse_orders(text: str) -> List[int]:
    orders = []
    try:
        for part in text.split(","):
            if "-" in part:
                lo, hi = map(int, part.split("-"))
                orders.extend(range(lo, hi + 1))
            elif part.strip():
                orders.append(int(part))
    except ValueError:
        raise UsageError(f"cannot parse --orders {text!r}; use e.g. 2-10 or 2,4,6") from None
    if not orders or min(orders) < 1:
        raise UsageError("--orders must list positive model orders")
    return sorted(set(orders))


def cmd_sweep(args, cfg: RunConfig) -> int:
    data = _read_set(args.input, cfg)
    orders = _parse_orders(args.orders)
    rows = order_sweep(data.psds, orders, build_cost(data.grid), cfg.optimizer(), cfg.portfolio())
    path = _out(cfg, "sweep.csv")
    io.write_columns_csv(
        path,
        ["P", "cost_otbc", "cost_ywinit", "cost_otp"],
        [[r.order for r in rows], [r.cost_otbc for r in rows], [r.cost_ywinit for r in rows], [r.cost_otp for r in rows]],
    )
    print(path)
    return EXIT_OK


def _parse_methods(text: str) -> List[str]:
    methods = [m.strip().upper() for m in text.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise UsageError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    return list(dict.fromkeys(methods))


def cmd_classify(args, cfg: RunConfig) -> int:
    methods = _parse_methods(args.methods)
    if Path(args.train).resolve() == Path(args.test).resolve() and not args.allow_same:
        raise UsageError("train and test are the same file; pass --allow-same to override")
    train, test = _read_set(args.train, cfg), _read_set(args.test, cfg)
    reports = []
    for method in methods:
        bank = fit_centroids(train, method, cfg.sinkhorn(), cfg.optimizer(), cfg.portfolio(), cfg.direction)
        report = evaluate(test, bank)
        reports.append(report)
        io.write_confusion_csv(report, _out(cfg, f"confusion_{method}.csv"))
        log.info("%s: bacc=%.4f", method, report.bacc)
    config_lines = [ln for ln in cfg.to_text().splitlines() if not ln.startswith("out_dir")]
    io.write_json({"config": config_lines, "reports": [r.to_dict() for r in reports]}, _out(cfg, "metrics.json"))
    table = format_table(reports)
    _out(cfg, "table.txt").write_text(table)
    sys.stdout.write(table)
    return EXIT_OK


def cmd_fit(args, cfg: RunConfig) -> int:
    data = _read_set(args.input, cfg)
    members = data.members(args.cls) if args.cls else data.psds
    if not members:
        raise UsageError(f"class {args.cls!r} not found in {args.input}")
    report = multi_start_fit(members, cfg.portfolio(), build_cost(data.grid), cfg.optimizer())
    path = _out(cfg, args.output or "fit.json")
    io.write_json(report.to_dict(), path)
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int, help="root seed (overrides the config)")
    common.add_argument("--out-dir", help="output directory (overrides the config)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key; repeatable")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    fmt = argparse.RawDescriptionHelpFormatter
    parser = argparse.ArgumentParser(prog="arbary", description=__doc__, epilog=_epilog(), formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text, epilog=_epilog(), formatter_class=fmt)
        p.set_defaults(func=func)
        return p

    p = add("synth", cmd_synth, "generate a synthetic labeled PSD set (JSON)")
    p.add_argument("--kind", choices=("classes", "ar"), default="classes",
                   help="classes: jittered AR classes through Burg estimation; ar: exact AR target spectra")
    p.add_argument("--output", help="file name inside the output directory")

    p = add("barycenter", cmd_barycenter, "arithmetic mean, OT barycenter and OT-P fit of one PSD set")
    p.add_argument("input", help="labeled PSD set JSON")
    p.add_argument("--no-otp", action="store_true", help="skip the parametric fit")

    p = add("sweep", cmd_sweep, "best AR fit cost per model order against the barycenter bound")
    p.add_argument("input", help="labeled PSD set JSON")
    p.add_argument("--orders", default="2-10", help="orders, e.g. 2-10 or 2,4,8 (default 2-10)")

    p = add("classify", cmd_classify, "nearest-centroid classification report per method")
    p.add_argument("train", help="training set JSON")
    p.add_argument("test", help="test set JSON (must be disjoint from training data)")
    p.add_argument("--methods", default=",".join(METHODS), help=f"comma list from {', '.join(METHODS)}")
    p.add_argument("--allow-same", action="store_true", help="permit train and test to be the same file")

    p = add("fit", cmd_fit, "multi-start AR fit to a PSD set, written as JSON")
    p.add_argument("input", help="labeled PSD set JSON")
    p.add_argument("--class", dest="cls", help="fit only the members of this class")
    p.add_argument("--output", help="file name inside the output directory")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = _resolve_config(args)
    except (UsageError, ArbaryError) as exc:
        print(f"arbary: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"arbary: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"arbary: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ArbaryError, OSError) as exc:
        print(f"arbary: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
