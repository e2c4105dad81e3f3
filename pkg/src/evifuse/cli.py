"""Command-line interface.

Subcommands: divergence, fuse, train, eval, ablate, grid, quickstart.
Global flags: --config PATH, --seed N, --out DIR.  Exit codes: 0 on
success, 2 for configuration errors, 3 for numeric failures.
"""

import argparse
import csv
import logging
import os
import sys

import numpy as np

from .config import load_config
from .dirichlet import DirichletParams
from .divergence import HolderConfig, phd_closed, phd_mc_oracle
from .errors import ConfigError, DomainError, NonFiniteLossError, TotalConflictError
from .evidence import Opinion, conflict, ds_combine_reduced
from .experiment import (
    data_from_config,
    evaluate,
    metrics_columns,
    run_ablation,
    run_grid,
    run_quickstart,
    run_single,
    write_metrics_csv,
)
from .model import load_model, save_model


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evifuse",
        description="Evidential multi-view fusion experiments and utilities.",
    )
    parser.add_argument("--config", metavar="PATH", default=None, help="config file")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--out", metavar="DIR", default="out", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_div = sub.add_parser("divergence", help="closed-form vs Monte-Carlo divergence")
    p_div.add_argument("--p", required=True, help="first concentration vector, e.g. 2,2")
    p_div.add_argument("--q", required=True, help="second concentration vector")
    p_div.add_argument("--alpha-h", type=float, default=None)
    p_div.add_argument("--gamma", type=float, default=None)
    p_div.add_argument("--n-samples", type=int, default=1_000_000)

    p_fuse = sub.add_parser("fuse", help="combine opinions from a CSV file")
    p_fuse.add_argument("opinions", help="CSV with columns b0..b{K-1},u ('-' = stdin)")

    sub.add_parser("train", help="train a model and save it")
    sub.add_parser("eval", help="evaluate a saved model").add_argument(
        "--model", required=True, help="path to a saved model container"
    )
    sub.add_parser("ablate", help="regularizer ablation (kl / holder / holder_dir)")
    sub.add_parser("grid", help="alpha_h x gamma grid search")
    sub.add_parser("quickstart", help="small end-to-end demo run")
    return parser


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",") if t.strip() != ""])
    except ValueError as err:
        raise ConfigError(f"bad concentration vector {text!r}: {err}") from err


def _cmd_divergence(args, cfg) -> int:
    alpha_h = args.alpha_h if args.alpha_h is not None else float(cfg["holder.alpha_h"])
    gamma = args.gamma if args.gamma is not None else float(cfg["holder.gamma"])
    hcfg = HolderConfig(alpha_h, gamma)
    p = DirichletParams(_parse_vector(args.p))
    q = DirichletParams(_parse_vector(args.q))
    closed = phd_closed(hcfg, p, q)
    est, se = phd_mc_oracle(hcfg, p, q, args.n_samples, cfg["seed"])
    vec = lambda a: ";".join(repr(float(x)) for x in a)
    print(
        f"{alpha_h!r},{gamma!r},{vec(p.alpha)},{vec(q.alpha)},"
        f"{closed!r},{est!r},{se!r}"
    )
    return 0


def _read_opinions(path) -> list[Opinion]:
    fh = sys.stdin if path == "-" else open(path, newline="", encoding="utf-8")
    try:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1].strip().lower() != "u":
            raise ConfigError("opinion CSV needs columns b0..b{K-1},u")
        ops = []
        for rec in reader:
            if not rec:
                continue
            vals = [float(x) for x in rec]
            ops.append(Opinion(np.array(vals[:-1]), vals[-1]))
        if not ops:
            raise ConfigError("opinion CSV contains no rows")
        return ops
    finally:
        if fh is not sys.stdin:
            fh.close()


def _cmd_fuse(args) -> int:
    ops = _read_opinions(args.opinions)
    acc = ops[0]
    for step, op in enumerate(ops[1:], start=1):
        c = conflict(acc, op)
        acc = ds_combine_reduced(acc, op)
        print(f"step,{step},conflict,{c!r}")
    beliefs = ",".join(repr(float(b)) for b in acc.beliefs)
    print(f"fused,{beliefs},{acc.uncertainty!r}")
    return 0


def _cmd_train(args, overrides) -> int:
    cfg = load_config(args.config, overrides)
    model, trace, rows = run_single(cfg, run_id="train")
    os.makedirs(args.out, exist_ok=True)
    model_path = os.path.join(args.out, "model.kphd")
    save_model(model, model_path)
    with open(os.path.join(args.out, "trace.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "accuracy", "lambda"])
        for rec in trace:
            writer.writerow([rec["epoch"], repr(rec["loss"]), repr(rec["accuracy"]), repr(rec["lambda"])])
    write_metrics_csv(os.path.join(args.out, "metrics.csv"), rows, cfg["data.views"])
    print(f"model saved to {model_path}")
    print(f"final train accuracy {trace[-1]['accuracy']:.4f}" if trace else "no epochs run")
    return 0


def _cmd_eval(args, overrides) -> int:
    cfg = load_config(args.config, overrides)
    model = load_model(args.model)
    _, test = data_from_config(cfg)
    from .data import corrupt
    from .experiment import corruption_from

    spec = corruption_from(cfg)
    if spec is not None:
        test = corrupt(test, spec, seed=cfg["seed"] + 1)
    row = evaluate(model, test, cfg, cfg["seed"])
    row.update(
        {
            "run_id": "eval",
            "alpha_h": cfg["holder.alpha_h"],
            "gamma": cfg["holder.gamma"],
            "regularizer": cfg["train.regularizer"],
            "sigma2": spec.noise_sigma2 if spec else 0.0,
            "eta": spec.missing_rate if spec else 0.0,
        }
    )
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "metrics.csv")
    write_metrics_csv(path, [row], test.m)
    cols = metrics_columns(test.m)
    print(",".join(cols))
    print(",".join(_fmt_cell(row.get(c)) for c in cols))
    return 0


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        if args.command == "divergence":
            cfg = load_config(args.config, overrides)
            return _cmd_divergence(args, cfg)
        if args.command == "fuse":
            return _cmd_fuse(args)
        if args.command == "train":
            return _cmd_train(args, overrides)
        if args.command == "eval":
            return _cmd_eval(args, overrides)
        if args.command == "ablate":
            path = run_ablation(args.config, args.out, overrides)
            print(f"wrote {path}")
            return 0
        if args.command == "grid":
            path = run_grid(args.config, args.out, overrides)
            print(f"wrote {path}")
            return 0
        if args.command == "quickstart":
            path = run_quickstart(args.out, overrides.get("seed"), args.config)
            print(f"wrote {path}")
            return 0
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (DomainError, TotalConflictError, NonFiniteLossError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
