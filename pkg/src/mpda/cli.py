"""Command-line surface: fit, transform, benchmark, sweep, partition-inspect.

Exit codes: 0 success, 2 usage error, 3 data error, 4 compute error.
Failures print one JSON line on stderr: {"error": <class>, "message": ...}.

A ``--config key=value`` file can mirror any long flag (keys use the flag
name without the leading dashes, hyphens or underscores both accepted);
explicit command-line flags win on conflict.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import evaluation
from .dataset import load_dataset
from .errors import ComputeError, DataError, MpdaError
from .evaluation import (
    ALGORITHMS,
    benchmark,
    default_m_grid,
    dimension_sweep,
    fit_algorithm,
    parameter_sweep,
)
from .model import load_model, save_model, transform
from .partition import DEFAULT_KPRIME, DEFAULT_MAX_PATCH, partition_class

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_COMPUTE = 4


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="path to the dataset file")
    p.add_argument("--format", choices=("csv", "libsvm"), default="csv")
    p.add_argument("--header", action="store_true", help="skip one CSV header line")


def _add_hyper_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=5, help="neighbor count for the graphs")
    p.add_argument("--kprime", type=int, default=DEFAULT_KPRIME, help="partition neighbor count")
    p.add_argument("--max-patch", type=int, default=DEFAULT_MAX_PATCH, help="patch size cap M")
    p.add_argument("--gamma", type=float, default=1.0, help="tangent-consistency weight")
    p.add_argument("--alpha", type=float, default=1e-3, help="Tikhonov regularizer")
    p.add_argument("--energy", type=float, default=0.95, help="PCA energy for tangent bases")
    p.add_argument(
        "--approximate-partition", action="store_true",
        help="skip geodesics and rank patches by size alone",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpda", description="Supervised dimensionality reduction toolkit"
    )
    parser.add_argument("--config", help="key=value file mirroring the flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="train a model and save it")
    _add_data_flags(p_fit)
    p_fit.add_argument("--algo", required=True, choices=ALGORITHMS)
    p_fit.add_argument("--m", type=int, required=True, help="embedding dimensionality")
    _add_hyper_flags(p_fit)
    p_fit.add_argument("--out", required=True, help="model file to write")
    p_fit.add_argument("--seed", type=int, default=0)

    p_tr = sub.add_parser("transform", help="embed data with a saved model")
    _add_data_flags(p_tr)
    p_tr.add_argument("--model", required=True)
    p_tr.add_argument("--out", required=True, help="embeddings CSV to write")

    p_bm = sub.add_parser("benchmark", help="repeated-split protocol with CV")
    _add_data_flags(p_bm)
    p_bm.add_argument("--algo", required=True, choices=ALGORITHMS)
    p_bm.add_argument("--splits", type=int, default=20)
    p_bm.add_argument("--train-fraction", type=float, default=0.5)
    p_bm.add_argument("--folds", type=int, default=4)
    p_bm.add_argument("--seed", type=int, default=0)
    p_bm.add_argument("--jobs", type=int, default=1)
    p_bm.add_argument("--m", type=int, help="fix the dimensionality instead of CV")
    p_bm.add_argument("--grid-k", type=int, nargs="*", help="CV grid for k")
    p_bm.add_argument("--grid-gamma", type=float, nargs="*", help="CV grid for gamma")
    p_bm.add_argument("--grid-alpha", type=float, nargs="*", help="CV grid for alpha")
    p_bm.add_argument("--m-max", type=int, help="upper end of the m grid")
    p_bm.add_argument("--pca-preprocess", choices=("auto", "on", "off"), default="auto")
    p_bm.add_argument("--out-json", help="full report JSON path")
    p_bm.add_argument("--out-csv", help="per-split error table path")

    p_sw = sub.add_parser("sweep", help="dimension or parameter sweep")
    _add_data_flags(p_sw)
    p_sw.add_argument("--algo", required=True, choices=ALGORITHMS)
    p_sw.add_argument("--splits", type=int, default=5)
    p_sw.add_argument("--train-fraction", type=float, default=0.5)
    p_sw.add_argument("--seed", type=int, default=0)
    p_sw.add_argument("--pca-preprocess", choices=("auto", "on", "off"), default="auto")
    p_sw.add_argument("--param", help="hyperparameter name for a parameter sweep")
    p_sw.add_argument("--values", type=float, nargs="*", help="values for --param")
    p_sw.add_argument("--m", type=int, help="fixed m for a parameter sweep")
    p_sw.add_argument("--m-min", type=int, default=1, help="dimension sweep start")
    p_sw.add_argument("--m-max", type=int, help="dimension sweep end")
    _add_hyper_flags(p_sw)
    p_sw.add_argument("--out", required=True, help="CSV to write")

    p_pi = sub.add_parser("partition-inspect", help="dump per-patch diagnostics as JSON")
    _add_data_flags(p_pi)
    p_pi.add_argument("--kprime", type=int, default=DEFAULT_KPRIME)
    p_pi.add_argument("--max-patch", type=int, default=DEFAULT_MAX_PATCH)
    p_pi.add_argument(
        "--approximate-partition", action="store_true",
        help="skip geodesics and rank patches by size alone",
    )
    p_pi.add_argument("--out", help="output path (default: stdout)")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Fold --config file entries into argv; explicit flags win on conflict."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        parser.error("--config needs a path")
    path = argv[at + 1]
    rest = argv[:at] + argv[at + 2 :]
    command = next((tok for tok in rest if not tok.startswith("-")), None)
    choices = parser._subparsers._group_actions[0].choices  # type: ignore[union-attr]
    if command not in choices:
        raise DataError("--config requires a known subcommand on the command line")
    option_map = {
        opt: action for action in choices[command]._actions for opt in action.option_strings
    }
    present = {tok.split("=", 1)[0] for tok in rest if tok.startswith("--")}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    inject: list[str] = []
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"config line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if flag not in option_map:
            raise DataError(f"config line {lineno}: unknown key {key!r} for {command}")
        if flag in present:
            continue
        action = option_map[flag]
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() in ("1", "true", "yes", "on"):
                inject.append(flag)
            elif value.lower() not in ("0", "false", "no", "off"):
                raise DataError(f"config line {lineno}: {key!r} must be a boolean")
        elif action.nargs in ("*", "+"):
            inject.append(flag)
            inject.extend(value.split())
        else:
            inject.extend([flag, value])
    ci = rest.index(command)
    return rest[: ci + 1] + inject + rest[ci + 1 :]


def _write_embeddings(path: str, B: np.ndarray) -> None:
    np.savetxt(path, B, delimiter=",", fmt="%.17g")


def cmd_fit(args) -> int:
    ds = load_dataset(args.data, args.format, args.header)
    params: dict = {}
    if args.algo in ("mpda", "pmpda"):
        params = {"k": args.k, "gamma": args.gamma, "alpha": args.alpha, "energy": args.energy}
    if args.algo == "mpda":
        params.update(
            kprime=args.kprime, max_patch=args.max_patch,
            approximate_partition=args.approximate_partition,
        )
    model = fit_algorithm(args.algo, ds, args.m, params)
    save_model(model, args.out)
    print(f"saved {args.algo} model ({model.d} -> {model.m}) to {args.out}")
    return EXIT_OK


def cmd_transform(args) -> int:
    model = load_model(args.model)
    ds = load_dataset(args.data, args.format, args.header)
    B = transform(model, ds.features)
    _write_embeddings(args.out, B)
    print(f"wrote {B.shape[0]}x{B.shape[1]} embeddings to {args.out}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    ds = load_dataset(args.data, args.format, args.header)
    grid = None
    if args.algo in ("mpda", "pmpda"):
        grid = dict(evaluation.DEFAULT_GRIDS[args.algo])
        if args.grid_k is not None:
            grid["k"] = list(args.grid_k)
        if args.grid_gamma is not None:
            grid["gamma"] = list(args.grid_gamma)
        if args.grid_alpha is not None:
            grid["alpha"] = list(args.grid_alpha)
    m_grid = None
    if args.m_max is not None:
        m_grid = list(range(1, args.m_max + 1))
    report = benchmark(
        ds,
        args.algo,
        splits=args.splits,
        train_fraction=args.train_fraction,
        folds=args.folds,
        grid=grid,
        m_grid=m_grid,
        fixed_m=args.m,
        seed=args.seed,
        pca_mode=args.pca_preprocess,
        jobs=args.jobs,
    )
    payload = report.to_dict()
    print(json.dumps({
        "algorithm": payload["algorithm"],
        "mean_error": payload["mean_error"],
        "std_error": payload["std_error"],
        "mean_dimensionality": payload["mean_dimensionality"],
    }))
    if args.out_json:
        with open(args.out_json, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
    if args.out_csv:
        with open(args.out_csv, "w", encoding="utf-8") as fh:
            for row in report.csv_rows():
                fh.write(",".join(str(v) for v in row) + "\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    ds = load_dataset(args.data, args.format, args.header)
    params: dict = {}
    if args.algo in ("mpda", "pmpda"):
        params = {"k": args.k, "gamma": args.gamma, "alpha": args.alpha, "energy": args.energy}
    if args.algo == "mpda":
        params.update(kprime=args.kprime, max_patch=args.max_patch)
    if args.param:
        if not args.values or args.m is None:
            raise DataError("--param needs --values and a fixed --m")
        if args.param not in params:
            raise DataError(f"unknown sweep parameter {args.param!r} for {args.algo}")
        base = {k: v for k, v in params.items() if k != args.param}
        rows = parameter_sweep(
            ds, args.algo, args.param, list(args.values), args.m,
            splits=args.splits, train_fraction=args.train_fraction,
            base_params=base, seed=args.seed, pca_mode=args.pca_preprocess,
        )
        header = (args.param, "mean_accuracy")
    else:
        top = args.m_max or default_m_grid(args.algo, ds)[-1]
        rows = dimension_sweep(
            ds, args.algo, list(range(args.m_min, top + 1)),
            splits=args.splits, train_fraction=args.train_fraction,
            params=params, seed=args.seed, pca_mode=args.pca_preprocess,
        )
        header = ("m", "mean_accuracy")
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_partition_inspect(args) -> int:
    ds = load_dataset(args.data, args.format, args.header)
    out = []
    for c in sorted(ds.class_counts):
        rows = ds.class_indices(c)
        part = partition_class(
            ds.features[rows], args.kprime, args.max_patch, args.approximate_partition
        )
        out.append({
            "class": ds.label_names.get(c, c),
            "patches": [
                {
                    "size": int(len(members)),
                    "linearity": float(part.linearity[pid]),
                    "members": [int(rows[i]) for i in members],
                }
                for pid, members in enumerate(part.patches)
            ],
        })
    text = json.dumps(out, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


_COMMANDS = {
    "fit": cmd_fit,
    "transform": cmd_transform,
    "benchmark": cmd_benchmark,
    "sweep": cmd_sweep,
    "partition-inspect": cmd_partition_inspect,
}


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        argv = _apply_config(parser, list(argv))
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except DataError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_DATA
    except (ComputeError, MpdaError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_COMPUTE
    except OSError as exc:
        print(json.dumps({"error": "OSError", "message": str(exc)}), file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
