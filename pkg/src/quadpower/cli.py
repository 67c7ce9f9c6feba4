"""Command-line driver for reproducible, config-file-driven pipeline runs.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Every run directory receives a manifest with the resolved configuration,
seed, toolkit version, and input digests; reruns get fresh timestamped
directories unless --force is given.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import (ContractError, Dataset, SplitSpec, split_indices)
from .dataio import read_dataset, write_dataset
from .ingest import LogFormatError, parse_log
from .preprocess import (FilterConfig, correlation_heatmap, preprocess_log,
                         samples_to_dataset)
from .learners import (NumericError, RegressorConfig, TrainedRegressor,
                       fit_regressor)
from .stacking import StackedModel, default_base_configs, fit_stacked
from .evaluate import (BENCHMARK_HYPERPARAMETERS, EvalReport,
                       GridSearchResult, benchmark_table,
                       evaluate_model, grid_search,
                       prepare_benchmark_datasets, sensitivity_study,
                       write_reports, SENSITIVITY_SIZES, SENSITIVITY_REPEATS)
from .analysis import (error_distribution, flight_energy_errors,
                       trace_comparison, write_error_histogram,
                       write_flight_energy, write_trace,
                       DEFAULT_ENERGY_BOUND_J)
from .synth import SynthConfig, generate_dataset

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

STUDIES = ("sensitivity", "error-dist", "flight-energy", "trace", "benchmark")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def make_run_dir(out: str, force: bool) -> Path:
    out = Path(out)
    if out.exists() and any(out.iterdir()) and not force:
        stamp = time.strftime("%Y%m%d-%H%M%S", time.gmtime())
        fresh = out.with_name(f"{out.name}-{stamp}")
        k = 0
        while fresh.exists():
            k += 1
            fresh = out.with_name(f"{out.name}-{stamp}-{k}")
        out = fresh
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(run_dir: Path, subcommand: str, resolved: dict,
                   inputs: list[Path]) -> None:
    manifest = {
        "tool": "quadpower",
        "version": __version__,
        "subcommand": subcommand,
        "config": resolved,
        "inputs": {str(p): _sha256(p) for p in inputs},
    }
    (run_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise ContractError(f"config file not found: {p}")
    return json.loads(p.read_text())


def _resolve(cfg: dict, key: str, flag, default):
    """Flags beat config-file values beat defaults."""
    if flag is not None:
        return flag
    return cfg.get(key, default)


def _parse_hyper(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ContractError(f"hyperparameter must be key=value, got {pair!r}")
        k, _, v = pair.partition("=")
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def cmd_synth(args) -> int:
    cfg = _load_config(args.config)
    synth_cfg = SynthConfig(
        n_flights=int(_resolve(cfg, "n_flights", args.n_flights, 20)),
        noise_std_w=float(_resolve(cfg, "noise_std_w", args.noise_std, 20.0)),
        seed=int(_resolve(cfg, "seed", args.seed, 0)),
    )
    run = make_run_dir(args.out, args.force)
    ds = generate_dataset(synth_cfg)
    write_dataset(ds, run / "dataset.csv")
    resolved = {"n_flights": synth_cfg.n_flights,
                "noise_std_w": synth_cfg.noise_std_w,
                "seed": synth_cfg.seed}
    write_manifest(run, "synth", resolved, [run / "dataset.csv"])
    print(f"wrote {run / 'dataset.csv'}: {ds.m} samples, "
          f"{len(set(ds.flight_ids))} flights")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    cfg = _load_config(args.config)
    filter_cfg = FilterConfig(
        median_window=int(_resolve(cfg, "median_window", args.median_window, 5)),
        power_floor=float(_resolve(cfg, "power_floor", args.power_floor, 20.0)),
    )
    inputs = [Path(p) for p in args.input]
    for p in inputs:
        if not p.exists():
            raise ContractError(f"input log not found: {p}")
    run = make_run_dir(args.out, args.force)
    all_samples = []
    for p in inputs:
        log = parse_log(p, args.schema)
        samples = preprocess_log(log, filter_cfg)
        print(f"{p}: {len(samples)} clean samples "
              f"({log.flight_id}, {log.aircraft.name})")
        all_samples.extend(samples)
    if not all_samples:
        raise ContractError("no samples survived preprocessing")
    ds = samples_to_dataset(all_samples)
    write_dataset(ds, run / "dataset.csv")
    if args.correlations:
        C = correlation_heatmap(ds.X, ds.y)
        np.savetxt(run / "correlations.csv", C, delimiter=",")
    resolved = {"median_window": filter_cfg.median_window,
                "power_floor": filter_cfg.power_floor,
                "schema": args.schema}
    write_manifest(run, "preprocess", resolved, inputs)
    print(f"wrote {run / 'dataset.csv'}: {ds.m} samples")
    return EXIT_OK


def _split_spec(cfg, args) -> SplitSpec:
    return SplitSpec(
        train_fraction=float(_resolve(cfg, "train_fraction",
                                      args.train_fraction, 0.7)),
        seed=int(_resolve(cfg, "seed", args.seed, 0)),
        mode=_resolve(cfg, "split_mode", args.split_mode, "by-sample"),
    )


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    ds = read_dataset(args.dataset)
    spec = _split_spec(cfg, args)
    seed = spec.seed
    tr, te = split_indices(ds.m, spec, ds.flight_ids)
    hyper = dict(cfg.get("hyperparameters", {}))
    hyper.update(_parse_hyper(args.hyper))
    run = make_run_dir(args.out, args.force)

    if args.model == "stacked":
        folds = int(_resolve(cfg, "folds", args.folds, 5))
        model = fit_stacked(ds.X[tr], ds.y[tr], K=folds, seed=seed)
        model.save(run / "model.json")
        reports = [
            _report(model, ds, tr, "stacked", "training"),
            _report(model, ds, te, "stacked", "testing"),
        ]
    else:
        rc = RegressorConfig(args.model, hyper, seed=seed)
        model = fit_regressor(rc, ds.X[tr], ds.y[tr])
        model.save(run / "model.json")
        reports = [
            _report(model, ds, tr, args.model, "training"),
            _report(model, ds, te, args.model, "testing"),
        ]
    write_reports(reports, run / "reports.csv")
    resolved = {"model": args.model, "seed": seed,
                "train_fraction": spec.train_fraction, "split_mode": spec.mode,
                "hyperparameters": hyper}
    write_manifest(run, "train", resolved, [Path(args.dataset)])
    for r in reports:
        print(f"{r.split}: mse={r.mse:.3f} mape={r.mape:.4f} r2={r.r2:.4f}")
    return EXIT_OK


def _report(model, ds: Dataset, idx, model_id, split_name) -> EvalReport:
    return evaluate_model(model, ds.X[idx], ds.y[idx], model_id,
                          "dataset", split_name)


def cmd_tune(args) -> int:
    cfg = _load_config(args.config)
    ds = read_dataset(args.dataset)
    grid = json.loads(Path(args.grid).read_text())
    if not isinstance(grid, list):
        raise ContractError("grid file must hold a list of hyperparameter maps")
    seed = int(_resolve(cfg, "seed", args.seed, 0))
    k_cv = int(_resolve(cfg, "cv_folds", args.cv_folds, 5))
    run = make_run_dir(args.out, args.force)
    result = grid_search(args.variant, ds.X, ds.y, grid, K_cv=k_cv,
                         seed=seed, n_jobs=args.threads or 1)
    (run / "grid.csv").write_text("\n".join(result.to_rows()) + "\n")
    (run / "best.json").write_text(
        json.dumps(result.best.to_dict(), sort_keys=True) + "\n")
    write_manifest(run, "tune", {"variant": args.variant, "seed": seed,
                                 "cv_folds": k_cv, "grid_file": args.grid},
                   [Path(args.dataset), Path(args.grid)])
    print(f"best {args.variant} config (cv mse {result.best_score:.3f}): "
          f"{result.best.hyperparameters}")
    return EXIT_OK


def _load_model(path: str):
    doc = json.loads(Path(path).read_text())
    if doc.get("format") == "quadpower-stacked-model":
        return StackedModel.from_dict(doc)
    return TrainedRegressor.from_dict(doc)


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    ds = read_dataset(args.dataset)
    run = make_run_dir(args.out, args.force)
    yhat = model.predict(ds.X)
    lines = ["flight_id,t,power,prediction"]
    for i in range(ds.m):
        lines.append(f"{ds.flight_ids[i]},{float(ds.t[i])!r},"
                     f"{float(ds.y[i])!r},{float(yhat[i])!r}")
    (run / "predictions.csv").write_text("\n".join(lines) + "\n")
    write_manifest(run, "predict", {"model": args.model},
                   [Path(args.model), Path(args.dataset)])
    print(f"wrote {run / 'predictions.csv'}: {ds.m} predictions")
    return EXIT_OK


def cmd_study(args) -> int:
    cfg = _load_config(args.config)
    ds = read_dataset(args.dataset)
    seed = int(_resolve(cfg, "seed", args.seed, 0))
    threads = args.threads or 1
    run = make_run_dir(args.out, args.force)
    resolved = {"study": args.study, "seed": seed}

    if args.study == "sensitivity":
        sizes = (tuple(int(s) for s in args.sizes.split(","))
                 if args.sizes else SENSITIVITY_SIZES)
        repeats = args.repeats or SENSITIVITY_REPEATS
        curve = sensitivity_study(ds, seed=seed, sizes=sizes,
                                  repeats=repeats, n_jobs=threads)
        (run / "sensitivity.csv").write_text("\n".join(curve.to_rows()) + "\n")
        resolved.update({"sizes": list(sizes), "repeats": repeats})
        print(f"wrote {run / 'sensitivity.csv'}")
    elif args.study == "benchmark":
        n = args.benchmark_samples or 3000
        datasets = prepare_benchmark_datasets(ds, n=n, seed=seed)
        configs = {v: RegressorConfig(v, BENCHMARK_HYPERPARAMETERS[v],
                                      seed=seed)
                   for v in ("EN", "RF", "GBRT", "MLP")}
        reports = benchmark_table(configs, datasets,
                                  SplitSpec(0.7, seed=seed))
        write_reports(reports, run / "benchmark.csv")
        resolved["benchmark_samples"] = n
        print(f"wrote {run / 'benchmark.csv'}")
    else:
        # the remaining studies analyze a stacked model on held-out flights
        spec = SplitSpec(0.7, seed=seed, mode="by-flight")
        tr, te = split_indices(ds.m, spec, ds.flight_ids)
        model = fit_stacked(ds.X[tr], ds.y[tr], seed=seed)
        held_out = ds.take(te)
        if args.study == "error-dist":
            dist = error_distribution(held_out.y, model.predict(held_out.X))
            write_error_histogram(dist, run / "error_distribution.csv")
            print(f"sigma={dist.std:.2f} W, within 1 sigma: "
                  f"{dist.frac_within_1std:.3f}, within 2 sigma: "
                  f"{dist.frac_within_2std:.3f}")
        elif args.study == "flight-energy":
            results, coverage = flight_energy_errors(model, held_out)
            write_flight_energy(results, coverage, DEFAULT_ENERGY_BOUND_J,
                                run / "flight_energy.csv")
            print(f"{len(results)} flights, fraction within "
                  f"{DEFAULT_ENERGY_BOUND_J:g} J: {coverage:.3f}")
        else:  # trace
            trained = set(ds.flight_ids[i] for i in tr)
            fid = sorted(set(held_out.flight_ids))[0]
            idx = [i for i, f in enumerate(held_out.flight_ids) if f == fid]
            trace = trace_comparison(model, held_out.take(np.array(idx)),
                                     "stacked", trained)
            write_trace(trace, run / "trace.csv")
            print(f"flight {fid}: r2={trace.report.r2:.4f}")
    write_manifest(run, "study", resolved, [Path(args.dataset)])
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="quadpower",
                     description="Quadrotor power consumption modeling toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--out", required=True, help="output run directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--force", action="store_true",
                       help="write into an existing non-empty directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes (default: all cores)")

    p = sub.add_parser("synth", help="generate a synthetic fleet dataset")
    common(p)
    p.add_argument("--n-flights", type=int, default=None)
    p.add_argument("--noise-std", type=float, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="clean raw flight logs to 1 Hz")
    common(p)
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--schema", required=True,
                   choices=("mavic_pro", "inspire", "matrice100"))
    p.add_argument("--median-window", type=int, default=None)
    p.add_argument("--power-floor", type=float, default=None)
    p.add_argument("--correlations", action="store_true",
                   help="also emit the 16x16 correlation matrix")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train one regressor or the stacked model")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", required=True,
                   choices=("EN", "RF", "GBRT", "MLP", "stacked"))
    p.add_argument("--train-fraction", type=float, default=None)
    p.add_argument("--split-mode", choices=("by-sample", "by-flight"),
                   default=None)
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--hyper", nargs="*", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tune", help="cross-validated grid search")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--variant", required=True,
                   choices=("EN", "RF", "GBRT", "MLP"))
    p.add_argument("--grid", required=True,
                   help="JSON file: list of hyperparameter maps")
    p.add_argument("--cv-folds", type=int, default=None)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("predict", help="predict power for a dataset")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("study", help="run an evaluation study")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--study", required=True, choices=STUDIES)
    p.add_argument("--sizes", help="comma-separated sample sizes (sensitivity)")
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--benchmark-samples", type=int, default=None)
    p.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is None:
        args.threads = os.cpu_count() or 1
    try:
        return args.func(args)
    except (ContractError, LogFormatError, FileNotFoundError,
            json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
