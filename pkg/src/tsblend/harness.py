"""Benchmark CLI: run bases and ensembles on datasets, emit reports.

Subcommands: ``bench``, ``complementarity``, ``extract``,
``oracle-probe``. Every bench run writes one self-describing JSON record
(schema shipped in docs/run_record.schema.json) plus a CSV summary
table. Exit codes: 0 all runs ok, 2 some runs failed, 1 config error.

Timing convention: ``transform_fit`` covers transform fitting including
the training-set counting pass, ``transform_apply`` train-side stateless
transforms, ``classifier_fit`` full-train classifier fits,
``oof_generation`` all fold work, ``predict`` everything test-side.
``time_per_1000_train`` divides the fit-side total (the first four
phases) by n_train/1000.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import signal
import sys
import threading
import time
from contextlib import contextmanager

import numpy as np

from .backends import BACKEND_NAME
from .complementarity import analyze, prediction_metrics
from .data import load_split_pair
from .ensembles import STRATEGIES, EnsembleConfig, prepare_bases, run_strategy
from .features import save_features
from .hydra import HydraConfig, hydra_fit_transform, hydra_transform, \
    save_transform
from .quant import QuantConfig, quant_transform
from .timing import PhaseTimer

__all__ = ["main", "ConfigError", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1
_PHASES = ("transform_fit", "transform_apply", "classifier_fit",
           "oof_generation", "predict")
_FIT_PHASES = _PHASES[:4]
_BEST_TOL = 1e-9


class ConfigError(Exception):
    pass


class RunTimeout(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on usage errors (config errors)."""

    def error(self, message):
        self.exit(1, "%s: error: %s\n" % (self.prog, message))


@contextmanager
def _time_limit(seconds):
    """Abort the block with RunTimeout after ``seconds`` (main thread)."""
    usable = (
        seconds is not None
        and hasattr(signal, "SIGALRM")
        and threading.current_thread() is threading.main_thread()
    )
    if not usable:
        yield
        return

    def _handler(signum, frame):
        raise RunTimeout("run exceeded %.1f s" % (seconds,))

    old = signal.signal(signal.SIGALRM, _handler)
    signal.setitimer(signal.ITIMER_REAL, float(seconds))
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0.0)
        signal.signal(signal.SIGALRM, old)


def _environment():
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "backend": BACKEND_NAME,
        "platform": platform.platform(),
    }


def _load_datasets(paths):
    pairs = []
    for path in paths:
        try:
            pairs.append(load_split_pair(path))
        except Exception as exc:
            raise ConfigError("cannot load dataset %s: %s" % (path, exc))
    return pairs


def _ensemble_config(strategy, args):
    return EnsembleConfig(
        strategy=strategy,
        folds=args.folds,
        seed=args.seed,
        cawpe_alpha=args.alpha,
        n_trees=args.trees,
    )


def _run_record(train, test, strategy, args):
    timer = PhaseTimer()
    config = _ensemble_config(strategy, args)
    start = time.perf_counter()
    result = run_strategy(strategy, train, test, config=config, timer=timer)
    wall = time.perf_counter() - start

    timings = {name: float(timer.totals.get(name, 0.0)) for name in _PHASES}
    total_fit = sum(timings[name] for name in _FIT_PHASES)
    extras = {}
    for key, val in result.extras.items():
        extras[key] = float(val) if isinstance(val, (int, float)) else val
    return {
        "schema_version": SCHEMA_VERSION,
        "dataset": train.name,
        "n_train": train.n_instances,
        "n_test": test.n_instances,
        "n_classes": train.n_classes,
        "strategy": strategy,
        "seed": args.seed,
        "folds": args.folds,
        "status": "ok",
        "error": None,
        "accuracies": {
            "base_h": result.acc_h,
            "base_q": result.acc_q,
            "ensemble": result.accuracy,
        },
        "ensemble_gain": result.gain,
        "timings": dict(timings, total_fit_seconds=total_fit,
                        wallclock_seconds=wall),
        "time_per_1000_train": total_fit / (train.n_instances / 1000.0),
        "environment": _environment(),
        "extras": extras,
    }


def _failure_record(train, test, strategy, args, status, error):
    return {
        "schema_version": SCHEMA_VERSION,
        "dataset": train.name,
        "n_train": train.n_instances,
        "n_test": test.n_instances,
        "n_classes": train.n_classes,
        "strategy": strategy,
        "seed": args.seed,
        "folds": args.folds,
        "status": status,
        "error": str(error),
        "accuracies": None,
        "ensemble_gain": None,
        "timings": None,
        "time_per_1000_train": None,
        "environment": _environment(),
        "extras": {},
    }


def _write_json(out_dir, name, payload):
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _summary_rows(records, strategies):
    """One CSV row per dataset; best strategies share the marker at
    1e-9 tolerance."""
    by_dataset = {}
    for rec in records:
        by_dataset.setdefault(rec["dataset"], {})[rec["strategy"]] = rec
    rows = []
    for dataset in sorted(by_dataset):
        recs = by_dataset[dataset]
        any_ok = next((r for r in recs.values() if r["status"] == "ok"), None)
        row = {
            "dataset": dataset,
            "n_train": any_ok["n_train"] if any_ok else "",
            "n_test": any_ok["n_test"] if any_ok else "",
            "acc_base_hydra_ridge": (
                any_ok["accuracies"]["base_h"] if any_ok else ""),
            "acc_base_quant_et": (
                any_ok["accuracies"]["base_q"] if any_ok else ""),
        }
        accs = {}
        for strat in strategies:
            rec = recs.get(strat)
            if rec is not None and rec["status"] == "ok":
                accs[strat] = rec["accuracies"]["ensemble"]
                row["acc_%s" % strat] = "%.6f" % accs[strat]
            else:
                row["acc_%s" % strat] = ""
        if accs:
            top = max(accs.values())
            best = [s for s, a in accs.items() if a >= top - _BEST_TOL]
            row["best"] = ";".join(best)
        else:
            row["best"] = ""
        rows.append(row)
    return rows


def _write_summary_csv(out_dir, records, strategies):
    rows = _summary_rows(records, strategies)
    fieldnames = ["dataset", "n_train", "n_test", "acc_base_hydra_ridge",
                  "acc_base_quant_et"]
    fieldnames += ["acc_%s" % s for s in strategies] + ["best"]
    path = os.path.join(out_dir, "summary.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    return path


def cmd_bench(args):
    pairs = _load_datasets(args.data)
    strategies = args.strategy or list(STRATEGIES)
    if args.jobs > 1 and args.timeout is not None:
        raise ConfigError("--timeout requires sequential mode (--jobs 1)")
    os.makedirs(args.out, exist_ok=True)

    def run_pair(pair):
        train, test = pair
        out = []
        for strategy in strategies:
            try:
                with _time_limit(args.timeout):
                    rec = _run_record(train, test, strategy, args)
            except RunTimeout as exc:
                rec = _failure_record(train, test, strategy, args,
                                      "timeout", exc)
            except Exception as exc:
                rec = _failure_record(train, test, strategy, args,
                                      "failed", exc)
            out.append(rec)
        return out

    records = []
    if args.jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            for batch in pool.map(run_pair, pairs):
                records.extend(batch)
    else:
        for pair in pairs:
            records.extend(run_pair(pair))

    for rec in records:
        _write_json(args.out, "%s__%s__seed%d.json"
                    % (rec["dataset"], rec["strategy"], rec["seed"]), rec)
    _write_summary_csv(args.out, records, strategies)

    if args.format == "json":
        for rec in records:
            print(json.dumps(rec, sort_keys=True))
    else:
        for row in _summary_rows(records, strategies):
            print(",".join(str(row[k]) for k in row))
    return 0 if all(r["status"] == "ok" for r in records) else 2


def cmd_complementarity(args):
    pairs = _load_datasets(args.data)
    os.makedirs(args.out, exist_ok=True)
    failures = 0
    for train, test in pairs:
        try:
            config = EnsembleConfig(seed=args.seed, folds=args.folds,
                                    n_trees=args.trees)
            report = analyze(train, test, config=config, cap=args.cap)
            payload = report.to_json_dict()
            payload["schema_version"] = SCHEMA_VERSION
            payload["status"] = "ok"
            payload["error"] = None
        except Exception as exc:
            failures += 1
            payload = {"schema_version": SCHEMA_VERSION,
                       "dataset": train.name, "status": "failed",
                       "error": str(exc)}
        _write_json(args.out, "%s__complementarity.json" % (train.name,),
                    payload)
        if args.format == "json":
            print(json.dumps(payload, sort_keys=True))
        else:
            if payload["status"] == "ok":
                print("%s,%.6f,%.6f,%.6f,%.6f" % (
                    train.name, payload["acc_h"], payload["acc_q"],
                    payload["acc_oracle"], payload["oracle_gain"]))
            else:
                print("%s,failed" % (train.name,))
    return 0 if failures == 0 else 2


def cmd_extract(args):
    pairs = _load_datasets(args.data)
    os.makedirs(args.out, exist_ok=True)
    failures = 0
    for train, test in pairs:
        try:
            if args.transform == "hydra":
                t, train_fm = hydra_fit_transform(HydraConfig(), train)
                test_fm = hydra_transform(t, test)
                save_transform(
                    os.path.join(args.out, "%s__hydra_transform.tsb"
                                 % (train.name,)), t)
            else:
                qc = QuantConfig()
                train_fm = quant_transform(qc, train)
                test_fm = quant_transform(qc, test)
            for tag, fm in (("train", train_fm), ("test", test_fm)):
                save_features(
                    os.path.join(args.out, "%s__%s__%s.tsb"
                                 % (train.name, args.transform, tag)),
                    fm, meta={"dataset": train.name, "split": tag,
                              "transform": args.transform})
        except Exception as exc:
            failures += 1
            print("extract failed for %s: %s" % (train.name, exc),
                  file=sys.stderr)
    return 0 if failures == 0 else 2


def cmd_oracle_probe(args):
    pairs = _load_datasets(args.data)
    failures = 0
    for train, test in pairs:
        try:
            config = EnsembleConfig(seed=args.seed, n_trees=args.trees)
            bases = prepare_bases(train, test, config)
            pm = prediction_metrics(bases.h_pred, bases.q_pred, test.y)
            verdict = ("ensemble recommended"
                       if pm.oracle_gain >= args.threshold
                       else "ensemble not recommended")
            print("%s: acc_h=%.4f acc_q=%.4f oracle_gain=%.4f "
                  "threshold=%.4f -> %s"
                  % (train.name, pm.acc_h, pm.acc_q, pm.oracle_gain,
                     args.threshold, verdict))
        except Exception as exc:
            failures += 1
            print("oracle probe failed for %s: %s" % (train.name, exc),
                  file=sys.stderr)
    return 0 if failures == 0 else 2


def _build_parser():
    parser = _Parser(prog="tsblend",
                     description="Hydra+Quant ensemble benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--data", nargs="+", required=True,
                       help="dataset directories (train/test pair each)")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--out", default="tsblend-results",
                       help="output directory")
        p.add_argument("--trees", type=int, default=200,
                       help="forest size for all forest fits")

    bench = sub.add_parser("bench", help="run ensemble strategies")
    common(bench)
    bench.add_argument("--strategy", nargs="+", choices=list(STRATEGIES),
                       help="strategies to run (default: all six)")
    bench.add_argument("--folds", type=int, default=5)
    bench.add_argument("--alpha", type=float, default=4.0,
                       help="CAWPE exponent")
    bench.add_argument("--timeout", type=float, default=None,
                       help="per-run wall clock limit in seconds")
    bench.add_argument("--format", choices=["json", "csv"], default="csv")
    bench.add_argument("--jobs", type=int, default=1,
                       help="datasets run concurrently when > 1")
    bench.set_defaults(func=cmd_bench)

    comp = sub.add_parser("complementarity",
                          help="feature/prediction complementarity report")
    common(comp)
    comp.add_argument("--folds", type=int, default=5)
    comp.add_argument("--cap", type=int, default=5000,
                      help="feature-metric subsample cap")
    comp.add_argument("--format", choices=["json", "csv"], default="json")
    comp.set_defaults(func=cmd_complementarity)

    extract = sub.add_parser("extract", help="write feature blobs")
    common(extract)
    extract.add_argument("--transform", choices=["hydra", "quant"],
                         required=True)
    extract.set_defaults(func=cmd_extract)

    probe = sub.add_parser("oracle-probe",
                           help="fast go/no-go oracle-gain check")
    common(probe)
    probe.add_argument("--threshold", type=float, default=0.05)
    probe.set_defaults(func=cmd_oracle_probe)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error: %s" % (exc,), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
