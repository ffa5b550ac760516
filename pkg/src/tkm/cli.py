"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 input or contract error, 4 numerical
failure. ``TKM_LOG={error,info,debug}`` sets the diagnostic level on stderr.
Every subcommand accepts ``--config PATH``, a flat ``key=value`` file whose
keys are flag names; flags given on the command line take precedence.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import dataeval as de
from . import io as tio
from .errors import ArgumentError, TkmError
from .experiment import (
    DEFAULT_MU_GRID,
    StudyResult,
    SynthStudyConfig,
    adapted_key,
    lattice_points,
    run_seed,
)
from .featmap import SYNTH_SIGMA, FeatureMapConfig, grid_search_map_params
from .solver import TrainConfig, fit_adapt_tkrr, fit_tkrr, predict, with_threshold
from .solver import scores as model_scores

log = logging.getLogger("tkm")

DEFAULT_FEATMAP = f"14,1.75,{SYNTH_SIGMA!r}"
BOOL_KEYS = {"no_class_weighting", "timing"}


def _setup_logging():
    level = os.environ.get("TKM_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _featmap_arg(text):
    try:
        M, U, sigma = text.split(",")
        return int(M), float(U), float(sigma)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected M,U,SIGMA, got {text!r}") from None


def _range_list(text, cast):
    """``a:b`` (inclusive integer range), ``a:b:step`` or a comma list."""
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) == 2:
                return [cast(v) for v in range(int(parts[0]), int(parts[1]) + 1)]
            a, b, step = parts
            n = int(round((b - a) / step)) + 1
            return [cast(round(a + i * step, 12)) for i in range(n)]
        return [cast(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse list {text!r}") from None


def _int_list(text):
    return _range_list(text, int)


def _float_list(text):
    return _range_list(text, float)


def _read_config(path):
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ArgumentError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            if key == "lambda":
                key = "lam"
            if key in BOOL_KEYS:
                value = value.lower() in ("1", "true", "yes", "on")
            values[key] = value
    return values


def _add_threshold(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--threshold", type=float, help="decision threshold on scores")
    g.add_argument("--target-sensitivity", type=float,
                   help="pick the largest threshold reaching this segment sensitivity")


def _add_training(p, adapt=False):
    p.add_argument("--data", required=True, help="training dataset CSV")
    p.add_argument("--featmap", type=_featmap_arg, default=None if adapt else DEFAULT_FEATMAP,
                   help="M,U,SIGMA of the sinusoidal feature map")
    p.add_argument("--rank", type=int, default=None if adapt else 4)
    p.add_argument("--n-max", type=int, default=40, help="total number of block updates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=["random", "source"], default="source" if adapt else "random")
    p.add_argument("--source", help="source model JSON")
    p.add_argument("--no-class-weighting", action="store_true")
    p.add_argument("--tol", type=float, default=None, help="relative objective tolerance")
    p.add_argument("--trace-out", help="write the loss trace CSV here")
    _add_threshold(p)


def build_parser():
    parser = argparse.ArgumentParser(prog="tkm", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key=value file with defaults for the flags")
        p.add_argument("--out", help="output path (standard output when omitted)")
        subs[name] = p
        return p

    p = add("synth-gen", "generate a synthetic benchmark dataset")
    p.add_argument("--preset", choices=sorted(de.PRESETS), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-pos", type=int, default=100)
    p.add_argument("--n-neg", type=int, default=500)
    p.add_argument("--std", type=float, default=0.15)

    p = add("kernel-grid", "relative kernel-approximation error over an (M, U) grid")
    p.add_argument("--data", required=True)
    p.add_argument("--sigma", type=float, default=SYNTH_SIGMA)
    p.add_argument("--m-grid", type=_int_list, default="10:20")
    p.add_argument("--u-grid", type=_float_list, default="1,1.25,1.5,1.75,2,2.25")
    p.add_argument("--sample", type=int, default=100,
                   help="size of the 1:1 class-balanced sample (0 uses all data)")
    p.add_argument("--seed", type=int, default=0)

    p = add("train", "train a TKRR model")
    _add_training(p)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    p.add_argument("--scale", type=_float_list, default=None,
                   help="LOW,HIGH: fit min-max scaling of the inputs to this interval")

    p = add("adapt", "adapt a source model to target data")
    _add_training(p, adapt=True)
    p.add_argument("--mu", type=float, default=1e-2)

    p = add("predict", "score a dataset with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--threshold", type=float, default=None)

    p = add("evaluate", "segment and event metrics")
    p.add_argument("--scores", help="scores CSV from predict")
    p.add_argument("--data", help="dataset CSV with labels (and segment timing)")
    p.add_argument("--pred-events", help="predicted events CSV (start_s,end_s)")
    p.add_argument("--true-events", help="true events CSV (start_s,end_s)")
    p.add_argument("--duration", type=float, help="total recording duration in seconds")
    p.add_argument("--k", type=int, default=8, help="positives needed per window")
    p.add_argument("--n", type=int, default=10, help="window length in segments")
    _add_threshold(p)

    p = add("experiment-synth", "run the synthetic transfer study")
    p.add_argument("--seeds", type=_int_list, default="0:9")
    p.add_argument("--mu-grid", type=_float_list, default=",".join(map(repr, DEFAULT_MU_GRID)))
    p.add_argument("--n-max", type=int, default=40)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--timing", action="store_true",
                   help="also measure inference time (output is then not reproducible)")
    return parser, subs


def parse_args(argv=None):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            values = _read_config(args.config)
        except (OSError, ArgumentError) as exc:
            parser.error(f"cannot read config: {exc}")
        sp = subs[args.command]
        known = {a.dest for a in sp._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            sp.error(f"unknown config keys: {', '.join(unknown)}")
        sp.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def _threshold(args, scores, y):
    if getattr(args, "threshold", None) is not None:
        return args.threshold
    if getattr(args, "target_sensitivity", None) is not None:
        return de.threshold_for_sensitivity(scores, y, args.target_sensitivity)
    return None


def _write_model(args, model, ds):
    thr = _threshold(args, predict(model, ds.X)[0], ds.y)
    if thr is not None:
        model = with_threshold(model, thr)
    tio.write_text(args.out, tio.model_to_json(model))
    if args.trace_out and model.trace is not None:
        tio.write_text(args.trace_out, tio.trace_to_csv(model.trace.loss))
    log.info("model with %d parameters written", model.n_params)


def cmd_synth_gen(args):
    spec = de.preset(args.preset, seed=args.seed, n_pos=args.n_pos, n_neg=args.n_neg, std=args.std)
    tio.write_text(args.out, tio.dataset_to_csv(de.gen_synthetic(spec)))


def cmd_kernel_grid(args):
    ds = tio.read_dataset(args.data)
    sample = ds if args.sample <= 0 or args.sample >= len(ds) else de.balanced_sample(
        ds, args.sample, args.seed
    )
    report = grid_search_map_params(sample.X, args.sigma, args.m_grid, args.u_grid)
    tio.write_text(args.out, report.to_csv())
    meta = {
        "data": str(args.data),
        "sample_size": len(sample),
        "sample_seed": args.seed,
        "sigma": args.sigma,
        "scaling": "none (data used as generated)",
        "max_abs_x": report.notes["max_abs_x"],
    }
    if args.out and args.out != "-":
        tio.write_text(f"{args.out}.meta.json", json.dumps(meta, indent=1) + "\n")
    log.info("kernel grid: %s", meta)


def _train_config(args, mu=None, rank=None):
    return TrainConfig(
        rank=rank,
        lam=getattr(args, "lam", 0.0),
        mu=mu if mu is not None else 0.0,
        n_max=args.n_max,
        init=args.init,
        seed=args.seed,
        class_weighting=not args.no_class_weighting,
        tol=args.tol,
    )


def cmd_train(args):
    ds = tio.read_dataset(args.data)
    M, U, sigma = args.featmap
    fm = FeatureMapConfig(M, U, sigma, ds.n_features)
    scaling = None
    if args.scale is not None:
        if len(args.scale) != 2:
            raise ArgumentError("--scale expects LOW,HIGH")
        scaling = de.scale_fit(ds.X, args.scale)
    init = None
    if args.init == "source":
        if not args.source:
            raise ArgumentError("--init source needs --source MODEL")
        init = tio.read_model(args.source).weights
    cfg = _train_config(args, rank=args.rank if init is None else init.rank)
    _write_model(args, fit_tkrr(ds.X, ds.y, cfg, fm, scaling=scaling, init_weights=init), ds)


def cmd_adapt(args):
    if not args.source:
        raise ArgumentError("adapt needs --source MODEL")
    ds = tio.read_dataset(args.data)
    source = tio.read_model(args.source)
    featmap = None
    if args.featmap is not None:
        M, U, sigma = args.featmap
        featmap = FeatureMapConfig(M, U, sigma, ds.n_features)
    rank = args.rank if args.rank is not None else source.weights.rank
    cfg = _train_config(args, mu=args.mu, rank=rank)
    _write_model(args, fit_adapt_tkrr(ds.X, ds.y, source, args.mu, cfg, featmap=featmap), ds)


def cmd_predict(args):
    model = tio.read_model(args.model)
    if args.threshold is not None:
        model = with_threshold(model, args.threshold)
    ds = tio.read_dataset(args.data)
    scores, labels = predict(model, ds.X)
    tio.write_text(args.out, tio.scores_to_csv(scores, labels))


def cmd_evaluate(args):
    out = {}
    if args.scores:
        if not args.data:
            raise ArgumentError("--scores needs --data with labels")
        ds = tio.read_dataset(args.data)
        scores = tio.read_scores(args.scores)
        if scores.shape[0] != len(ds):
            raise ArgumentError(f"{scores.shape[0]} scores for {len(ds)} samples")
        thr = _threshold(args, scores, ds.y)
        thr = 0.0 if thr is None else thr
        labels = np.where(scores >= thr, 1.0, -1.0)
        seg = de.segment_metrics(ds.y, labels)
        out["threshold"] = thr
        out["segment"] = {
            "sensitivity": seg.sensitivity,
            "precision": seg.precision,
            "f1": seg.f1,
            "specificity": seg.specificity,
        }
        if 0 < (ds.y > 0).sum() < len(ds):
            out["segment"]["auroc"] = de.segment_roc(scores, ds.y).auc
        if ds.has_timing:
            pred = de.segments_to_seconds(
                de.postprocess_events(labels, args.k, args.n), ds.start_s, ds.dur_s
            )
            true = de.segments_to_seconds(de.label_runs(ds.y), ds.start_s, ds.dur_s)
            out.update(de.any_overlap_score(pred, true, ds.total_duration_s()).to_dict())
    elif args.pred_events or args.true_events:
        if not (args.pred_events and args.true_events and args.duration):
            raise ArgumentError("event scoring needs --pred-events, --true-events and --duration")
        pred = tio.read_events(args.pred_events)
        true = tio.read_events(args.true_events)
        out.update(de.any_overlap_score(pred, true, args.duration).to_dict())
    else:
        raise ArgumentError("evaluate needs --scores/--data or --pred-events/--true-events")
    tio.write_text(args.out, json.dumps(out, indent=1) + "\n")


def _lattice_csv(points, scores):
    return "x1,x2,score\n" + "".join(
        f"{p[0]!r},{p[1]!r},{float(s)!r}\n" for p, s in zip(points, scores)
    )


def _timing(model, X, repeats=3):
    best = math.inf
    for _ in range(repeats):
        t = time.perf_counter()
        for x in X:
            predict(model, x[None, :])
        best = min(best, (time.perf_counter() - t) / len(X))
    return best


def cmd_experiment_synth(args):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = SynthStudyConfig(seeds=tuple(args.seeds), mu_grid=tuple(args.mu_grid), n_max=args.n_max)
    rows = ["model,mu,init,seed,f1"]
    results = []
    for seed in cfg.seeds:
        res = run_seed(seed, cfg)
        results.append(res)
        for key, f1 in res.f1.items():
            if key.startswith("adapt"):
                mu, init = key[len("adapt_mu="):].split("_init=")
                rows.append(f"adapted,{mu},{init},{seed},{f1!r}")
            else:
                rows.append(f"{key},,,{seed},{f1!r}")
        for init in ("source", "random"):
            key = adapted_key(1e-2 if 1e-2 in cfg.mu_grid else cfg.mu_grid[0], init)
            tio.write_text(out_dir / f"trace_init={init}_seed={seed}.csv", tio.trace_to_csv(res.traces[key]))
    tio.write_text(out_dir / "f1_table.csv", "\n".join(rows) + "\n")

    first = results[0]
    lattice = lattice_points(cfg.lattice)
    for key, model in first.models.items():
        tio.write_text(out_dir / f"boundary_{key}_seed={first.seed}.csv",
                       _lattice_csv(lattice, model_scores(model, lattice)))

    summary = StudyResult(cfg, results).summary()
    source = first.models["source"]
    summary["efficiency"] = {
        "tkrr_n_params": source.n_params,
        # a dual model stores every training input plus one coefficient each
        "dual_krr_n_params": first.n_source * (2 + 1),
    }
    if args.timing:
        X = lattice_points(32)[:1000]
        summary["efficiency"]["tkrr_inference_s_per_sample"] = _timing(source, X)
    tio.write_text(out_dir / "summary.json", json.dumps(summary, indent=1) + "\n")
    json.dump(summary["f1_median"], sys.stdout, indent=1)
    sys.stdout.write("\n")


COMMANDS = {
    "synth-gen": cmd_synth_gen,
    "kernel-grid": cmd_kernel_grid,
    "train": cmd_train,
    "adapt": cmd_adapt,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "experiment-synth": cmd_experiment_synth,
}


def main(argv=None):
    _setup_logging()
    args = parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except TkmError as exc:
        print(f"tkm {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"tkm {args.command}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
