"""Command-line entry points for dataset generation, training, evaluation,
the modality comparison, the ratio sweep, gradient checking, and plotting."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .autodiff import set_default_dtype
from .harness.checkpoint import load_into, read_checkpoint
from .harness.config import ExperimentConfig, load_config
from .harness.data import depth_sidecar_path, ensure_demos
from .harness.evaluate import DiffusionPlanner, evaluate
from .harness.experiments import (DEFAULT_BASELINES, DEFAULT_DISTANCES,
                                  compare_modalities, sweep_ratio,
                                  sweep_summary)
from .harness.gradcheck import full_pipeline_gradcheck
from .harness.metrics import read_metrics
from .harness.plots import (plot_learning_curves, plot_modality_bars,
                            plot_ratio_curve)
from .harness.probe import ProbeConfig
from .harness.train import build_policy, train
from .models.diffusion import make_schedule


def _load_cfg(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return ExperimentConfig()


def _cmd_render_dataset(args) -> int:
    cfg = _load_cfg(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "demos.spl1"
    trajs, _ = ensure_demos(cfg, path)
    print(f"dataset: {path} demos={len(trajs)} "
          f"depth_sidecar={depth_sidecar_path(path)}")
    return 0


def _cmd_train(args) -> int:
    cfg = _load_cfg(args)
    result = train(cfg, args.out, args.seed, dataset_path=args.dataset)
    best = "n/a" if result.best_success is None else f"{result.best_success:.3f}"
    print(f"train: modality={cfg.modality} steps={result.steps} "
          f"final_loss={result.final_loss:.4f} best_success={best} "
          f"out={result.out_dir}")
    return 0


def _cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    ckpt = read_checkpoint(args.ckpt)
    if ckpt.config_hash != cfg.config_hash():
        print(f"eval: checkpoint config hash {ckpt.config_hash} does not "
              f"match the supplied config {cfg.config_hash()}", file=sys.stderr)
        return 1
    if ckpt.normalizer is None:
        print("eval: checkpoint carries no action normalizer", file=sys.stderr)
        return 1
    set_default_dtype(np.float32)
    try:
        model, _ = build_policy(cfg, args.seed)
        load_into(model, ckpt)
        planner = DiffusionPlanner(model.pipeline, model.net,
                                   make_schedule(cfg.diffusion_steps),
                                   ckpt.normalizer, cfg.horizons.act)
        report = evaluate(planner, cfg, args.rollouts, args.seed)
    finally:
        set_default_dtype(np.float64)
    print(f"eval: success={report.success_rate:.3f} "
          f"ci=[{report.ci_lo:.3f}, {report.ci_hi:.3f}] n={report.n_rollouts}")
    return 0


def _cmd_compare(args) -> int:
    cfg = _load_cfg(args)
    result = compare_modalities(cfg, args.out)
    for m in sorted(result.means):
        runs = " ".join(f"{v:.3f}" for v in result.per_seed[m])
        print(f"compare: {m} mean={result.means[m]:.3f} seeds=[{runs}]")
    print(f"compare: table={result.csv_path}")
    return 0


def _cmd_sweep_ratio(args) -> int:
    baselines = tuple(float(x) for x in args.baselines.split(","))
    distances = tuple(float(x) for x in args.distances.split(","))
    pcfg = ProbeConfig(steps=args.probe_steps, n_train=args.probe_train)
    result = sweep_ratio(pcfg, args.out, baselines, distances,
                         seed=args.seed)
    for row in result.rows:
        print(f"sweep: b={row['baseline_m']:.3f} d={row['distance_m']:.2f} "
              f"r={row['ratio']:.4f} rmse={row['rmse']:.4f}")
    summary = sweep_summary(result.rows)
    print(f"sweep: min_rmse={summary['min_rmse']:.4f} at "
          f"r={summary['min_ratio']:.4f} interior={summary['interior_min']} "
          f"non_monotonic={summary['non_monotonic']} "
          f"zero_worst={summary['zero_worst']}")
    print(f"sweep: table={result.csv_path}")
    return 0


def _cmd_gradcheck(args) -> int:
    report = full_pipeline_gradcheck(seed=args.seed)
    print(f"gradcheck: max_rel_err={report.max_rel_err:.3e} "
          f"params={report.n_params} entries={report.n_entries_checked} "
          f"time={report.runtime_s:.1f}s")
    return 0 if report.max_rel_err < 1e-4 else 1


def _cmd_plot(args) -> int:
    """Re-render every figure derivable from files under --out."""
    out = Path(args.out)
    made = []
    curves = {}
    for path in sorted(out.rglob("metrics.jsonl")):
        label = str(path.parent.relative_to(out)) or "run"
        curves[label] = read_metrics(path)
    if curves:
        made.append(plot_learning_curves(curves, out / "learning_curves.svg"))
    compare_csv = out / "compare.csv"
    if compare_csv.exists():
        per_seed: dict[str, list[float]] = {}
        with open(compare_csv, newline="") as fh:
            for row in csv.DictReader(fh):
                per_seed.setdefault(row["modality"], []).append(
                    float(row["best_success"]))
        made.append(plot_modality_bars(per_seed, out / "modality_bars.svg"))
    sweep_csv = out / "sweep.csv"
    if sweep_csv.exists():
        with open(sweep_csv, newline="") as fh:
            rows = [{k: float(v) for k, v in row.items()}
                    for row in csv.DictReader(fh)]
        made.append(plot_ratio_curve(rows, out / "ratio_curve.svg"))
    if not made:
        print(f"plot: nothing to render under {out}", file=sys.stderr)
        return 1
    for path in made:
        print(f"plot: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stereolab",
        description="Stereo visuomotor policy lab: synthetic stereo world, "
                    "cross-attention fusion, diffusion policy, experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", help="YAML experiment config")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=out_required, help="output directory")

    p = sub.add_parser("render-dataset", help="generate expert demonstrations")
    common(p)
    p.set_defaults(func=_cmd_render_dataset)

    p = sub.add_parser("train", help="train one policy")
    common(p)
    p.add_argument("--dataset", help="existing .spl1 demo file (else generated)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    common(p, out_required=False)
    p.add_argument("--ckpt", required=True, help="SPCK checkpoint path")
    p.add_argument("--rollouts", type=int, default=50)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("compare", help="train and compare all modalities")
    common(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("sweep-ratio", help="depth-probe RMSE over the "
                                           "baseline x distance grid")
    common(p)
    p.add_argument("--baselines",
                   default=",".join(str(b) for b in DEFAULT_BASELINES),
                   help="comma-separated baselines in meters")
    p.add_argument("--distances",
                   default=",".join(str(d) for d in DEFAULT_DISTANCES),
                   help="comma-separated distances in meters")
    p.add_argument("--probe-steps", type=int, default=ProbeConfig.steps,
                   help="probe training steps per grid cell")
    p.add_argument("--probe-train", type=int, default=ProbeConfig.n_train,
                   help="probe training scenes per grid cell")
    p.set_defaults(func=_cmd_sweep_ratio)

    p = sub.add_parser("gradcheck", help="end-to-end gradient verification")
    common(p, out_required=False)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("plot", help="re-render figures from an output directory")
    common(p)
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
