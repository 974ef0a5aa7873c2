"""Experiment drivers: the modality comparison and the stereo-ratio sweep.

Both emit a CSV table next to their figures so results stay inspectable
without re-running anything.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

from ..autodiff import RngStream
from .config import MODALITIES, ExperimentConfig
from .data import ensure_demos
from .metrics import read_metrics
from .plots import plot_learning_curves, plot_modality_bars, plot_ratio_curve
from .probe import ProbeConfig, ProbeResult, train_probe
from .train import TrainResult, train

log = logging.getLogger(__name__)

DEFAULT_BASELINES = (0.02, 0.06, 0.10)
DEFAULT_DISTANCES = (0.6, 0.8, 1.0)


@dataclass
class CompareResult:
    per_seed: dict[str, list[float]]  # modality -> best success per seed
    means: dict[str, float]
    csv_path: Path
    runs: dict[tuple[str, int], TrainResult]


def compare_modalities(cfg: ExperimentConfig, out_dir: str | Path,
                       modalities: tuple[str, ...] = MODALITIES) -> CompareResult:
    """Train every modality on one shared demo corpus, seeds from cfg.seeds;
    reports best-over-training success per run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = out / "demos.spl1"
    ensure_demos(cfg, dataset)

    per_seed: dict[str, list[float]] = {m: [] for m in modalities}
    runs: dict[tuple[str, int], TrainResult] = {}
    for m in modalities:
        mcfg = cfg.with_modality(m)
        for seed in cfg.seeds:
            run_dir = out / m / f"seed{seed}"
            result = train(mcfg, run_dir, seed, dataset_path=dataset)
            best = result.best_success if result.best_success is not None else 0.0
            per_seed[m].append(best)
            runs[(m, seed)] = result
            log.info("compare: %s seed %d best success %.2f", m, seed, best)

    means = {m: sum(v) / len(v) for m, v in per_seed.items()}
    csv_path = out / "compare.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["modality", "seed", "best_success"])
        for m in modalities:
            for seed, val in zip(cfg.seeds, per_seed[m]):
                writer.writerow([m, seed, f"{val:.6f}"])

    plot_modality_bars(per_seed, out / "modality_bars.svg")
    curves = {}
    for m in modalities:
        path = out / m / f"seed{cfg.seeds[0]}" / "metrics.jsonl"
        if path.exists():
            curves[m] = read_metrics(path)
    plot_learning_curves(curves, out / "learning_curves.svg")
    return CompareResult(per_seed=per_seed, means=means, csv_path=csv_path,
                         runs=runs)


@dataclass
class SweepResult:
    rows: list[dict]  # baseline_m, distance_m, ratio, rmse
    csv_path: Path


def sweep_ratio(pcfg: ProbeConfig, out_dir: str | Path,
                baselines: tuple[float, ...] = DEFAULT_BASELINES,
                distances: tuple[float, ...] = DEFAULT_DISTANCES,
                seed: int = 0, zero_control: bool = True) -> SweepResult:
    """Depth-probe RMSE over the baseline x distance grid, plus an optional
    zero-baseline control at the middle distance."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells: list[tuple[float, float]] = [(b, d) for b in baselines
                                        for d in distances]
    if zero_control:
        cells.append((0.0, sorted(distances)[len(distances) // 2]))
    rows = []
    for b, d in cells:
        res: ProbeResult = train_probe(b, d, pcfg, seed)
        rows.append({"baseline_m": b, "distance_m": d,
                     "ratio": res.ratio, "rmse": res.rmse})
        log.info("sweep: b=%.3f d=%.2f r=%.4f rmse=%.4f", b, d, res.ratio,
                 res.rmse)
    csv_path = out / "sweep.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["baseline_m", "distance_m", "ratio", "rmse"])
        for row in rows:
            writer.writerow([f"{row['baseline_m']:.3f}",
                             f"{row['distance_m']:.3f}",
                             f"{row['ratio']:.6f}", f"{row['rmse']:.6f}"])
    plot_ratio_curve(rows, out / "ratio_curve.svg")
    return SweepResult(rows=rows, csv_path=csv_path)


def sweep_summary(rows: list[dict]) -> dict:
    """Shape checks for the sweep table: where the minimum sits, whether the
    RMSE-vs-r profile is non-monotonic, and whether the zero-baseline
    control is the worst cell."""
    nonzero = [r for r in rows if r["baseline_m"] > 0]
    zero = [r for r in rows if r["baseline_m"] == 0]
    if not nonzero:
        raise ValueError("sweep table has no nonzero-baseline rows")
    best = min(nonzero, key=lambda r: r["rmse"])
    ratios = sorted(r["ratio"] for r in nonzero)
    interior = ratios[0] < best["ratio"] < ratios[-1]
    by_r = sorted(nonzero, key=lambda r: (r["ratio"], r["rmse"]))
    vals = [r["rmse"] for r in by_r]
    rising = any(a < b for a, b in zip(vals, vals[1:]))
    falling = any(a > b for a, b in zip(vals, vals[1:]))
    worst_nonzero = max(r["rmse"] for r in nonzero)
    return {
        "min_ratio": best["ratio"],
        "min_rmse": best["rmse"],
        "interior_min": interior,
        "non_monotonic": rising and falling,
        "zero_rmse": zero[0]["rmse"] if zero else None,
        "zero_worst": bool(zero) and zero[0]["rmse"] > worst_nonzero,
    }
