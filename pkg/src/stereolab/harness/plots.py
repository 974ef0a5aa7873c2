"""Figure emission. Pure functions of their inputs: the same data produces
byte-identical SVG files (fixed hash salt, no embedded timestamps)."""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

_SVG_KW = {"format": "svg", "metadata": {"Date": None}}


def _new_figure(width: float = 6.0, height: float = 4.0):
    plt.rcParams["svg.hashsalt"] = "stereolab"
    return plt.subplots(figsize=(width, height))


def _finish(fig, out_path: str | Path) -> Path:
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, **_SVG_KW)
    plt.close(fig)
    return out


def plot_learning_curves(runs: dict[str, list[dict]],
                         out_path: str | Path) -> Path:
    """Training loss (left axis) and eval success (right axis) per run."""
    fig, ax = _new_figure()
    ax2 = ax.twinx()
    for label in sorted(runs):
        rows = runs[label]
        steps = [r["step"] for r in rows]
        ax.plot(steps, [r["train_loss"] for r in rows], label=f"{label} loss")
        ev = [(r["step"], r["eval_success_rate"]) for r in rows
              if r.get("eval_success_rate") is not None]
        if ev:
            ax2.plot([s for s, _ in ev], [v for _, v in ev], marker="o",
                     linestyle="--", label=f"{label} success")
    ax.set_xlabel("step")
    ax.set_ylabel("train loss")
    ax2.set_ylabel("eval success rate")
    ax2.set_ylim(-0.02, 1.02)
    h1, l1 = ax.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    if h1 or h2:
        ax.legend(h1 + h2, l1 + l2, fontsize=7, loc="center right")
    ax.set_title("learning curves")
    return _finish(fig, out_path)


def plot_ratio_curve(rows: list[dict], out_path: str | Path) -> Path:
    """Depth-probe RMSE against the baseline-to-distance ratio r. Each row
    needs keys ratio, rmse, and baseline_m (one line per baseline)."""
    fig, ax = _new_figure()
    by_baseline: dict[float, list[tuple[float, float]]] = {}
    for row in rows:
        by_baseline.setdefault(float(row["baseline_m"]), []).append(
            (float(row["ratio"]), float(row["rmse"])))
    for b in sorted(by_baseline):
        pts = sorted(by_baseline[b])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o",
                label=f"b={b:g} m")
    ax.set_xlabel("baseline / distance ratio r")
    ax.set_ylabel("depth probe RMSE")
    ax.set_title("depth accuracy vs stereo ratio")
    if by_baseline:
        ax.legend(fontsize=8)
    return _finish(fig, out_path)


def plot_modality_bars(results: dict[str, list[float]],
                       out_path: str | Path) -> Path:
    """Mean success per modality with min/max whiskers over seeds."""
    fig, ax = _new_figure()
    labels = sorted(results)
    means, lo_err, hi_err = [], [], []
    for name in labels:
        vals = results[name]
        m = sum(vals) / len(vals) if vals else 0.0
        means.append(m)
        lo_err.append(m - min(vals) if vals else 0.0)
        hi_err.append(max(vals) - m if vals else 0.0)
    x = range(len(labels))
    ax.bar(x, means, yerr=[lo_err, hi_err], capsize=4)
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("success rate")
    ax.set_ylim(0, 1.05)
    ax.set_title("modality comparison")
    fig.tight_layout()
    return _finish(fig, out_path)
