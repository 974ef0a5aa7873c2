"""Metrics persistence: JSON-lines records, one per logging event.

Metrics files are a pure function of (config, seed), so anything
nondeterministic (wall-clock timing) goes to a separate timings file; see
timing.py. Records are append-only with strictly increasing step.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsRecord:
    step: int
    train_loss: float
    eval_success_rate: float | None = None
    eval_ci_lo: float | None = None
    eval_ci_hi: float | None = None
    eval_depth_probe_rmse: float | None = None

    def to_json(self) -> str:
        d = {k: v for k, v in asdict(self).items() if v is not None}
        return json.dumps(d, sort_keys=True)


class MetricsWriter:
    """Append-only JSONL writer enforcing monotone steps."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._last_step = -1
        self._fh = open(self.path, "w")

    def write(self, record: MetricsRecord) -> None:
        if record.step <= self._last_step:
            raise MetricsError(
                f"step {record.step} not after previous step {self._last_step}")
        self._last_step = record.step
        self._fh.write(record.to_json() + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_metrics(path: str | Path) -> list[dict]:
    rows = []
    with open(path) as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as e:
                raise MetricsError(f"{path}:{i + 1}: not valid JSON: {e}") from e
            if "step" not in row:
                raise MetricsError(f"{path}:{i + 1}: record missing 'step'")
            rows.append(row)
    for a, b in zip(rows, rows[1:]):
        if b["step"] <= a["step"]:
            raise MetricsError(f"{path}: steps not strictly increasing "
                               f"({a['step']} then {b['step']})")
    return rows


def best_success(rows: list[dict]) -> float | None:
    """Highest evaluation success over the run, None if never evaluated."""
    vals = [r["eval_success_rate"] for r in rows if "eval_success_rate" in r]
    return max(vals) if vals else None
