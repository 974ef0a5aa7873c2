"""Wall-clock instrumentation, kept out of the deterministic metrics stream."""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from pathlib import Path


class ComponentTimer:
    """Accumulates wall milliseconds per named component between drains."""

    def __init__(self):
        self._acc: dict[str, float] = {}

    @contextmanager
    def section(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            dt = (time.perf_counter() - t0) * 1000.0
            self._acc[name] = self._acc.get(name, 0.0) + dt

    def drain(self) -> dict[str, float]:
        out, self._acc = self._acc, {}
        return out


class TimingWriter:
    """JSONL sidecar for wall_ms records ({step, total_ms, <component>_ms...})."""

    def __init__(self, path: str | Path):
        self._fh = open(Path(path), "w")

    def write(self, step: int, total_ms: float, components: dict[str, float]) -> None:
        row = {"step": step, "total_ms": total_ms}
        for name in sorted(components):
            row[f"{name}_ms"] = components[name]
        self._fh.write(json.dumps(row) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_timings(path: str | Path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
