"""Component timer and timing log round trips."""

import time

from stereolab.harness.timing import ComponentTimer, TimingWriter, read_timings


def test_sections_accumulate():
    t = ComponentTimer()
    with t.section("encode"):
        time.sleep(0.01)
    with t.section("encode"):
        time.sleep(0.01)
    with t.section("fuse"):
        pass
    acc = t.drain()
    assert set(acc) == {"encode", "fuse"}
    assert acc["encode"] >= 15.0  # two 10 ms sleeps, in milliseconds
    assert acc["fuse"] >= 0.0


def test_drain_resets():
    t = ComponentTimer()
    with t.section("a"):
        pass
    assert "a" in t.drain()
    assert t.drain() == {}


def test_writer_round_trip(tmp_path):
    path = tmp_path / "timings.jsonl"
    with TimingWriter(path) as w:
        w.write(1, 12.5, {"fuse": 3.0, "encode": 7.0})
        w.write(2, 10.0, {"encode": 6.0})
    rows = read_timings(path)
    assert len(rows) == 2
    assert rows[0]["step"] == 1
    assert rows[0]["total_ms"] == 12.5
    assert rows[0]["encode_ms"] == 7.0
    assert rows[0]["fuse_ms"] == 3.0
    assert rows[1] == {"step": 2, "total_ms": 10.0, "encode_ms": 6.0}


def test_component_keys_sorted(tmp_path):
    path = tmp_path / "timings.jsonl"
    with TimingWriter(path) as w:
        w.write(1, 5.0, {"zeta": 1.0, "alpha": 2.0, "mid": 3.0})
    line = path.read_text().strip()
    assert line.index("alpha_ms") < line.index("mid_ms") < line.index("zeta_ms")
