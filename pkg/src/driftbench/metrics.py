"""Run event records, clocks, and the JSONL/summary contracts.

A run emits an ordered list of events; the summary row (best validation
accuracy, test accuracy, train seconds) is always recomputed from the
events so that replaying a JSONL file reproduces the summary exactly.

Elapsed seconds come from a clock started at the beginning of the
training loop. `WallClock` reports real time; `LogicalClock` reports a
deterministic event counter so that two identical runs produce
byte-identical JSONL.
"""

import json
import math
import time
from dataclasses import dataclass, field

EVENT_KINDS = ("train", "validate", "test")


@dataclass(frozen=True)
class RunEvent:
    kind: str
    batch: int
    acc: float
    loss: float
    elapsed_s: float

    def to_obj(self):
        return {
            "event": self.kind,
            "batch": int(self.batch),
            "acc": float(self.acc),
            "loss": float(self.loss),
            "elapsed_s": float(self.elapsed_s),
        }

    @classmethod
    def from_obj(cls, obj):
        if obj["event"] not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {obj['event']!r}")
        return cls(
            kind=obj["event"],
            batch=int(obj["batch"]),
            acc=float(obj["acc"]),
            loss=float(obj["loss"]),
            elapsed_s=float(obj["elapsed_s"]),
        )


class WallClock:
    """Real elapsed seconds since start()."""

    def __init__(self):
        self._t0 = None

    def start(self):
        self._t0 = time.perf_counter()
        return self

    def elapsed(self):
        if self._t0 is None:
            raise RuntimeError("clock was never started")
        return time.perf_counter() - self._t0


class LogicalClock:
    """Deterministic stand-in for WallClock: each reading ticks by one."""

    def __init__(self):
        self._n = None

    def start(self):
        self._n = 0
        return self

    def elapsed(self):
        if self._n is None:
            raise RuntimeError("clock was never started")
        self._n += 1
        return float(self._n)


def make_clock(timing):
    if timing == "wall":
        return WallClock()
    if timing == "logical":
        return LogicalClock()
    raise ValueError(f"timing must be 'wall' or 'logical', got {timing!r}")


@dataclass
class RunMetrics:
    """Everything one (method, config, seed) run reports."""

    method: str
    config_id: str
    seed: int
    events: list = field(default_factory=list)
    # Non-contractual attachments (training trace, checkpoint) for callers
    # that want more than the event stream.
    attachments: dict = field(default_factory=dict)

    def add(self, kind, batch, acc, loss, clock):
        self.events.append(RunEvent(kind, batch, float(acc), float(loss), clock.elapsed()))

    def summary(self):
        return summarize_events(self.events)


def summarize_events(events):
    """Reduce an event list to the summary triple.

    best_val_acc is NaN when the run had no validation events; the test
    event's elapsed reading is the training duration because the clock
    starts with the training loop and stops being read after the test.
    """
    tests = [e for e in events if e.kind == "test"]
    if len(tests) != 1:
        raise ValueError(f"expected exactly one test event, found {len(tests)}")
    val_accs = [e.acc for e in events if e.kind == "validate"]
    best_val = max(val_accs) if val_accs else math.nan
    return {
        "best_val_acc": best_val,
        "test_acc": tests[0].acc,
        "train_seconds": tests[0].elapsed_s,
    }


def write_events_jsonl(path, events):
    with open(path, "w") as fh:
        for e in events:
            fh.write(json.dumps(e.to_obj(), separators=(",", ":")) + "\n")


def read_events_jsonl(path):
    events = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(RunEvent.from_obj(json.loads(line)))
    return events
