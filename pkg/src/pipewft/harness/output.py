"""Writers for event logs (JSON lines), CSV tables and JSON summaries."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

EVENT_FIELDS = ("index", "time", "kind", "position", "pipe", "incoming", "outgoing",
                "V_pre", "Q_pre", "U_pre", "V_post", "Q_post", "U_post", "n_fronts", "violation")
SNAPSHOT_FIELDS = ("snapshot", "time", "item", "kind", "family", "x", "speed", "sigma", "rho_right", "q_right")
TRACE_FIELDS = ("event", "time", "V", "Q", "upsilon")


def _clean(obj):
    """Replace non-finite floats so the output is strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, allow_nan=False)


def write_events(path: Path, timeline) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for e in timeline.events:
            fh.write(dumps(e.to_dict()) + "\n")
    return path


def read_events(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def snapshot_rows(timeline):
    for k, s in enumerate(timeline.snapshots):
        for i, it in enumerate(s.items):
            u = s.states[i + 1]
            if it.kind == 0:
                yield (k, s.time, i, "junction", "", it.x, 0.0, "", u.rho, u.q)
            else:
                yield (k, s.time, i, "front", int(it.family), it.position(s.time), it.speed, it.sigma, u.rho, u.q)


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(r)
    return path


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def trace_rows(timeline):
    g = timeline.initial_glimm
    if g is None:
        return
    yield (-1, 0.0, g.V, g.Q, g.upsilon)
    for e in timeline.events:
        yield (e.index, e.time, e.V_post, e.Q_post, e.U_post)


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    return path


def write_run(root: Path, timeline, summary: dict, events: bool = True, snapshots: bool = True) -> dict:
    """Write ``events.jsonl``, ``snapshots.csv``, ``functionals.csv`` and ``summary.json`` under ``root``."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    paths = {}
    if events:
        paths["events"] = write_events(root / "events.jsonl", timeline)
    if snapshots:
        paths["snapshots"] = write_csv(root / "snapshots.csv", SNAPSHOT_FIELDS, snapshot_rows(timeline))
    paths["functionals"] = write_csv(root / "functionals.csv", TRACE_FIELDS, trace_rows(timeline))
    paths["summary"] = write_json(root / "summary.json", summary)
    return {k: str(v) for k, v in paths.items()}
