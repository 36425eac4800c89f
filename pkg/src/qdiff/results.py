"""Run configs, JSON-lines result records and CSV plot data."""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import ConfigError
from .sampler import GENERATOR_VERSION

__all__ = [
    "SCHEMA_VERSION",
    "RunConfig",
    "make_record",
    "validate_record",
    "results_path",
    "append_records",
    "read_records",
    "emit_plot_data",
    "read_plot_data",
]

SCHEMA_VERSION = "1"
RESULTS_ENV = "QDIFF_RESULTS_DIR"


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"subcommand": self.subcommand, "params": dict(self.params)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        obj = json.loads(text)
        return cls(obj["subcommand"], obj.get("params", {}))


@lru_cache(maxsize=1)
def _schema() -> dict:
    text = resources.files("qdiff").joinpath("schemas/result_record.schema.json").read_text()
    return json.loads(text)


def _clean(obj):
    """JSON-safe copy: NaN and inf become null."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def make_record(kind: str, config: RunConfig, metrics: dict, passed, wall_time: float | None = None) -> dict:
    """One result record.  ``metrics`` must be deterministic; timing goes in ``wall_time``."""
    from . import __version__

    rec = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "config": config.to_dict(),
        "metrics": _clean(metrics),
        "pass": None if passed is None else bool(passed),
        "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        "tool_version": __version__,
        "generator_version": GENERATOR_VERSION,
    }
    if wall_time is not None:
        rec["wall_time"] = float(wall_time)
    validate_record(rec)
    return rec


def validate_record(rec: dict) -> None:
    jsonschema.validate(rec, _schema())


def results_path(out: str | None = None) -> Path:
    """``--out`` if given, else ``$QDIFF_RESULTS_DIR/results.jsonl``, else ``./results/results.jsonl``."""
    if out:
        return Path(out)
    return Path(os.environ.get(RESULTS_ENV, "results")) / "results.jsonl"


def append_records(path: Path, records) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_records(path: Path) -> list:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _scaling_rows(records) -> list:
    rows = []
    for rec in records:
        if rec["kind"] == "mc-var":
            reps = [rec["metrics"]]
        else:
            reps = rec["metrics"]["reports"]
        for r in reps:
            rows.append([r["W"], r["variance"], r["se"], r["R"], r["master_seed"]])
    return rows


def _profile_rows(records) -> list:
    rows = []
    for rec in records:
        m = rec["metrics"]
        for x, p in zip(m["x"], m["p"]):
            rows.append(list(x) + [p] if isinstance(x, list) else [x, p])
    return rows


_PLOTS = {
    "scaling": (("mc-var", "scaling"), _scaling_rows),
    "profile": (("propagate",), _profile_rows),
}


def emit_plot_data(records, kind: str, path) -> Path:
    """Write CSV plot data: ``w,var,se,R,seed`` for scaling, ``x,p`` for profiles."""
    if kind not in _PLOTS:
        raise ConfigError(f"unknown plot kind {kind!r}")
    allowed, rows_of = _PLOTS[kind]
    records = list(records)
    kinds = {rec["kind"] for rec in records}
    if not records or len(kinds) != 1 or not kinds <= set(allowed):
        raise ConfigError(f"records for a {kind} plot must all be one of {allowed}, got {sorted(kinds)}")
    rows = rows_of(records)
    if kind == "scaling":
        header = ["w", "var", "se", "R", "seed"]
    else:
        width = len(rows[0]) - 1 if rows else 1
        header = ["x", "p"] if width == 1 else [f"x{i}" for i in range(width)] + ["p"]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return path


def read_plot_data(path) -> tuple:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, rows
