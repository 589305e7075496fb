"""Deterministic CSV / line-delimited JSON writers.

Floats are written with ``repr`` (shortest round-trip form), so identical
inputs always produce identical bytes.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import IoError


def _plain(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_plain(v) for v in row])
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc
    return path


def read_csv(path: Path) -> list[dict]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    v = _plain(obj)
    return v


def dumps(record) -> str:
    return json.dumps(_clean(record), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_jsonl(path: Path, records: Iterable[dict]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(dumps(rec) + "\n")
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc
    return path


def read_jsonl(path: Path) -> list[dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc
    return path


TRAJECTORY_HEADER = ("front_id", "u", "v", "t_birth", "x_birth", "speed", "t_death")
