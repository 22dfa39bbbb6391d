"""Artifact writers: deterministic JSON reports, CSV tables, plot data.

Every JSON report embeds the config that produced it; identical config and
seed give byte-identical files (keys sorted, default float repr).  Curves
additionally go out as two-column whitespace text so any plotting tool can
reproduce the figures.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np


def default_outdir() -> Path:
    return Path(os.environ.get("POLYRAD_OUTDIR", "polyrad_out"))


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def write_report(path: str | Path, payload: dict, config: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"config": _jsonable(config), **_jsonable(payload)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def write_curve(path: str | Path, x, y) -> Path:
    """Two-column plain-text curve, gnuplot-ready."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for xi, yi in zip(np.asarray(x), np.asarray(y)):
            fh.write(f"{xi:.17g} {yi:.17g}\n")
    return path


def write_csv(path: str | Path, header: str, columns) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [np.asarray(c) for c in columns]
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return path
