"""RunReport assembly and JSON serialization."""

from __future__ import annotations

import hashlib
import json
import math
from fractions import Fraction
from importlib import resources

import numpy as np

from . import __version__

SOURCES = ("closed_form", "enumeration", "simulation")


def to_jsonable(value):
    """Rationals become ``"p/q"`` strings, numpy scalars become Python numbers."""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r} cannot be reported")
        return value
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


def input_digest(argv: list[str], files: dict[str, bytes]) -> str:
    """SHA-256 over the argument vector and the bytes of every input file."""
    h = hashlib.sha256()
    h.update(json.dumps(list(argv)).encode())
    for name in sorted(files):
        h.update(b"\0" + name.encode() + b"\0")
        h.update(hashlib.sha256(files[name]).digest())
    return "sha256:" + h.hexdigest()


def make_report(argv, files, results, sources, inputs=None, generator=None, **extra) -> dict:
    missing = sorted(set(results) - set(sources))
    if missing:
        raise ValueError(f"results without a source tag: {missing}")
    bad = {k: v for k, v in sources.items() if v not in SOURCES}
    if bad:
        raise ValueError(f"unknown source tags: {bad}")
    report = {
        "version": __version__,
        "command": list(argv),
        "input_digest": input_digest(argv, files),
        "generator": generator,
        "inputs": inputs or {},
        "results": results,
        "sources": sources,
    }
    report.update(extra)
    return to_jsonable(report)


def dumps(report: dict) -> str:
    # json uses repr for floats, the shortest string that round-trips
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def load_schema() -> dict:
    text = resources.files("altseq").joinpath("data/run_report.schema.json").read_text()
    return json.loads(text)


def load_acceptance_config() -> dict:
    text = resources.files("altseq").joinpath("data/acceptance.json").read_text()
    return json.loads(text)
