"""Measure files and deterministic CSV/JSON emitters."""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ParseError, RandomWalkError
from .groups import Group
from .measures import FiniteMeasure

BUILTIN_MEASURES = ("srw",)


def parse_measure(text: str, group: Group) -> FiniteMeasure:
    """Read ``<element> <p>/<q>`` lines; ``#`` starts a comment.

    Every atom must appear once and the weights must sum to exactly 1.
    """
    weights: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.rsplit(None, 1)
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected '<element> <weight>', got {raw.strip()!r}")
        elem_text, w_text = parts
        try:
            g = group.parse(elem_text)
        except ParseError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        try:
            w = Fraction(w_text)
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"line {lineno}: malformed weight {w_text!r}") from None
        if w < 0:
            raise ParseError(f"line {lineno}: negative weight {w_text}")
        if g in weights:
            raise ParseError(f"line {lineno}: element {group.format(g)} listed twice")
        weights[g] = w
    if not weights:
        raise ParseError("measure file has no atoms")
    total = sum(weights.values(), Fraction(0))
    if total != 1:
        raise ParseError(f"measure weights sum to {total}, not 1")
    return FiniteMeasure(group, weights)


def format_measure(mu: FiniteMeasure) -> str:
    G = mu.group
    rows = sorted(mu.items(), key=lambda t: (G.length(t[0]), t[0]))
    return "".join(f"{G.format(g)} {w}\n" for g, w in rows)


def load_measure(source: str, group: Group) -> FiniteMeasure:
    """``srw`` for the simple random walk, otherwise a measure file path."""
    if source == "srw":
        return FiniteMeasure.simple_random_walk(group)
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read measure file {source!r}: {exc.strerror}") from None
    return parse_measure(text, group)


# --- emitters -------------------------------------------------------------


def format_value(x) -> str:
    """Rationals as ``p/q``, floats with 9 significant digits."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return f"{x:.9g}"
    return str(x)


def to_csv(header: Iterable[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for row in rows:
        w.writerow([format_value(x) for x in row])
    return buf.getvalue()


def jsonable(obj):
    """Recursively convert to plain JSON types with fixed float formatting."""
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, str) else k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if obj is None or isinstance(obj, (str, bool)):
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return format_value(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return float(f"{x:.9g}")
    if hasattr(obj, "value") and hasattr(obj, "name"):
        return obj.value
    raise RandomWalkError(f"cannot serialise {type(obj).__name__}")


def to_json(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, ensure_ascii=False) + "\n"


__all__ = [
    "BUILTIN_MEASURES",
    "parse_measure",
    "format_measure",
    "load_measure",
    "format_value",
    "to_csv",
    "jsonable",
    "to_json",
]
