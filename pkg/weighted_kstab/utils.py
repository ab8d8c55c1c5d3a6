import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, is_dataclass
from enum import Enum
from fractions import Fraction
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Iterable, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


class ExtendedEncoder(json.JSONEncoder):
    """Extends JSONEncoder with the exact and numeric types found in reports."""

    def default(self, obj):
        if isinstance(obj, Fraction):
            return f"{obj.numerator}/{obj.denominator}" if obj.denominator != 1 else str(obj.numerator)
        if isinstance(obj, Enum):
            return obj.value
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, Path):
            return str(obj)
        if is_dataclass(obj) and not isinstance(obj, type):
            return asdict(obj)
        return super().default(obj)


def _is_exact(value: Any) -> bool:
    if isinstance(value, Fraction):
        return True
    return isinstance(value, (list, tuple)) and bool(value) and all(_is_exact(v) for v in value)


def _decimal(value: Any) -> Any:
    if isinstance(value, Fraction):
        return float(value)
    return [_decimal(v) for v in value]


def with_decimals(document: Any) -> Any:
    """Add a ``<key>_decimal`` companion after every exact rational (or list of them)."""
    if isinstance(document, dict):
        out = {}
        for key, value in document.items():
            out[key] = with_decimals(value)
            if _is_exact(value):
                out[f"{key}_decimal"] = _decimal(value)
        return out
    if isinstance(document, (list, tuple)) and not _is_exact(document):
        return [with_decimals(v) for v in document]
    return document


def _flat_decimal(value: Any) -> Any:
    if isinstance(value, Fraction):
        return repr(float(value))
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return " ".join(str(_flat_decimal(v)) for v in value)
    if isinstance(value, Enum):
        return value.value
    return value


def _text(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return "(" + ", ".join(_text(v) for v in value) + ")"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k}: {_text(v)}" for k, v in value.items()) + "}"
    if isinstance(value, Enum):
        return str(value.value)
    if value is None:
        return "-"
    return str(value)


def render(result: dict, output_format: str = "json") -> str:
    """Render a command result.

    json: exact values as "p/q" plus decimal companions. csv: decimals only, one row per
    entry of ``result["rows"]`` when present, else a single row. text: ``key: value`` lines,
    or ``result["text"]`` verbatim when the command prepared its own wording.
    """
    output_format = getattr(output_format, "value", output_format)
    if output_format == "json":
        return json.dumps(with_decimals(result), cls=ExtendedEncoder, indent=2)
    if output_format == "csv":
        rows = result.get("rows") or [{k: v for k, v in result.items() if not isinstance(v, dict)}]
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _flat_decimal(v) for k, v in row.items()})
        return buffer.getvalue().rstrip("\n")
    if "text" in result:
        return str(result["text"])
    return "\n".join(f"{key}: {_text(value)}" for key, value in result.items())


def with_serializer(fn):
    """
    Decorator rendering a command handler's result in the format chosen on the command line.

    The handler receives the parsed argparse namespace first and returns a dict (anything
    else is wrapped as ``{"result": value}``); the wrapper returns the rendered text.
    """

    @wraps(fn)
    def wrapper(args, *rest, **kwargs):
        result = fn(args, *rest, **kwargs)
        if not isinstance(result, dict):
            result = {"result": result}
        return render(result, getattr(args, "format", "json"))

    return wrapper


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """Map in input order; a process pool is used only when ``workers > 1``.

    ``fn`` and the items must be picklable when a pool is used.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
