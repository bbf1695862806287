"""Deterministic text output shared by the exporters and the CLI."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

SIG_DIGITS = 12


def fmt(x) -> str:
    """12 significant digits, scientific notation, independent of locale."""
    x = float(x)
    if x == 0:
        x = 0.0  # drop the sign of negative zero
    return f"{x:.{SIG_DIGITS - 1}e}"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return None
        return float(fmt(v))
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def write_table(path, header, columns, comments=()) -> str:
    """CSV with '#' comment lines, a header row and formatted numeric columns."""
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in zip(*columns):
        lines.append(",".join(fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def write_curve(path, curve) -> str:
    """Export a SpectralCurve: axis, re, im, abs, abs2."""
    unit = "rad_per_m" if curve.axis_kind == "dk" else "rad_per_s"
    v = curve.values
    return write_table(
        path,
        ("axis", "re", "im", "abs", "abs2"),
        (curve.axis, v.real, v.imag, np.abs(v), np.abs(v) ** 2),
        comments=(f"axis={curve.axis_kind}_{unit} normalization={curve.normalization} scale={fmt(curve.scale)}",),
    )
