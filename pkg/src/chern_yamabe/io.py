"""Serialization of fields, instances, reports and CSV traces.

Field files carry a header ``{n, resolution, periods, kind, dtype, shape}``
followed by the values in row-major (C) grid order.

- ``.json``: ``{"header": {...}, "data": [...]}`` with complex data stored
  as ``"real"`` and ``"imag"`` lists.
- any other suffix: one line of JSON header, a newline, then raw
  little-endian float64 (complex128 for complex data).
"""
from __future__ import annotations

import csv
import json
import math
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from .gauduchon import ConformalInstance
from .grid import GridChart

FIELD_KINDS = ("scalar", "one-form", "metric")


def _header(chart: GridChart, values, kind):
    if kind not in FIELD_KINDS:
        raise ValueError(f"unknown field kind {kind!r}")
    return dict(
        n=chart.complex_dim,
        resolution=chart.resolution,
        periods=list(chart.periods),
        kind=kind,
        dtype="complex128" if np.iscomplexobj(values) else "float64",
        shape=list(np.shape(values)),
    )


def save_field(path, values, chart: GridChart, kind="scalar"):
    path = Path(path)
    values = np.ascontiguousarray(values)
    header = _header(chart, values, kind)
    if path.suffix == ".json":
        flat = values.ravel(order="C")
        if np.iscomplexobj(flat):
            data = {"real": flat.real.tolist(), "imag": flat.imag.tolist()}
        else:
            data = flat.astype(float).tolist()
        path.write_text(json.dumps({"header": header, "data": data}))
    else:
        dtype = "<c16" if np.iscomplexobj(values) else "<f8"
        with open(path, "wb") as fh:
            fh.write(json.dumps(header).encode() + b"\n")
            fh.write(values.astype(dtype).tobytes(order="C"))
    return header


def load_field(path):
    """Returns ``(values, chart, header)``."""
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        header, data = doc["header"], doc["data"]
        if header["dtype"] == "complex128":
            flat = np.asarray(data["real"]) + 1j * np.asarray(data["imag"])
        else:
            flat = np.asarray(data, dtype=float)
    else:
        raw = path.read_bytes()
        line, _, body = raw.partition(b"\n")
        header = json.loads(line)
        dtype = "<c16" if header["dtype"] == "complex128" else "<f8"
        flat = np.frombuffer(body, dtype=dtype)
    values = flat.reshape(header["shape"], order="C")
    chart = GridChart(header["n"], header["resolution"], tuple(header["periods"]))
    return values, chart, header


# --- instances ---------------------------------------------------------------

def instance_to_dict(inst: ConformalInstance) -> dict:
    """JSON document for an instance; the metric is referenced by its recipe."""
    rep = inst.report.as_dict() if inst.report is not None else None
    return dict(
        recipe=inst.recipe,
        synthetic=inst.synthetic,
        gamma=inst.gamma,
        volume=inst.eta.volume(),
        report=rep,
        resolution=inst.chart.resolution,
        complex_dim=inst.n,
        potential=inst.potential.ravel().tolist(),
        scalar=inst.scalar.ravel().tolist(),
    )


def save_instance(path, inst: ConformalInstance):
    if inst.recipe is None:
        raise ValueError("only recipe-built instances can be serialized")
    Path(path).write_text(json.dumps(jsonable(instance_to_dict(inst)), sort_keys=True))


def load_instance(path, check_tol=1e-10) -> ConformalInstance:
    """Rebuild an instance from its recipe and check it against the stored data."""
    from .models import MetricRecipe, make_instance

    doc = json.loads(Path(path).read_text())
    inst = make_instance(MetricRecipe(**doc["recipe"]))
    if abs(inst.gamma - doc["gamma"]) > check_tol:
        raise ValueError("stored degree does not match the rebuilt instance")
    stored = np.asarray(doc["potential"]).reshape(inst.chart.shape)
    if np.abs(stored - inst.potential).max() > 1e-8:
        raise ValueError("stored potential does not match the rebuilt instance")
    return inst


# --- reports -----------------------------------------------------------------

def jsonable(obj):
    """Recursively convert numpy scalars/arrays and fractions to JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def entry(value, module, tolerance=None, passed=None, **extra):
    """A numeric report entry with its tolerance and producing module."""
    out = dict(value=value, module=module, tolerance=tolerance)
    if passed is not None:
        out["pass"] = bool(passed)
    out.update(extra)
    return out


def write_report(path, report: dict, timestamp=None):
    doc = dict(report)
    doc["timestamp"] = timestamp or datetime.now(timezone.utc).isoformat()
    text = json.dumps(jsonable(doc), sort_keys=True, indent=2)
    Path(path).write_text(text + "\n")
    return text


def write_trace(path, rows, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(row[c])) if isinstance(row.get(c), (float, np.floating)) else row.get(c, "")
                        for c in columns])
