"""File formats: binary PGM images, trace/curve CSV and JSON."""

import csv
import json
import math

import numpy as np

from .errors import ConfigurationError
from .schedules import LambdaSchedule
from .solver import TRACE_COLUMNS, SolveTrace

__all__ = [
    "read_pgm",
    "write_pgm",
    "write_trace_csv",
    "read_trace_csv",
    "write_trace_json",
    "read_trace_json",
    "write_curve_csv",
    "read_curve_csv",
    "write_json",
    "to_jsonable",
]

CSV_TRACE_HEADER = ("n", "lambda_n", "f", "g", "F_lambda", "step_norm", "eps_n", "gap_n")
CSV_CURVE_HEADER = ("lambda", "tau", "f", "iterations")


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def read_pgm(path):
    """Read a binary (P5) greyscale PGM into floats in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while data[pos:pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise ConfigurationError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    width, height, maxval = (int(t) for t in tokens[1:])
    pos += 1
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    pixels = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
    return pixels.reshape(height, width).astype(float) / maxval


def write_pgm(image, path):
    """Write an image as 8-bit P5, clamping to [0, 1] first."""
    img = np.clip(np.asarray(image, dtype=float), 0.0, 1.0)
    if img.ndim != 2:
        raise ConfigurationError("PGM output needs a 2-D image")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(np.round(img * 255.0).astype(np.uint8).tobytes())


def write_trace_csv(trace: SolveTrace, path):
    rows = trace.as_array()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_TRACE_HEADER)
        for r in rows:
            w.writerow([str(int(r[0]))] + [_fmt(v) for v in r[1:len(CSV_TRACE_HEADER)]])


def read_trace_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_TRACE_HEADER:
            raise ConfigurationError(f"{path}: unexpected trace header {header}")
        rows = [[float(v) if v else math.nan for v in r] + [math.nan] for r in reader]
    return SolveTrace.from_rows(rows)


def to_jsonable(obj):
    """Recursively replace numpy scalars/arrays and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items() if not str(k).startswith("_")}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(to_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_trace_json(result, path, extra=None):
    """Trace points plus run metadata (config, schedule, monitor constants)."""
    points = [dict(zip(TRACE_COLUMNS, row)) for row in result.trace.as_array()]
    for p in points:
        p["n"] = int(p["n"])
    doc = {
        "lambda": result.lam,
        "alpha": result.alpha,
        "iterations": result.iterations,
        "converged": result.converged,
        "config": result.config.as_dict() if result.config else None,
        "schedule": result.schedule.as_dict() if result.schedule else None,
        "lambda_bar": result.schedule.summability() if result.schedule else None,
        "validation": result.validation.as_dict() if result.validation else None,
        "M_running": result.M_running,
        "M_eps": result.M_eps,
        "rate_monitor": result.rate_monitor,
        "trace": points,
    }
    if extra:
        doc.update(extra)
    write_json(doc, path)


def _float(v):
    if v is None:
        return math.nan
    if isinstance(v, str):
        return float(v)
    return float(v)


def read_trace_json(path):
    """Return ``(doc, trace)``; ``doc['schedule']`` is rebuilt as a :class:`LambdaSchedule`."""
    with open(path) as fh:
        doc = json.load(fh)
    rows = [[_float(p.get(c)) for c in TRACE_COLUMNS] for p in doc.get("trace", [])]
    trace = SolveTrace.from_rows(rows) if rows else SolveTrace(1)
    if doc.get("schedule"):
        doc["schedule"] = LambdaSchedule.from_dict(doc["schedule"])
    for key in ("lambda_bar", "M_running", "M_eps"):
        if key in doc:
            doc[key] = _float(doc[key])
    return doc, trace


def write_curve_csv(curve, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_CURVE_HEADER)
        for p in curve.points:
            w.writerow([_fmt(p.lam), _fmt(p.tau), _fmt(p.f_val), str(int(p.solve_iterations))])


def read_curve_csv(path):
    from .pareto import ParetoCurve, ParetoPoint
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_CURVE_HEADER:
            raise ConfigurationError(f"{path}: unexpected curve header {header}")
        pts = [ParetoPoint(float(r[0]), float(r[1]), float(r[2]), int(r[3])) for r in reader]
    return ParetoCurve(pts, [p.lam for p in pts])
