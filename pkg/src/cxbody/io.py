"""Canonical artifacts, config files and spec-string parsing.

Artifacts are JSON with sorted keys and floats printed at 17 significant
digits, so identical runs produce byte-identical files; the volatile
fields (timestamp, runtime_s) sit on their own lines and are the only
thing a diff may show between reruns.
"""

from __future__ import annotations

import dataclasses
import datetime
import json
import math
import os
from typing import Optional

import numpy as np


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return f'"{x!r}"'
    if x == int(x) and abs(x) < 1e15:
        return f"{x:.1f}"
    return f"{x:.17g}"


def dumps_canonical(obj, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, 17-significant-digit floats."""
    pad = "  " * indent
    pad_in = "  " * (indent + 1)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, complex):
        return dumps_canonical({"re": obj.real, "im": obj.imag}, indent)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps_canonical(obj.tolist(), indent)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return dumps_canonical(dataclasses.asdict(obj), indent)
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        if not items:
            return "{}"
        body = ",\n".join(f'{pad_in}{json.dumps(str(k))}: {dumps_canonical(v, indent + 1)}'
                          for k, v in items)
        return "{\n" + body + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        flat = all(isinstance(v, (int, float, np.integer, np.floating)) for v in seq)
        if flat and len(seq) <= 8:
            return "[" + ", ".join(dumps_canonical(v) for v in seq) + "]"
        body = ",\n".join(f"{pad_in}{dumps_canonical(v, indent + 1)}" for v in seq)
        return "[\n" + body + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def write_artifact(path: str, payload: dict, stamp: bool = True) -> None:
    doc = dict(payload)
    if stamp:
        doc["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write(dumps_canonical(doc) + "\n")


def record_to_dict(rec) -> dict:
    doc = dataclasses.asdict(rec)
    doc["claims"] = [dataclasses.asdict(c) if dataclasses.is_dataclass(c) else c
                     for c in rec.claims]
    return doc


def strip_volatile(text: str) -> str:
    """Drop the timestamp/runtime lines for byte-comparing artifacts."""
    keep = [ln for ln in text.splitlines()
            if '"timestamp"' not in ln and '"runtime_s"' not in ln]
    return "\n".join(keep)


def parse_config(path: str) -> dict:
    """Plain key=value config (# comments allowed); values stay strings."""
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line without '=': {raw!r}")
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


def parse_grid_spec(spec: str):
    """Grid strings: s3:48x64x64, s5:24x32x32x32, sim2:48, sim3:24."""
    head, _, rest = spec.partition(":")
    parts = [int(v) for v in rest.split("x")]
    if head == "s3":
        if len(set(parts[1:])) > 1:
            raise ValueError("phase counts must agree on this product rule")
        return ("sphere", 2, (parts[0], parts[1]))
    if head == "s5":
        if len(set(parts[1:])) > 1:
            raise ValueError("phase counts must agree on this product rule")
        return ("sphere", 3, (parts[0], parts[1]))
    if head in ("sim2", "sim3"):
        return ("simplex", int(head[-1]), (parts[0],))
    raise ValueError(f"unknown grid spec {spec!r}")
