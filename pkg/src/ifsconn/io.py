"""Artifact formats: binary graymaps, per-pixel CSV tables, JSON sidecars.

Every file is written through :func:`atomic_write`: the bytes go to a
temporary file in the target directory which is then renamed over the
destination, so an interrupted run never leaves a partial artifact.

Graymap layout (P5): header ``b"P5\\n<width> <height>\\n255\\n"`` followed by
``width*height`` bytes, row by row from the top. Column ``c`` is pixel
index ``i = c`` along the first window axis; row ``r`` is index
``j = height-1-r`` along the second axis, so the top row holds the largest
second coordinate. One-axis rasters have height 1.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .mandelbrot import ClassificationRaster, MembershipRaster


def atomic_write(path, data) -> Path:
    """Write ``data`` (bytes or str) to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def canonical_json(obj) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, NaN as null."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(_jsonable(cfg), sort_keys=True, separators=(",", ":")).encode()).hexdigest()


# ---------------------------------------------------------------------------
# graymaps


def image_rows(gray: np.ndarray) -> np.ndarray:
    """Raster array (``[i]`` or ``[i, j]``) to image rows, top row first."""
    gray = np.asarray(gray, dtype=np.uint8)
    if gray.ndim == 1:
        return gray.reshape(1, -1)
    return gray.T[::-1]


def pgm_bytes(gray: np.ndarray) -> bytes:
    img = image_rows(gray)
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img).tobytes()


def read_pgm(data: bytes) -> np.ndarray:
    """Parse a P5 graymap written by :func:`pgm_bytes`; returns image rows."""
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5":
        raise ValueError("not a binary graymap")
    w, h = (int(v) for v in parts[1].split())
    if int(parts[2]) != 255:
        raise ValueError("only 8-bit graymaps are supported")
    body = parts[3]
    if len(body) != w * h:
        raise ValueError("graymap body has the wrong length")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w)


# ---------------------------------------------------------------------------
# tables


def _pixel_indices(shape) -> list[tuple[int, int]]:
    return [(idx[0], idx[1] if len(idx) > 1 else 0) for idx in np.ndindex(*shape)]


def sweep_csv(r: ClassificationRaster) -> str:
    """Per-pixel certificates, one row per pixel in C order."""
    d = r.window.dim
    head = ["i", "j"] + [f"w{k}" for k in range(d)] + [
        "class", "gap", "threshold", "components", "resolutions", "margin", "note"]
    lines = [",".join(head)]
    params = r.window.pixel_params()
    for (i, j), w, v in zip(_pixel_indices(r.window.shape), params, r.verdicts):
        res = ";".join(repr(float(e)) for e in v.resolutions)
        row = [str(i), str(j)] + [repr(float(x)) for x in w] + [
            v.cls.value, repr(float(v.gap)), repr(float(v.threshold)), str(v.components),
            res, repr(float(v.margin)), v.note]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def membership_csv(m: MembershipRaster) -> str:
    d = m.window.dim
    lines = [",".join(["i", "j"] + [f"w{k}" for k in range(d)] + ["member"])]
    params = m.window.pixel_params()
    for (i, j), w, hit in zip(_pixel_indices(m.window.shape), params, m.member.reshape(-1)):
        lines.append(",".join([str(i), str(j)] + [repr(float(x)) for x in w] + [str(int(hit))]))
    return "\n".join(lines) + "\n"
