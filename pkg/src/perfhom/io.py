"""On-disk formats: raw little-endian arrays with JSON sidecars, JSON/CSV reports."""
import csv
import json
import os
from pathlib import Path

import numpy as np


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def dumps(obj):
    # json writes floats via repr, i.e. the shortest round-trip decimal
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False)


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(dumps(obj) + "\n")
    os.replace(tmp, path)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def write_field(stem, array, **meta):
    """Write ``stem.bin`` (float64, little-endian, C order) and ``stem.json``."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    arr = np.ascontiguousarray(array, dtype="<f8")
    stem.with_suffix(".bin").write_bytes(arr.tobytes())
    header = {"shape": list(arr.shape), "dtype": "<f8", "order": "C"}
    header.update(meta)
    write_json(stem.with_suffix(".json"), header)
    return stem


def read_field(stem):
    stem = Path(stem)
    header = json.loads(stem.with_suffix(".json").read_text())
    data = np.frombuffer(stem.with_suffix(".bin").read_bytes(), dtype=header.get("dtype", "<f8"))
    return data.reshape(header["shape"]).astype(float), header


def write_mask(stem, mask):
    """Fluid-cell mask as uint8 bytes plus a sidecar echoing grid and spec."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    stem.with_suffix(".bin").write_bytes(np.ascontiguousarray(mask.fluid_cell, dtype=np.uint8).tobytes())
    meta = {
        "shape": list(mask.grid.shape), "dtype": "u1", "spacing": list(mask.grid.spacing),
        "origin": list(mask.grid.origin), "hole_count": mask.hole_count,
        "porosity": mask.porosity, "mask_hash": mask.mask_hash(),
        "spec": None if mask.spec is None else mask.spec.to_dict(),
    }
    write_json(stem.with_suffix(".json"), meta)
    return stem
