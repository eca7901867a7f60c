"""File formats: 16-bit PNG depth/label images, sample CSVs, INI configs,
run manifests and report serialization.

Depth PNGs store value = depth / scale with 0 reserved for invalid; the
scale (meters per unit) defaults to 1 mm and is coarsened automatically
when the depth range exceeds what 16 bits can hold, with the actual
scale recorded in a sidecar text file next to the image.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from PIL import Image

from .core import DataError, DepthMap, RgbImage, SampleSet
from .sampler import SamplePattern

TOOL_VERSION = "0.1.0"
_MAX16 = 65535


def save_rgb_png(path, image: RgbImage):
    Image.fromarray(image.pixels, mode="RGB").save(path)


def load_rgb_png(path) -> RgbImage:
    img = Image.open(path)
    arr = np.asarray(img)
    if arr.ndim == 2:
        return RgbImage.from_gray(arr.astype(np.uint8))
    if arr.ndim == 3 and arr.shape[2] >= 3:
        return RgbImage(arr[:, :, :3].astype(np.uint8))
    raise DataError(f"{path}: unsupported image layout {arr.shape}")


def _sidecar(path) -> Path:
    return Path(str(path) + ".meta.txt")


def save_depth_png(path, d: DepthMap):
    """Write a depth map as 16-bit grayscale PNG plus a scale sidecar."""
    dmax = float(d.depth[d.valid].max()) if d.valid.any() else 0.0
    scale = 0.001 * max(1, math.ceil(dmax / (_MAX16 * 0.001)))
    values = np.zeros(d.shape, dtype=np.uint16)
    q = np.round(d.depth[d.valid] / scale)
    values[d.valid] = np.clip(q, 0, _MAX16).astype(np.uint16)
    Image.fromarray(values, mode="I;16").save(path)
    _sidecar(path).write_text(
        f"unit_per_value_m = {scale!r}\ninvalid_value = 0\n")


def load_depth_png(path) -> DepthMap:
    arr = np.asarray(Image.open(path)).astype(np.float64)
    if arr.ndim != 2:
        raise DataError(f"{path}: depth PNG must be single-channel")
    scale = 0.001
    side = _sidecar(path)
    if side.exists():
        for line in side.read_text().splitlines():
            key, _, value = line.partition("=")
            if key.strip() == "unit_per_value_m":
                scale = float(value.strip())
    valid = arr > 0
    return DepthMap(arr * scale, valid)


def save_labels_png(path, labels: np.ndarray):
    lab = np.asarray(labels)
    if lab.min() < 0 or lab.max() > _MAX16:
        raise DataError("save_labels_png: labels out of 16-bit range")
    Image.fromarray(lab.astype(np.uint16), mode="I;16").save(path)


def load_labels_png(path) -> np.ndarray:
    arr = np.asarray(Image.open(path))
    if arr.ndim != 2:
        raise DataError(f"{path}: label PNG must be single-channel")
    return arr.astype(np.int32)


def save_mask_png(path, mask: np.ndarray):
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L").save(path)


def load_mask_png(path) -> np.ndarray:
    arr = np.asarray(Image.open(path).convert("L"))
    return arr > 127


def save_samples_csv(path, samples):
    """Write `x,y,depth_m` rows; depth stays empty for a plain pattern."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "depth_m"])
        if isinstance(samples, SampleSet):
            for x, y, d in zip(samples.x, samples.y, samples.depth):
                writer.writerow([int(x), int(y), repr(float(d))])
        else:
            for x, y in zip(samples.x, samples.y):
                writer.writerow([int(x), int(y), ""])


def load_samples_csv(path):
    """Read a sample CSV; returns a SampleSet, or a SamplePattern when the
    depth column is empty."""
    xs, ys, ds = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["x", "y", "depth_m"]:
            raise DataError(f"{path}: expected header x,y,depth_m")
        for row in reader:
            if not row:
                continue
            xs.append(int(row[0]))
            ys.append(int(row[1]))
            ds.append(float(row[2]) if len(row) > 2 and row[2] != "" else None)
    if any(d is None for d in ds):
        if not all(d is None for d in ds):
            raise DataError(f"{path}: mixed executed/unexecuted rows")
        return SamplePattern(np.array(xs, dtype=np.int64),
                             np.array(ys, dtype=np.int64), "csv", max(1, len(xs)))
    return SampleSet(np.array(xs, dtype=np.int64), np.array(ys, dtype=np.int64),
                     np.array(ds, dtype=np.float64), "csv", max(1, len(xs)))


def _canonical(obj):
    if isinstance(obj, dict):
        return {k: _canonical(obj[k]) for k in sorted(obj)}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def config_hash(params: dict) -> str:
    """Hash of the parameter set, stable under key reordering."""
    text = json.dumps(_canonical(params), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def write_manifest(target, seed, params: dict, stages: dict = None):
    """Emit the run manifest next to an output file or inside an output
    directory. Timestamps live only here, keeping data outputs
    byte-stable across runs."""
    target = Path(target)
    path = target / "manifest.json" if target.is_dir() else Path(str(target) + ".manifest.json")
    doc = {
        "tool_version": TOOL_VERSION,
        "config_hash": config_hash(params),
        "seed": seed,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "parameters": _canonical(params),
    }
    if stages:
        doc["stages"] = _canonical(stages)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_manifest(for_file) -> dict:
    path = Path(str(for_file) + ".manifest.json")
    if not path.exists():
        return {}
    return json.loads(path.read_text())


def parse_ini(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise DataError(f"{path}: cannot read config")
    return cp


def discover_dataset(root) -> list:
    """Pairs of `<id>_rgb.png` / `<id>_depth.png` (optional `<id>_mask.png`)
    under a directory, sorted by id."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"{root}: not a directory")
    records = []
    for rgb in sorted(root.glob("*_rgb.png")):
        image_id = rgb.name[:-len("_rgb.png")]
        depth = root / f"{image_id}_depth.png"
        mask = root / f"{image_id}_mask.png"
        records.append({
            "id": image_id,
            "rgb": rgb,
            "depth": depth if depth.exists() else None,
            "mask": mask if mask.exists() else None,
        })
    if not records:
        raise DataError(f"{root}: no *_rgb.png images found")
    return records


def format_float(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float) and math.isnan(v):
        return ""
    return repr(float(v))


def rows_to_csv_text(rows: list, columns: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        out = []
        for c in columns:
            v = row.get(c)
            if isinstance(v, float):
                out.append(format_float(v))
            else:
                out.append("" if v is None else str(v))
        writer.writerow(out)
    return buf.getvalue()
