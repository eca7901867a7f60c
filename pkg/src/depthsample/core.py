"""Domain types shared across the library, plus the evaluation metrics.

Depth is in meters everywhere; file formats convert at the I/O boundary.
All types are plain data holders and are treated as immutable after
construction, so instances can safely be shared between worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Raised when an input violates a documented contract."""


def _as_array(a, dtype, ndim, name):
    arr = np.asarray(a, dtype=dtype)
    if arr.ndim != ndim:
        raise DataError(f"{name}: expected {ndim}-d array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class RgbImage:
    """8-bit 3-channel color image, row-major (H, W, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = _as_array(self.pixels, np.uint8, 3, "RgbImage.pixels")
        if px.shape[2] != 3:
            raise DataError(f"RgbImage: expected 3 channels, got {px.shape[2]}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise DataError("RgbImage: empty image")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @staticmethod
    def from_gray(gray) -> "RgbImage":
        """Accept a single-channel image by replicating it to 3 channels."""
        g = _as_array(gray, np.uint8, 2, "gray")
        return RgbImage(np.repeat(g[:, :, None], 3, axis=2))


@dataclass(frozen=True)
class DepthMap:
    """Per-pixel range image in meters with a validity mask.

    Invalid pixels carry no semantic value and are excluded from all
    metrics. ``depth`` must be finite and non-negative wherever ``valid``.
    """

    depth: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        d = _as_array(self.depth, np.float64, 2, "DepthMap.depth")
        if self.valid is None:
            v = np.ones(d.shape, dtype=bool)
        else:
            v = _as_array(self.valid, bool, 2, "DepthMap.valid")
        if v.shape != d.shape:
            raise DataError(f"DepthMap: depth {d.shape} vs valid {v.shape}")
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise DataError("DepthMap: empty map")
        dv = d[v]
        if dv.size and (not np.isfinite(dv).all() or (dv < 0).any()):
            raise DataError("DepthMap: depth must be finite and >= 0 where valid")
        object.__setattr__(self, "depth", d)
        object.__setattr__(self, "valid", v)

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def shape(self):
        return self.depth.shape


@dataclass(frozen=True)
class SegmentMap:
    """Per-pixel segment labels forming a partition of the image domain.

    Every label in [0, num_segments) is used by at least one pixel. The
    segmentation pass additionally guarantees 4-connectivity per label;
    that property is not re-checked here (it is O(image) per construction).
    """

    labels: np.ndarray
    num_segments: int

    def __post_init__(self):
        lab = _as_array(self.labels, np.int32, 2, "SegmentMap.labels")
        n = int(self.num_segments)
        if n < 1:
            raise DataError("SegmentMap: num_segments must be >= 1")
        lo, hi = int(lab.min()), int(lab.max())
        if lo < 0 or hi >= n:
            raise DataError(f"SegmentMap: labels outside [0, {n})")
        used = np.bincount(lab.ravel(), minlength=n)
        if (used == 0).any():
            raise DataError("SegmentMap: every label must be used by >= 1 pixel")
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "num_segments", n)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True)
class SampleSet:
    """Executed point measurements: (x, y, depth) triples with provenance.

    ``budget`` is the requested sample count n; ``len(sample_set)`` may be
    smaller (image smaller than budget, or samples dropped on invalid
    ground truth; drops are recorded in ``meta``).
    """

    x: np.ndarray
    y: np.ndarray
    depth: np.ndarray
    sampler_id: str
    budget: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = _as_array(self.x, np.int64, 1, "SampleSet.x")
        y = _as_array(self.y, np.int64, 1, "SampleSet.y")
        d = _as_array(self.depth, np.float64, 1, "SampleSet.depth")
        if not (x.size == y.size == d.size):
            raise DataError("SampleSet: x, y, depth must have equal length")
        if x.size > self.budget:
            raise DataError("SampleSet: more entries than budget")
        if x.size and (d < 0).any():
            raise DataError("SampleSet: negative depth")
        if x.size != np.unique(np.stack([x, y], axis=1), axis=0).shape[0]:
            raise DataError("SampleSet: duplicate (x, y) positions")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "depth", d)

    def __len__(self) -> int:
        return int(self.x.size)


@dataclass(frozen=True)
class EvalMask:
    """Per-pixel boolean mask restricting evaluation (e.g. obstacles only)."""

    include: np.ndarray

    def __post_init__(self):
        inc = _as_array(self.include, bool, 2, "EvalMask.include")
        object.__setattr__(self, "include", inc)

    @property
    def height(self) -> int:
        return self.include.shape[0]

    @property
    def width(self) -> int:
        return self.include.shape[1]

    @staticmethod
    def full(height: int, width: int) -> "EvalMask":
        return EvalMask(np.ones((height, width), dtype=bool))


def _eval_selection(gt: DepthMap, pred: DepthMap, mask: EvalMask, range_cap: float):
    if gt.shape != pred.shape or gt.shape != mask.include.shape:
        raise DataError(
            f"metric: shape mismatch gt={gt.shape} pred={pred.shape} "
            f"mask={mask.include.shape}")
    sel = mask.include & gt.valid & pred.valid & (gt.depth <= range_cap)
    if not sel.any():
        raise DataError("metric: empty evaluation set")
    return sel


def rmse(gt: DepthMap, pred: DepthMap, mask: EvalMask, range_cap: float = np.inf) -> float:
    """Root mean squared error over mask & valid pixels with gt <= range_cap.

    The cap filters on the ground-truth value only; predictions above the
    cap are kept as-is (the cap is a range filter, not a saturation).
    Raises on an empty evaluation set rather than returning a silent zero.
    """
    sel = _eval_selection(gt, pred, mask, range_cap)
    err = gt.depth[sel] - pred.depth[sel]
    return float(np.sqrt(np.mean(err * err)))


def rel(gt: DepthMap, pred: DepthMap, mask: EvalMask, range_cap: float = np.inf) -> float:
    """Mean absolute relative error |gt - pred| / gt over the evaluated set.

    Unlike :func:`rmse`, this metric is not symmetric in (gt, pred): the
    denominator is always the ground truth. Requires gt > 0 on every
    evaluated pixel.
    """
    sel = _eval_selection(gt, pred, mask, range_cap)
    g = gt.depth[sel]
    if (g <= 0).any():
        raise DataError("rel: evaluated pixel with gt <= 0")
    return float(np.mean(np.abs(g - pred.depth[sel]) / g))


def pixel_density(samples: SampleSet, image: DepthMap) -> float:
    """Ratio of sampled pixels to total pixels."""
    return len(samples) / float(image.width * image.height)
