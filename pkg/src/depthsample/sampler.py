"""Sampling patterns and their execution against a dense ground truth.

Patterns are where to measure; :func:`execute` simulates the programmable
sensor by reading the ground-truth depth at those positions (noiseless by
default). The center-of-mass pattern places one sample per superpixel,
falling back to the segment member closest to the center of mass when the
rounded center lands outside a non-convex segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DataError, DepthMap, SampleSet, SegmentMap


@dataclass(frozen=True)
class SamplePattern:
    """Planned measurement positions (not yet executed)."""

    x: np.ndarray
    y: np.ndarray
    sampler_id: str
    budget: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.int64)
        y = np.asarray(self.y, dtype=np.int64)
        if x.size != y.size:
            raise DataError("SamplePattern: x and y length mismatch")
        if x.size > self.budget:
            raise DataError("SamplePattern: more positions than budget")
        if x.size != np.unique(np.stack([x, y], axis=1), axis=0).shape[0]:
            raise DataError("SamplePattern: duplicate positions")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return int(self.x.size)


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def com_pattern(segments: SegmentMap) -> SamplePattern:
    """One position per segment: the rounded center of mass if it belongs
    to the segment, otherwise the member pixel closest to the (unrounded)
    center of mass. Distance ties go to smaller y, then smaller x."""
    labels = segments.labels
    n = segments.num_segments
    h, w = labels.shape
    flat = labels.ravel()
    cnt = np.bincount(flat, minlength=n).astype(np.float64)
    sx = np.bincount(flat, weights=np.broadcast_to(
        np.arange(w, dtype=np.float64), (h, w)).ravel(), minlength=n)
    sy = np.bincount(flat, weights=np.broadcast_to(
        np.arange(h, dtype=np.float64)[:, None], (h, w)).ravel(), minlength=n)
    com_x = sx / cnt
    com_y = sy / cnt

    xs = np.empty(n, dtype=np.int64)
    ys = np.empty(n, dtype=np.int64)
    order = np.argsort(flat, kind="stable")
    bounds = np.searchsorted(flat[order], np.arange(n + 1))
    for i in range(n):
        rx, ry = _round_half_up(com_x[i]), _round_half_up(com_y[i])
        if 0 <= rx < w and 0 <= ry < h and labels[ry, rx] == i:
            xs[i], ys[i] = rx, ry
            continue
        members = order[bounds[i]:bounds[i + 1]]
        my = members // w
        mx = members - my * w
        d2 = (mx - com_x[i]) ** 2 + (my - com_y[i]) ** 2
        best = d2.min()
        cand = np.nonzero(d2 == best)[0]
        # members are in row-major order, so the first candidate already
        # has the smallest y, then smallest x
        pick = cand[0]
        xs[i], ys[i] = mx[pick], my[pick]
    return SamplePattern(xs, ys, "com", n)


def random_pattern(width: int, height: int, n: int, seed: int) -> SamplePattern:
    """n distinct positions drawn uniformly without replacement."""
    if n > width * height:
        raise DataError(f"random_pattern: n {n} > pixel count {width * height}")
    rng = np.random.default_rng(seed)
    flat = rng.choice(width * height, size=n, replace=False)
    return SamplePattern(flat % width, flat // width, "random", n)


def grid_pattern(width: int, height: int, n: int) -> SamplePattern:
    """Near-square lattice of at most n positions at cell centers.

    rows = round(sqrt(n * height / width)), cols = n // rows; positions
    are the floor of the continuous cell centers.
    """
    if n < 1:
        raise DataError("grid_pattern: n must be >= 1")
    rows = max(1, _round_half_up(math.sqrt(n * height / width)))
    rows = min(rows, height, n)
    cols = min(max(1, n // rows), width)
    gx = np.minimum(width - 1, ((np.arange(cols) + 0.5) * width / cols).astype(np.int64))
    gy = np.minimum(height - 1, ((np.arange(rows) + 0.5) * height / rows).astype(np.int64))
    xx, yy = np.meshgrid(gx, gy)
    return SamplePattern(xx.ravel(), yy.ravel(), "grid", n)


def execute(pattern: SamplePattern, gt: DepthMap,
            segments: SegmentMap | None = None,
            noise_sigma: float = 0.0, seed: int = 0) -> SampleSet:
    """Read the ground truth at the pattern positions.

    Positions landing on invalid pixels are relocated to the nearest valid
    pixel of the same segment when ``segments`` is given, else dropped;
    counts are recorded in the result's meta. Optional additive Gaussian
    noise models an imperfect rangefinder (off by default; measurements
    are clipped at 0).
    """
    h, w = gt.shape
    if len(pattern) and (pattern.x.min() < 0 or pattern.x.max() >= w
                         or pattern.y.min() < 0 or pattern.y.max() >= h):
        raise DataError("execute: pattern position out of bounds")

    xs, ys = [], []
    relocated = dropped = 0
    taken = set()
    for x, y in zip(pattern.x, pattern.y):
        x, y = int(x), int(y)
        moved = False
        if not gt.valid[y, x]:
            if segments is None:
                dropped += 1
                continue
            lbl = segments.labels[y, x]
            my, mx = np.nonzero((segments.labels == lbl) & gt.valid)
            if mx.size == 0:
                dropped += 1
                continue
            d2 = (mx - x) ** 2 + (my - y) ** 2
            best = d2.min()
            cand = np.nonzero(d2 == best)[0]
            x, y = int(mx[cand[0]]), int(my[cand[0]])
            moved = True
        if (x, y) in taken:  # relocation may collide with another sample
            dropped += 1
            continue
        relocated += moved
        taken.add((x, y))
        xs.append(x)
        ys.append(y)

    xs = np.array(xs, dtype=np.int64)
    ys = np.array(ys, dtype=np.int64)
    depth = gt.depth[ys, xs] if xs.size else np.empty(0)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        depth = np.maximum(0.0, depth + rng.normal(0.0, noise_sigma, depth.shape))
    meta = dict(pattern.meta)
    meta.update({"dropped": dropped, "relocated": relocated})
    return SampleSet(xs, ys, depth, pattern.sampler_id, pattern.budget, meta)
