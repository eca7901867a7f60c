"""Conditional statistics linking RGB edges and depth discontinuities.

P(rgb edge | depth boundary) measures how predictable depth breaks are
from color alone; P(depth boundary | rgb edge) how many color edges are
false alarms for depth. Matching allows a spatial tolerance (default a
5x5 neighborhood) to absorb registration error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .colorspace import luma
from .core import DataError, DepthMap, RgbImage


@dataclass(frozen=True)
class BoundaryMap:
    boundary: np.ndarray  # (H, W) bool

    def __post_init__(self):
        b = np.asarray(self.boundary, dtype=bool)
        if b.ndim != 2:
            raise DataError("BoundaryMap: expected 2-d mask")
        object.__setattr__(self, "boundary", b)

    @property
    def count(self) -> int:
        return int(self.boundary.sum())


def depth_boundaries(d: DepthMap, rel_threshold: float = 0.05) -> BoundaryMap:
    """Mark pixels whose forward depth difference, normalized by the depth
    value, exceeds rel_threshold: max(|dx d|, |dy d|) / d > threshold.

    Differences toward invalid or out-of-image neighbors are skipped.
    Raises if an evaluated pixel has non-positive depth.
    """
    h, w = d.shape
    gx = np.zeros((h, w))
    ok_x = np.zeros((h, w), dtype=bool)
    ok_x[:, :-1] = d.valid[:, :-1] & d.valid[:, 1:]
    gx[:, :-1] = np.abs(d.depth[:, 1:] - d.depth[:, :-1])
    gx[~ok_x] = 0.0

    gy = np.zeros((h, w))
    ok_y = np.zeros((h, w), dtype=bool)
    ok_y[:-1, :] = d.valid[:-1, :] & d.valid[1:, :]
    gy[:-1, :] = np.abs(d.depth[1:, :] - d.depth[:-1, :])
    gy[~ok_y] = 0.0

    evaluated = ok_x | ok_y
    if (d.depth[evaluated] <= 0).any():
        raise DataError("depth_boundaries: evaluated pixel with depth <= 0")
    ratio = np.zeros((h, w))
    ratio[evaluated] = np.maximum(gx, gy)[evaluated] / d.depth[evaluated]
    return BoundaryMap(ratio > rel_threshold)


@dataclass(frozen=True)
class EdgeParams:
    """Gradient edge detector thresholds.

    high/low are hysteresis thresholds as fractions of the maximum
    gradient magnitude; min_magnitude is an absolute floor (Sobel units
    on 0..255 luma, max possible 1020) below which nothing counts as an
    edge, so pure sensor noise yields an empty map.
    """

    high: float = 0.15
    low: float = 0.05
    min_magnitude: float = 30.0


def _sobel(img: np.ndarray):
    p = np.pad(img, 1, mode="edge")
    gx = (p[:-2, 2:] + 2 * p[1:-1, 2:] + p[2:, 2:]
          - p[:-2, :-2] - 2 * p[1:-1, :-2] - p[2:, :-2])
    gy = (p[2:, :-2] + 2 * p[2:, 1:-1] + p[2:, 2:]
          - p[:-2, :-2] - 2 * p[:-2, 1:-1] - p[:-2, 2:])
    return gx, gy


_DIR_OFFSETS = {
    0: ((0, 1), (0, -1)),    # horizontal gradient: compare left/right
    1: ((1, 1), (-1, -1)),   # 45 degrees
    2: ((1, 0), (-1, 0)),    # vertical gradient: compare up/down
    3: ((1, -1), (-1, 1)),   # 135 degrees
}


def _nms(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Thin ridges to one pixel along the gradient direction.

    A pixel survives if its magnitude is strictly greater than the
    neighbor on the negative gradient side and at least the neighbor on
    the positive side; the asymmetric tie rule keeps exactly one pixel of
    a two-pixel plateau (perfect step edges produce those under Sobel).
    """
    h, w = mag.shape
    angle = np.mod(np.arctan2(gy, gx), np.pi)
    sector = np.floor((angle + np.pi / 8) / (np.pi / 4)).astype(int) % 4
    padded = np.pad(mag, 1, mode="constant")
    keep = np.zeros((h, w), dtype=bool)
    for s, ((py, px), (ny, nx)) in _DIR_OFFSETS.items():
        sel = sector == s
        plus = padded[1 + py:h + 1 + py, 1 + px:w + 1 + px]
        minus = padded[1 + ny:h + 1 + ny, 1 + nx:w + 1 + nx]
        keep |= sel & (mag > minus) & (mag >= plus)
    return keep


def rgb_edges(image: RgbImage, params: EdgeParams = None) -> BoundaryMap:
    """Binary edge map: Sobel magnitude on luma, non-maximum suppression,
    then hysteresis (weak edges kept only when 8-connected to a strong
    one)."""
    params = params or EdgeParams()
    gx, gy = _sobel(luma(image.pixels))
    mag = np.hypot(gx, gy)
    gmax = mag.max()
    if gmax < params.min_magnitude or gmax == 0:
        return BoundaryMap(np.zeros(mag.shape, dtype=bool))

    thin = _nms(mag, gx, gy) & (mag > 0)
    hi = max(params.high * gmax, params.min_magnitude)
    lo = max(params.low * gmax, params.min_magnitude)
    strong = thin & (mag >= hi)
    weak = thin & (mag >= lo)
    comp, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return BoundaryMap(np.zeros(mag.shape, dtype=bool))
    keep_ids = np.unique(comp[strong])
    keep_ids = keep_ids[keep_ids > 0]
    return BoundaryMap(np.isin(comp, keep_ids))


def conditional_probabilities(b_rgb: BoundaryMap, b_d: BoundaryMap,
                              tol: int = 2) -> tuple:
    """(P(rgb near | depth), P(depth near | rgb)) with a (2 tol + 1)^2
    matching window. Swapping the arguments swaps the outputs."""
    if b_rgb.boundary.shape != b_d.boundary.shape:
        raise DataError("conditional_probabilities: shape mismatch")
    if tol < 0:
        raise DataError("conditional_probabilities: tol must be >= 0")
    if b_d.count == 0 or b_rgb.count == 0:
        raise DataError("conditional_probabilities: empty conditioning set")
    size = 2 * tol + 1
    rgb_near = ndimage.maximum_filter(b_rgb.boundary.astype(np.uint8), size=size) > 0
    d_near = ndimage.maximum_filter(b_d.boundary.astype(np.uint8), size=size) > 0
    p_rgb_given_d = float((b_d.boundary & rgb_near).sum() / b_d.count)
    p_d_given_rgb = float((b_rgb.boundary & d_near).sum() / b_rgb.count)
    return p_rgb_given_d, p_d_given_rgb


def overlay(b_rgb: BoundaryMap, b_d: BoundaryMap) -> RgbImage:
    """Correlation overlay: depth-only boundaries red, RGB-only green,
    pixels in both blue."""
    if b_rgb.boundary.shape != b_d.boundary.shape:
        raise DataError("overlay: shape mismatch")
    h, w = b_d.boundary.shape
    img = np.zeros((h, w, 3), dtype=np.uint8)
    both = b_rgb.boundary & b_d.boundary
    img[b_d.boundary & ~both] = (255, 0, 0)
    img[b_rgb.boundary & ~both] = (0, 255, 0)
    img[both] = (0, 0, 255)
    return RgbImage(img)
