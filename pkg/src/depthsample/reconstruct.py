"""Dense depth reconstruction from sparse samples.

The main pipeline: superpixel segmentation of the RGB image, one sample
per segment at its center of mass, zero-order fill (each segment takes
its sample's depth), then an edge-preserving bilateral filter applied in
the log-depth domain so smoothing is relative to depth. Baselines:
Delaunay bilinear interpolation and a per-segment first-order (plane)
fit from 3 samples per segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator
from scipy.spatial import Delaunay, QhullError, cKDTree

from . import _kernels
from .core import DataError, DepthMap, RgbImage, SampleSet, SegmentMap
from .planar import fit_plane
from .sampler import SamplePattern, com_pattern, execute
from .superpixel import SlicParams, slic_segment


@dataclass(frozen=True)
class BilateralParams:
    """Bilateral filter parameters; range_sigma is in log-depth units."""

    spatial_sigma: float
    range_sigma: float
    window_radius: int = None

    def __post_init__(self):
        if self.spatial_sigma <= 0 or self.range_sigma < 0:
            raise DataError("BilateralParams: sigmas must be positive")
        if self.window_radius is None:
            object.__setattr__(self, "window_radius",
                               int(math.ceil(2.0 * self.spatial_sigma)))
        if self.window_radius < 1:
            raise DataError("BilateralParams: window_radius must be >= 1")


# Range sigma per scene type: outdoor scenes span a much larger depth
# range, so relative smoothing is allowed to act more aggressively.
_RANGE_SIGMA = {"outdoor": 0.08, "indoor": 0.05}


def default_bilateral_params(n: int, pixels: int,
                             scene_type: str = "outdoor") -> BilateralParams:
    """Parameter table tied to the sample budget: the spatial support
    scales with the superpixel pitch sqrt(pixels / n)."""
    if scene_type not in _RANGE_SIGMA:
        raise DataError(f"unknown scene_type {scene_type!r}")
    s = math.sqrt(pixels / max(1, n))
    return BilateralParams(spatial_sigma=0.75 * s,
                           range_sigma=_RANGE_SIGMA[scene_type])


def zero_order_fill(segments: SegmentMap, samples: SampleSet) -> DepthMap:
    """Give every pixel of a segment the depth of that segment's sample.

    Requires exactly one sample per segment (the center-of-mass pattern
    guarantees this on fully valid ground truth).
    """
    n = segments.num_segments
    seg_of_sample = segments.labels[samples.y, samples.x]
    counts = np.bincount(seg_of_sample, minlength=n)
    if (counts > 1).any():
        raise DataError("zero_order_fill: segment with multiple samples")
    if (counts == 0).any():
        raise DataError("zero_order_fill: segment without a sample")
    depth_per_seg = np.empty(n)
    depth_per_seg[seg_of_sample] = samples.depth
    return DepthMap(depth_per_seg[segments.labels])


def log_transform(d: DepthMap) -> DepthMap:
    """Elementwise log(depth + 1); inverse of :func:`exp_transform`."""
    vals = np.where(d.valid, d.depth, 0.0)
    if (vals < 0).any():
        raise DataError("log_transform: negative depth")
    return DepthMap(np.log1p(vals), d.valid.copy())


def exp_transform(d: DepthMap) -> DepthMap:
    """Elementwise exp(depth) - 1; inverse of :func:`log_transform`."""
    return DepthMap(np.expm1(np.where(d.valid, d.depth, 0.0)), d.valid.copy())


def bilateral_filter(d: DepthMap, params: BilateralParams) -> DepthMap:
    """Edge-preserving smoothing with spatial and range Gaussian weights.

    output(p) = sum_q w(p,q) d(q) / sum_q w(p,q) over the clipped window,
    w = exp(-|p-q|^2 / 2 sigma_s^2) * exp(-(d(p)-d(q))^2 / 2 sigma_r^2).
    A range sigma at or below 1e-6 is treated as the identity (only q = p
    survives in the limit). Input must be fully valid.
    """
    if not d.valid.all():
        raise DataError("bilateral_filter: input must be fully valid")
    if params.range_sigma <= 1e-6:
        return DepthMap(d.depth.copy(), d.valid.copy())
    r = params.window_radius
    off = np.arange(-r, r + 1, dtype=np.float64)
    spatial = np.exp(-(off[None, :] ** 2 + off[:, None] ** 2)
                     / (2.0 * params.spatial_sigma ** 2))
    inv_two_sr2 = 1.0 / (2.0 * params.range_sigma ** 2)
    out = _kernels.bilateral(np.ascontiguousarray(d.depth), spatial, inv_two_sr2)
    return DepthMap(np.asarray(out), d.valid.copy())


def voronoi_segments(pattern: SamplePattern, width: int, height: int) -> SegmentMap:
    """Partition the image by nearest sample position.

    Used to run the zero-order pipeline from patterns that do not come
    with a superpixel map (grid/random samples, CSV input).
    """
    if len(pattern) < 1:
        raise DataError("voronoi_segments: empty pattern")
    pts = np.stack([pattern.x, pattern.y], axis=1).astype(np.float64)
    tree = cKDTree(pts)
    gx, gy = np.meshgrid(np.arange(width), np.arange(height))
    _, idx = tree.query(np.stack([gx.ravel(), gy.ravel()], axis=1))
    return SegmentMap(idx.reshape(height, width).astype(np.int32), len(pattern))


def zero_order_pipeline(segments: SegmentMap, samples: SampleSet,
                        params: BilateralParams) -> DepthMap:
    """Zero-order fill, then bilateral smoothing in the log-depth domain."""
    d0 = zero_order_fill(segments, samples)
    return exp_transform(bilateral_filter(log_transform(d0), params))


@dataclass(frozen=True)
class OursResult:
    depth: DepthMap
    samples: SampleSet
    segments: SegmentMap
    params: BilateralParams


def reconstruct_ours(image: RgbImage, gt_or_sensor, n: int,
                     params: BilateralParams = None,
                     scene_type: str = "outdoor",
                     slic_params: SlicParams = None,
                     seed: int = 0) -> OursResult:
    """Full sampling + reconstruction pipeline at budget n.

    ``gt_or_sensor`` is either a dense ground-truth DepthMap (simulated
    sensor) or a callable mapping a SamplePattern to a SampleSet (real
    sensor). Deterministic for fixed inputs and seed.
    """
    if n < 1:
        raise DataError("reconstruct_ours: n must be >= 1")
    sp = slic_params or SlicParams(target_segments=n)
    segments = slic_segment(image, sp, seed)
    pattern = com_pattern(segments)
    if callable(gt_or_sensor):
        samples = gt_or_sensor(pattern)
    else:
        samples = execute(pattern, gt_or_sensor, segments)
    p = params or default_bilateral_params(n, image.width * image.height, scene_type)
    depth = zero_order_pipeline(segments, samples, p)
    return OursResult(depth=depth, samples=samples, segments=segments, params=p)


def bilinear_baseline(samples: SampleSet, width: int, height: int) -> DepthMap:
    """Delaunay-based bivariate linear interpolation of the samples.

    Inside the convex hull: barycentric-linear per triangle; outside:
    nearest-sample extrapolation. Requires >= 3 non-collinear samples.
    """
    if len(samples) < 3:
        raise DataError("bilinear_baseline: needs >= 3 samples")
    pts = np.stack([samples.x, samples.y], axis=1).astype(np.float64)
    try:
        tri = Delaunay(pts)
    except QhullError as exc:
        raise DataError(f"bilinear_baseline: degenerate samples ({exc})") from exc
    lin = LinearNDInterpolator(tri, samples.depth)
    gx, gy = np.meshgrid(np.arange(width, dtype=np.float64),
                         np.arange(height, dtype=np.float64))
    depth = lin(gx, gy)
    hole = np.isnan(depth)
    if hole.any():
        near = NearestNDInterpolator(pts, samples.depth)
        depth[hole] = near(gx[hole], gy[hole])
    return DepthMap(np.maximum(depth, 0.0))


def _three_spread_points(mx: np.ndarray, my: np.ndarray, p1) -> list:
    """p1 plus two greedy farthest-spread members (ties: first member in
    row-major order, i.e. smallest y then smallest x)."""

    def farthest(score):
        best = int(np.nonzero(score == score.max())[0][0])
        return (int(mx[best]), int(my[best]))

    s1 = (mx - p1[0]) ** 2 + (my - p1[1]) ** 2
    p2 = farthest(s1)
    s2 = np.minimum(s1, (mx - p2[0]) ** 2 + (my - p2[1]) ** 2)
    p3 = farthest(s2)
    return [p1, p2, p3]


@dataclass(frozen=True)
class FirstOrderResult:
    depth: DepthMap
    samples: SampleSet
    segments: SegmentMap
    degenerate_segments: tuple = field(default_factory=tuple)


def first_order_from_segments(segments: SegmentMap, gt: DepthMap,
                              sampler_id: str = "com3") -> FirstOrderResult:
    """Plane fit per segment from 3 spread samples, evaluated over it.

    Segments whose 3 sample positions are collinear (or repeated, for
    segments of 1-2 pixels) fall back to the mean of the readings and are
    flagged in degenerate_segments.
    """
    labels = segments.labels
    h, w = labels.shape
    n = segments.num_segments
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    bounds = np.searchsorted(flat[order], np.arange(n + 1))
    com = com_pattern(segments)  # CoM-rule point of segment i at index i

    out = np.empty((h, w))
    degenerate = []
    seen = {}
    for i in range(n):
        members = order[bounds[i]:bounds[i + 1]]
        my = members // w
        mx = members - my * w
        pts = _three_spread_points(mx, my, (int(com.x[i]), int(com.y[i])))
        if not gt.valid[[p[1] for p in pts], [p[0] for p in pts]].all():
            raise DataError("first_order: sample position on invalid ground truth")
        depths = [float(gt.depth[p[1], p[0]]) for p in pts]
        for p, dv in zip(pts, depths):
            seen.setdefault(p, dv)
        (x1, y1), (x2, y2), (x3, y3) = pts
        area2 = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)
        region = (my, mx)
        if area2 == 0:
            out[region] = float(np.mean(depths))
            degenerate.append(i)
        else:
            a, b, c = fit_plane([(p[0], p[1], dv) for p, dv in zip(pts, depths)])
            out[region] = a * mx + b * my + c

    xs = np.array([p[0] for p in seen], dtype=np.int64)
    ys = np.array([p[1] for p in seen], dtype=np.int64)
    ds = np.array(list(seen.values()))
    samples = SampleSet(xs, ys, ds, sampler_id, budget=3 * n)
    return FirstOrderResult(DepthMap(np.maximum(out, 0.0)), samples, segments,
                            tuple(degenerate))


def first_order_baseline(image: RgbImage, gt: DepthMap, n: int,
                         slic_params: SlicParams = None,
                         seed: int = 0) -> FirstOrderResult:
    """First-order ablation: n/3 superpixels with 3 samples each."""
    if n < 3:
        raise DataError("first_order_baseline: n must be >= 3")
    sp = slic_params or SlicParams(target_segments=max(1, n // 3))
    segments = slic_segment(image, sp, seed)
    return first_order_from_segments(segments, gt)


def first_order_from_samples(image: RgbImage, samples: SampleSet,
                             slic_params: SlicParams = None,
                             seed: int = 0) -> FirstOrderResult:
    """Plane-per-segment reconstruction from pre-measured samples.

    Segments the image into len(samples)/3 superpixels and fits a plane
    per segment on the samples that fall inside it. Segments with fewer
    than 3 samples fall back to their sample mean, empty segments to the
    globally nearest sample; both are flagged as degenerate.
    """
    if len(samples) < 3:
        raise DataError("first_order_from_samples: needs >= 3 samples")
    sp = slic_params or SlicParams(target_segments=max(1, len(samples) // 3))
    segments = slic_segment(image, sp, seed)
    labels = segments.labels
    n = segments.num_segments
    h, w = labels.shape
    seg_of = labels[samples.y, samples.x]
    tree = cKDTree(np.stack([samples.x, samples.y], axis=1).astype(np.float64))

    out = np.empty((h, w))
    degenerate = []
    xs_grid = np.arange(w, dtype=np.float64)
    ys_grid = np.arange(h, dtype=np.float64)[:, None]
    for i in range(n):
        region = labels == i
        inside = np.nonzero(seg_of == i)[0]
        if inside.size >= 3:
            try:
                a, b, c = fit_plane(np.stack(
                    [samples.x[inside], samples.y[inside],
                     samples.depth[inside]], axis=1))
                out[region] = (a * xs_grid + b * ys_grid + c)[region]
                continue
            except DataError:
                pass  # collinear samples: fall through to the mean
        if inside.size >= 1:
            out[region] = float(np.mean(samples.depth[inside]))
        else:
            ry, rx = np.nonzero(region)
            com = (float(rx.mean()), float(ry.mean()))
            _, nearest = tree.query(com)
            out[region] = float(samples.depth[int(nearest)])
        degenerate.append(i)
    return FirstOrderResult(DepthMap(np.maximum(out, 0.0)), samples, segments,
                            tuple(degenerate))
