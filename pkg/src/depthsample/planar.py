"""Piece-wise planar depth model: fitting, validation and statistics.

A depth map is approximated by N per-region planes d(x, y) = a x + b y + c
over a partition, with a validity map marking pixels the model covers.
The recovered statistics are N (region count), delta (fraction of pixels
outside the model) and epsilon (RMSE over the valid set). The minimum
sample count to recover such a model from point measurements is 3 per
region (3 unknowns per plane), hence 3N overall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import DataError, DepthMap


def fit_plane(points) -> tuple:
    """Least-squares plane (a, b, c) minimizing sum (d - (ax + by + c))^2.

    ``points`` is a sequence of (x, y, depth) triples (or an (N, 3)
    array). Requires >= 3 points not all collinear in (x, y).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 3:
        raise DataError("fit_plane: need >= 3 (x, y, depth) points")
    a = np.stack([pts[:, 0], pts[:, 1], np.ones(pts.shape[0])], axis=1)
    coef, _, rank, _ = np.linalg.lstsq(a, pts[:, 2], rcond=None)
    if rank < 3:
        raise DataError("fit_plane: points are collinear in (x, y)")
    return float(coef[0]), float(coef[1]), float(coef[2])


@dataclass(frozen=True)
class ModelStats:
    n_regions: int
    delta: float
    epsilon: float


@dataclass(frozen=True)
class PlanarModel:
    """Fitted partition: per-pixel region labels (-1 where the model does
    not apply), per-region plane coefficients, validity map and stats."""

    labels: np.ndarray          # (H, W) int32, -1 = outside the model
    planes: np.ndarray          # (N, 3) float64 rows (a, b, c)
    validity: np.ndarray        # (H, W) bool
    stats: ModelStats

    def predict(self) -> DepthMap:
        """Evaluate the per-region planes over their regions."""
        h, w = self.labels.shape
        out = np.zeros((h, w))
        xs = np.arange(w, dtype=np.float64)
        ys = np.arange(h, dtype=np.float64)[:, None]
        for i, (a, b, c) in enumerate(self.planes):
            sel = self.labels == i
            out[sel] = (a * xs + b * ys + c)[sel]
        return DepthMap(np.maximum(out, 0.0), self.validity.copy())


@dataclass(frozen=True)
class FitModelParams:
    """Greedy sequential plane extraction knobs.

    The inlier tolerance is depth-proportional by default:
    tol(d) = inlier_tol * max(1, d / d_ref), reflecting that range error
    budgets grow with distance. Extraction stops when the uncovered
    fraction drops to delta_target, the region budget is exhausted, or
    max_failures consecutive hypotheses produce no acceptable region.
    """

    inlier_tol: float = 0.1
    relative: bool = True
    d_ref: float = 10.0
    min_region_px: int = None      # default: 0.2% of the image, >= 3
    delta_target: float = 0.1
    max_regions: int = 128
    hypotheses: int = 64
    refine_rounds: int = 2
    max_failures: int = 8


def _tolerance(depth: np.ndarray, params: FitModelParams) -> np.ndarray:
    if params.relative:
        return params.inlier_tol * np.maximum(1.0, depth / params.d_ref)
    return np.full_like(depth, params.inlier_tol)


def _plane_through(p1, p2, p3):
    a = np.array([[p1[0], p1[1], 1.0], [p2[0], p2[1], 1.0], [p3[0], p3[1], 1.0]])
    b = np.array([p1[2], p2[2], p3[2]])
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return None


def _lstsq_plane(xs, ys, ds):
    a = np.stack([xs, ys, np.ones(xs.size)], axis=1)
    coef, _, rank, _ = np.linalg.lstsq(a, ds, rcond=None)
    return coef if rank == 3 else None


def fit_model(d: DepthMap, params: FitModelParams = None, seed: int = 0) -> PlanarModel:
    """Extract a piece-wise planar model by greedy RANSAC region growth.

    Each round draws plane hypotheses from point triples inside local
    windows (side = 1/8 image diagonal), keeps the hypothesis with most
    unassigned inliers, refines it by least squares, and claims the
    largest 4-connected inlier component if it is big enough. Unassigned
    pixels end up with validity 0. Deterministic per seed.
    """
    params = params or FitModelParams()
    h, w = d.shape
    min_px = params.min_region_px
    if min_px is None:
        min_px = max(3, int(round(0.002 * w * h)))
    if int(d.valid.sum()) < min_px:
        raise DataError("fit_model: too few valid pixels")

    rng = np.random.default_rng(seed)
    tol = _tolerance(d.depth, params)
    win = max(4, int(round(math.hypot(w, h) / 8.0 / 2.0)))  # half side
    xs_grid = np.arange(w, dtype=np.float64)
    ys_grid = np.arange(h, dtype=np.float64)[:, None]

    labels = np.full((h, w), -1, dtype=np.int32)
    planes = []
    unassigned = d.valid.copy()
    failures = 0
    total = w * h

    def delta_now():
        return 1.0 - (labels >= 0).sum() / total

    while (len(planes) < params.max_regions and delta_now() > params.delta_target
           and failures < params.max_failures):
        pool_y, pool_x = np.nonzero(unassigned)
        if pool_x.size < max(3, min_px):
            break

        best_count, best_plane = 0, None
        for _ in range(params.hypotheses):
            a_idx = int(rng.integers(pool_x.size))
            ax, ay = int(pool_x[a_idx]), int(pool_y[a_idx])
            in_win = ((np.abs(pool_x - ax) <= win) & (np.abs(pool_y - ay) <= win))
            win_idx = np.nonzero(in_win)[0]
            if win_idx.size < 3:
                continue
            others = rng.choice(win_idx.size, size=2, replace=False)
            tri = [a_idx, int(win_idx[others[0]]), int(win_idx[others[1]])]
            if len({(int(pool_x[t]), int(pool_y[t])) for t in tri}) < 3:
                continue
            pl = _plane_through(*[(float(pool_x[t]), float(pool_y[t]),
                                   float(d.depth[pool_y[t], pool_x[t]])) for t in tri])
            if pl is None:
                continue
            pred = pl[0] * xs_grid + pl[1] * ys_grid + pl[2]
            count = int((unassigned & (np.abs(d.depth - pred) <= tol)).sum())
            if count > best_count:
                best_count, best_plane = count, pl

        if best_plane is None or best_count < min_px:
            failures += 1
            continue

        pl = best_plane
        for _ in range(params.refine_rounds):
            pred = pl[0] * xs_grid + pl[1] * ys_grid + pl[2]
            inl = unassigned & (np.abs(d.depth - pred) <= tol)
            iy, ix = np.nonzero(inl)
            refined = _lstsq_plane(ix.astype(np.float64), iy.astype(np.float64),
                                   d.depth[iy, ix])
            if refined is None:
                break
            pl = refined

        pred = pl[0] * xs_grid + pl[1] * ys_grid + pl[2]
        inl = unassigned & (np.abs(d.depth - pred) <= tol)
        comp, n_comp = ndimage.label(inl)
        if n_comp == 0:
            failures += 1
            continue
        sizes = np.bincount(comp.ravel())[1:]
        biggest = int(np.argmax(sizes)) + 1
        if sizes[biggest - 1] < min_px:
            failures += 1
            continue
        region = comp == biggest
        ry, rx = np.nonzero(region)
        final = _lstsq_plane(rx.astype(np.float64), ry.astype(np.float64),
                             d.depth[ry, rx])
        if final is None:
            final = pl
        labels[region] = len(planes)
        planes.append(tuple(float(v) for v in final))
        unassigned[region] = False
        failures = 0

    if not planes:  # degenerate input: N=1 trivial fit on all valid pixels
        iy, ix = np.nonzero(d.valid)
        coef = _lstsq_plane(ix.astype(np.float64), iy.astype(np.float64),
                            d.depth[iy, ix])
        if coef is None:
            coef = np.array([0.0, 0.0, float(np.mean(d.depth[iy, ix]))])
        labels[d.valid] = 0
        planes = [tuple(float(v) for v in coef)]

    validity = labels >= 0
    model = PlanarModel(labels, np.array(planes), validity,
                        ModelStats(len(planes), 0.0, 0.0))
    eps = rmse_v(d, model)
    stats = ModelStats(len(planes), 1.0 - validity.sum() / total, eps)
    return PlanarModel(labels, np.array(planes), validity, stats)


def rmse_v(d: DepthMap, model: PlanarModel) -> float:
    """RMSE between d and the model prediction over the validity set."""
    if model.labels.shape != d.shape:
        raise DataError("rmse_v: shape mismatch")
    v = model.validity & d.valid
    if not v.any():
        raise DataError("rmse_v: empty validity set")
    pred = model.predict()
    err = (d.depth - pred.depth)[v]
    return float(np.sqrt(np.mean(err * err)))


def min_samples(model: PlanarModel) -> int:
    """Lower bound on point samples needed to recover the model: 3 per
    region (noiseless case)."""
    return 3 * model.stats.n_regions
