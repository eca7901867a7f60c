"""Synthetic piecewise-planar scenes with colored regions and thin objects.

Desk-scale stand-ins for driving/indoor datasets: depth is built from
per-region planes whose boundaries coincide with color boundaries, plus
optional thin foreground objects (with an obstacle mask covering them).
Camouflaged objects keep the background color, so they are invisible to
any RGB-guided stage by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core import DataError, DepthMap, EvalMask, RgbImage


@dataclass(frozen=True)
class RegionSpec:
    rect: tuple   # (x0, y0, w, h)
    plane: tuple  # (a, b, c): depth = a x + b y + c
    color: tuple  # (r, g, b)


@dataclass(frozen=True)
class ObjectSpec:
    rect: tuple
    depth: float
    color: tuple = None  # None: camouflaged (background RGB kept)


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    regions: tuple
    objects: tuple = ()
    noise_sigma: float = 0.0
    texture_amplitude: float = 0.0


def _rect_slices(rect, width, height, what):
    x0, y0, w, h = rect
    if w < 1 or h < 1 or x0 < 0 or y0 < 0 or x0 + w > width or y0 + h > height:
        raise DataError(f"{what}: rect {rect} out of bounds")
    return slice(y0, y0 + h), slice(x0, x0 + w)


def generate_synthetic_scene(spec: SceneSpec, seed: int = 0):
    """Render (RgbImage, DepthMap, EvalMask, region label map).

    Regions must partition the image; objects must not overlap each
    other. The returned label map holds the true region index per pixel
    (objects get indices after the regions), for tests that need the
    ground-truth partition.
    """
    w, h = spec.width, spec.height
    depth = np.zeros((h, w))
    rgb = np.zeros((h, w, 3), dtype=np.float64)
    region_labels = np.full((h, w), -1, dtype=np.int32)
    cover = np.zeros((h, w), dtype=np.int32)
    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)[:, None]

    for i, reg in enumerate(spec.regions):
        sy, sx = _rect_slices(reg.rect, w, h, "region")
        a, b, c = reg.plane
        depth[sy, sx] = (a * xs + b * ys + c)[sy, sx]
        rgb[sy, sx] = reg.color
        region_labels[sy, sx] = i
        cover[sy, sx] += 1
    if (cover != 1).any():
        raise DataError("scene: regions must partition the image")

    mask = np.zeros((h, w), dtype=bool)
    obj_cover = np.zeros((h, w), dtype=np.int32)
    for j, obj in enumerate(spec.objects):
        sy, sx = _rect_slices(obj.rect, w, h, "object")
        if obj.depth <= 0:
            raise DataError("scene: object depth must be > 0")
        depth[sy, sx] = obj.depth
        if obj.color is not None:
            rgb[sy, sx] = obj.color
        region_labels[sy, sx] = len(spec.regions) + j
        mask[sy, sx] = True
        obj_cover[sy, sx] += 1
    if (obj_cover > 1).any():
        raise DataError("scene: overlapping objects")

    rng = np.random.default_rng(seed)
    if spec.texture_amplitude > 0:
        noise = rng.uniform(-spec.texture_amplitude, spec.texture_amplitude,
                            size=(h, w))
        rgb = rgb + ndimage.uniform_filter(noise, size=3)[..., None]
    if spec.noise_sigma > 0:
        depth = depth + rng.normal(0.0, spec.noise_sigma, size=(h, w))

    depth = np.maximum(depth, 0.01)
    image = RgbImage(np.clip(rgb, 0, 255).astype(np.uint8))
    return image, DepthMap(depth), EvalMask(mask), region_labels


def _grid_regions(width, height, rows, cols, planes, colors):
    xs = np.linspace(0, width, cols + 1).astype(int)
    ys = np.linspace(0, height, rows + 1).astype(int)
    regions = []
    k = 0
    for r in range(rows):
        for c in range(cols):
            rect = (int(xs[c]), int(ys[r]), int(xs[c + 1] - xs[c]),
                    int(ys[r + 1] - ys[r]))
            regions.append(RegionSpec(rect, planes[k], colors[k]))
            k += 1
    return tuple(regions)


_PALETTE = (
    (196, 92, 60), (84, 144, 196), (120, 180, 96), (180, 160, 70),
    (140, 100, 170), (90, 170, 160), (200, 140, 160), (110, 120, 90),
    (170, 110, 60), (70, 100, 150), (150, 190, 180), (210, 190, 120),
)

_OBJECT_COLORS = ((230, 40, 40), (250, 210, 40), (40, 220, 70), (240, 110, 200))


def _well_separated_offsets(rng, count, lo, hi, min_gap):
    """count values in [lo, hi], pairwise at least min_gap apart, in
    shuffled order. Built from sorted uniforms plus mandatory gaps, so it
    always terminates."""
    span = (hi - lo) - (count - 1) * min_gap
    if span < 0:
        raise DataError("offsets: interval too small for requested spacing")
    base = np.sort(rng.uniform(0.0, span, size=count))
    vals = lo + base + min_gap * np.arange(count)
    return [float(v) for v in rng.permutation(vals)]


def plane_grid_spec(rows: int, cols: int, width: int = 160, height: int = 120,
                    seed: int = 0, noise_sigma: float = 0.0,
                    slope: float = 0.0015, min_gap: float = 2.0) -> SceneSpec:
    """rows x cols planar patches with distinct colors and offsets spaced
    by at least min_gap meters. The default slope keeps the planes'
    pointwise separation well above typical inlier tolerances, so a model
    fitter can recover the partition exactly."""
    rng = np.random.default_rng(seed)
    k = rows * cols
    offs = _well_separated_offsets(rng, k, 2.0, 2.0 + max(4.0, 2.2 * min_gap * k), min_gap)
    planes = []
    for c in offs:
        a = float(rng.uniform(-slope, slope))
        b = float(rng.uniform(-slope, slope))
        c_adj = c - min(0.0, a * width) - min(0.0, b * height)  # depth > 0
        planes.append((a, b, c_adj))
    colors = [_PALETTE[i % len(_PALETTE)] for i in range(k)]
    return SceneSpec(width, height, _grid_regions(width, height, rows, cols,
                                                  planes, colors),
                     noise_sigma=noise_sigma)


def _place_objects(rng, width, height, count, w_range, h_range, depth_range,
                   camouflage=False, y_max_frac=1.0):
    objects = []
    occupied = np.zeros((height, width), dtype=bool)
    attempts = 0
    y_lim = int(height * y_max_frac)
    while len(objects) < count and attempts < 200:
        attempts += 1
        ow = int(rng.integers(w_range[0], w_range[1] + 1))
        oh = int(rng.integers(h_range[0], h_range[1] + 1))
        x0 = int(rng.integers(2, max(3, width - ow - 2)))
        y0 = int(rng.integers(2, max(3, min(y_lim, height) - oh - 2)))
        pad = occupied[max(0, y0 - 4):y0 + oh + 4, max(0, x0 - 4):x0 + ow + 4]
        if pad.any():
            continue
        occupied[y0:y0 + oh, x0:x0 + ow] = True
        color = None if camouflage else _OBJECT_COLORS[len(objects) % len(_OBJECT_COLORS)]
        objects.append(ObjectSpec((x0, y0, ow, oh),
                                  float(rng.uniform(*depth_range)), color))
    return tuple(objects)


def indoor_scene_spec(seed: int, width: int = 160, height: int = 120) -> SceneSpec:
    """Room-like scene: sloped planar patches plus a few small objects."""
    rng = np.random.default_rng(seed)
    rows, cols = 2, 3
    k = rows * cols
    offs = _well_separated_offsets(rng, k, 2.5, 7.5, 0.6)
    off0 = int(rng.integers(0, len(_PALETTE)))
    planes = []
    for c in offs:
        a = float(rng.uniform(-0.015, 0.015))
        b = float(rng.uniform(0.012, 0.03))   # floor/wall style vertical slope
        c_adj = c - min(0.0, a * width) - min(0.0, b * height)
        planes.append((a, b, c_adj))
    colors = [_PALETTE[(i + off0) % len(_PALETTE)] for i in range(k)]
    objects = _place_objects(rng, width, height, count=3, w_range=(3, 5),
                             h_range=(10, 22), depth_range=(0.8, 1.6))
    return SceneSpec(width, height,
                     _grid_regions(width, height, rows, cols, planes, colors),
                     objects, texture_amplitude=2.0)


def obstacle_scene_spec(seed: int, width: int = 160, height: int = 120) -> SceneSpec:
    """Road-like scene: ground plane receding in depth, far backdrop, and
    thin near obstacles covered by the evaluation mask."""
    rng = np.random.default_rng(seed)
    horizon = int(height * rng.uniform(0.35, 0.5))
    far = float(rng.uniform(25.0, 35.0))
    near_bottom = float(rng.uniform(3.0, 6.0))
    g = (far - near_bottom) / (height - horizon)  # ground recedes to far
    regions = (
        RegionSpec((0, 0, width, horizon), (0.0, 0.0, far), (150, 160, 175)),
        RegionSpec((0, horizon, width, height - horizon),
                   (0.0, -g, far + g * horizon), (105, 100, 95)),
    )
    objects = _place_objects(rng, width, height, count=3, w_range=(4, 6),
                             h_range=(18, 32), depth_range=(2.0, 5.0),
                             y_max_frac=0.6)
    return SceneSpec(width, height, regions, objects, texture_amplitude=2.0)


def camouflage_scene_spec(seed: int, width: int = 160, height: int = 120) -> SceneSpec:
    """Uniform-color scene with one object visible only in depth."""
    rng = np.random.default_rng(seed)
    color = (128, 128, 128)
    region = RegionSpec((0, 0, width, height),
                        (0.0, float(rng.uniform(0.01, 0.03)), 8.0), color)
    objects = _place_objects(rng, width, height, count=1, w_range=(4, 6),
                             h_range=(16, 28), depth_range=(3.0, 4.0),
                             camouflage=True)
    return SceneSpec(width, height, (region,), objects)
