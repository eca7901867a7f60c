"""Sector-star resolution chart and MTF measurement.

The chart is a Siemens-star layout with binary depth (near/far sectors)
and two procedural RGB textures standing in for foreground/background
scene content. Resolution of a sampling + reconstruction chain is read
off as the modulation of the fundamental angular frequency along circles
of decreasing radius (increasing spatial frequency), referenced to the
chart's own modulation so that rasterization of the star cancels out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import DataError, DepthMap, RgbImage


@dataclass(frozen=True)
class StarChart:
    rgb: RgbImage
    depth: DepthMap
    sectors: int
    center: tuple          # (cx, cy) in pixels
    radius: float          # star radius in pixels
    near_m: float
    far_m: float


def _texture(shape, base_rgb, rng, amplitude=12.0):
    """Base color plus smoothed noise, kept well inside 0..255."""
    noise = rng.uniform(-amplitude, amplitude, size=shape)
    noise = ndimage.uniform_filter(noise, size=3)
    tex = np.asarray(base_rgb, dtype=np.float64) + noise[..., None]
    return np.clip(tex, 0, 255).astype(np.uint8)


def generate_chart(size: int = 1000, sectors: int = 72, near_m: float = 5.0,
                   far_m: float = 20.0, texture_seed: int = 0) -> StarChart:
    """Build the star chart: binary depth with sector parity, textured RGB.

    The foreground/background textures differ by well over 40/255 in mean
    luma, so color-guided samplers can see the star. Deterministic per
    texture_seed.
    """
    if sectors < 8 or sectors % 2 != 0:
        raise DataError("generate_chart: sectors must be even and >= 8")
    if size < 8 * sectors:
        raise DataError("generate_chart: size too small for sector count")
    if not (0 <= near_m < far_m):
        raise DataError("generate_chart: need 0 <= near_m < far_m")

    cx = cy = (size - 1) / 2.0
    radius = 0.48 * size
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    theta = np.mod(np.arctan2(ys - cy, xs - cx), 2.0 * math.pi)
    sector_idx = np.floor(theta / (2.0 * math.pi / sectors)).astype(int) % sectors
    rr = np.hypot(xs - cx, ys - cy)
    near = (sector_idx % 2 == 0) & (rr <= radius)

    depth = np.where(near, near_m, far_m)
    rng = np.random.default_rng(texture_seed)
    background = _texture((size, size), (170, 172, 176), rng)
    foreground = _texture((size, size), (64, 70, 78), rng)
    pixels = np.where(near[..., None], foreground, background)
    return StarChart(RgbImage(pixels), DepthMap(depth), sectors,
                     (cx, cy), radius, near_m, far_m)


def _bilinear_circle(arr: np.ndarray, cx: float, cy: float, r: float,
                     thetas: np.ndarray) -> np.ndarray:
    xs = cx + r * np.cos(thetas)
    ys = cy + r * np.sin(thetas)
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    h, w = arr.shape
    if x0.min() < 0 or y0.min() < 0 or x0.max() + 1 >= w or y0.max() + 1 >= h:
        raise DataError("mtf: sampling circle leaves the image")
    fx = xs - x0
    fy = ys - y0
    return ((1 - fx) * (1 - fy) * arr[y0, x0]
            + fx * (1 - fy) * arr[y0, x0 + 1]
            + (1 - fx) * fy * arr[y0 + 1, x0]
            + fx * fy * arr[y0 + 1, x0 + 1])


def _fundamental_amplitude(values: np.ndarray, cycles: int,
                           thetas: np.ndarray) -> float:
    coeff = np.sum(values * np.exp(-1j * cycles * thetas))
    return 2.0 * abs(coeff) / values.size


def default_radii(chart: StarChart, count: int = 16) -> np.ndarray:
    """Log-spaced measurement radii spanning [0.055, 0.95] of the star
    (for the default chart that covers roughly 0.013 to 0.22 cycles/px)."""
    return np.geomspace(0.055 * chart.radius, 0.95 * chart.radius, count)


def compute_mtf(gt: StarChart, recon: DepthMap, radii=None) -> list:
    """MTF curve of a reconstruction of the chart's depth.

    For each radius, both the reconstruction and the chart's own depth
    raster are read along the circle (bilinear, 16 samples per sector)
    and the amplitude of the fundamental angular frequency is fitted.
    The per-radius ratio cancels the star's rasterization; the curve is
    then normalized to 1 at the largest radius (lowest frequency).
    Returns (frequency [cycles/pixel], mtf) pairs sorted by frequency.
    """
    if recon.shape != gt.depth.shape:
        raise DataError("compute_mtf: reconstruction size differs from chart")
    radii = default_radii(gt) if radii is None else np.asarray(radii, dtype=np.float64)
    if radii.size == 0:
        raise DataError("compute_mtf: no radii")
    if radii.max() > gt.radius:
        raise DataError("compute_mtf: radius exceeds the chart")

    cx, cy = gt.center
    cycles = gt.sectors // 2
    k = 16 * gt.sectors
    thetas = (2.0 * math.pi / k) * np.arange(k)

    mods = []
    for r in radii:
        a_gt = _fundamental_amplitude(
            _bilinear_circle(gt.depth.depth, cx, cy, r, thetas), cycles, thetas)
        a_rec = _fundamental_amplitude(
            _bilinear_circle(recon.depth, cx, cy, r, thetas), cycles, thetas)
        if a_gt <= 0:
            raise DataError("compute_mtf: chart has no modulation at a radius")
        mods.append(a_rec / a_gt)

    mods = np.asarray(mods)
    base = mods[int(np.argmax(radii))]
    if base > 1e-9:
        mods = mods / base
    # one cycle = one near/far sector pair, so sectors/2 cycles per turn
    freqs = (gt.sectors / 2.0) / (2.0 * math.pi * radii)
    order = np.argsort(freqs)
    return [(float(freqs[i]), float(mods[i])) for i in order]
