"""SLIC superpixel over-segmentation of an RGB image.

k-means-like clustering in combined CIELAB + position space, followed by
a connectivity-enforcement pass that splits disconnected labels and
merges undersized fragments into their dominant 4-neighbor. Fully
deterministic: ties in the cluster distance go to the lower cluster id.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .colorspace import srgb_to_lab
from .core import DataError, RgbImage, SegmentMap


@dataclass(frozen=True)
class SlicParams:
    """Segmentation knobs.

    compactness trades color adherence against spatial regularity (high
    values give regular, grid-like superpixels). Fragments smaller than
    min_segment_fraction * (pixels / target_segments) are merged away
    during connectivity enforcement.
    """

    target_segments: int
    compactness: float = 20.0
    max_iterations: int = 10
    min_segment_fraction: float = 0.25

    def __post_init__(self):
        if self.target_segments < 1:
            raise DataError("SlicParams: target_segments must be >= 1")
        if self.compactness <= 0:
            raise DataError("SlicParams: compactness must be > 0")
        if self.max_iterations < 1:
            raise DataError("SlicParams: max_iterations must be >= 1")
        if not (0 < self.min_segment_fraction < 1):
            raise DataError("SlicParams: min_segment_fraction in (0, 1)")


def _seed_grid(width: int, height: int, n: int):
    """Choose a rows x cols seeding grid for n clusters.

    Prefers grids whose count stays within +-20% of n; among those, the
    one closest to the image aspect, then closest to n, then fewest rows.
    """
    target_aspect = width / height
    best = None
    for rows in range(1, min(height, n) + 1):
        for cols in {max(1, min(width, n // rows)),
                     max(1, min(width, -(-n // rows)))}:
            p = rows * cols
            in_band = 4 * n <= 5 * p and 5 * p <= 6 * n
            key = (
                not in_band,
                abs(cols / rows - target_aspect) if in_band else abs(p - n),
                abs(p - n) if in_band else abs(cols / rows - target_aspect),
                rows,
            )
            if best is None or key < best[0]:
                best = (key, rows, cols)
    _, rows, cols = best
    xs = np.minimum(width - 1, ((np.arange(cols) + 0.5) * width / cols).astype(np.int64))
    ys = np.minimum(height - 1, ((np.arange(rows) + 0.5) * height / rows).astype(np.int64))
    return rows, cols, xs, ys


def _flat_components(labels: np.ndarray):
    """4-connected components of equal-label regions (row-major ids)."""
    h, w = labels.shape
    idx = np.arange(h * w).reshape(h, w)
    pairs = []
    same_h = labels[:, :-1] == labels[:, 1:]
    pairs.append((idx[:, :-1][same_h], idx[:, 1:][same_h]))
    same_v = labels[:-1, :] == labels[1:, :]
    pairs.append((idx[:-1, :][same_v], idx[1:, :][same_v]))
    rows = np.concatenate([p[0] for p in pairs])
    cols = np.concatenate([p[1] for p in pairs])
    graph = coo_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)),
                       shape=(h * w, h * w))
    n_comp, comp = connected_components(graph, directed=False)
    return n_comp, comp.reshape(h, w).astype(np.int64)


def _boundary_counts(comp: np.ndarray):
    """Shared-boundary edge counts between adjacent components."""
    a = np.concatenate([comp[:, :-1].ravel(), comp[:-1, :].ravel()])
    b = np.concatenate([comp[:, 1:].ravel(), comp[1:, :].ravel()])
    diff = a != b
    a, b = a[diff], b[diff]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    pairs, counts = np.unique(np.stack([lo, hi], axis=1), axis=0, return_counts=True)
    return pairs, counts


def _enforce_connectivity(labels: np.ndarray, min_size: int) -> np.ndarray:
    """Split disconnected labels, then absorb fragments below min_size.

    Each undersized component is merged into the adjacent component it
    shares the longest boundary with (ties: lower component id), smallest
    fragments first. Returns a label map renumbered in row-major order of
    first occurrence.
    """
    n_comp, comp = _flat_components(labels)
    sizes = np.bincount(comp.ravel(), minlength=n_comp).astype(np.int64)

    adj = [dict() for _ in range(n_comp)]
    pairs, counts = _boundary_counts(comp)
    for (a, b), c in zip(pairs, counts):
        adj[a][b] = adj[a].get(b, 0) + int(c)
        adj[b][a] = adj[b].get(a, 0) + int(c)

    parent = np.arange(n_comp)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    heap = [(int(sizes[i]), i) for i in range(n_comp) if sizes[i] < min_size]
    heapq.heapify(heap)
    while heap:
        size, i = heapq.heappop(heap)
        if find(i) != i or sizes[i] != size or sizes[i] >= min_size:
            continue  # stale entry
        if not adj[i]:
            continue  # component covers the whole image
        best_cnt, best_j = 0, -1
        for j, c in adj[i].items():
            if c > best_cnt or (c == best_cnt and j < best_j):
                best_cnt, best_j = c, j
        j = best_j
        # merge i into j
        parent[i] = j
        sizes[j] += sizes[i]
        for nb, c in adj[i].items():
            if nb == j:
                continue
            adj[j][nb] = adj[j].get(nb, 0) + c
            del adj[nb][i]
            adj[nb][j] = adj[nb].get(j, 0) + c
        del adj[j][i]
        adj[i] = {}
        if sizes[j] < min_size:
            heapq.heappush(heap, (int(sizes[j]), j))

    roots = np.array([find(i) for i in range(n_comp)])
    merged = roots[comp]

    order = np.unique(merged.ravel(), return_index=True)[1]
    remap = np.full(n_comp, -1, dtype=np.int64)
    for new_id, flat_pos in enumerate(np.sort(order)):
        remap[merged.ravel()[flat_pos]] = new_id
    return remap[merged]


def slic_segment(image: RgbImage, params: SlicParams, seed: int = 0) -> SegmentMap:
    """Segment an RGB image into roughly target_segments superpixels.

    The algorithm is deterministic; ``seed`` is accepted for interface
    symmetry with the samplers and has no effect. Raises if
    target_segments exceeds the pixel count.
    """
    del seed
    h, w = image.height, image.width
    n = params.target_segments
    if n > w * h:
        raise DataError(f"slic_segment: target_segments {n} > pixel count {w * h}")

    lab = np.ascontiguousarray(srgb_to_lab(image.pixels))
    rows, cols, xs, ys = _seed_grid(w, h, n)
    cx, cy = np.meshgrid(xs, ys)
    centers = np.empty((rows * cols, 5))
    centers[:, 0] = cx.ravel()
    centers[:, 1] = cy.ravel()
    centers[:, 2:] = lab[cy.ravel(), cx.ravel()]

    s = math.sqrt(w * h / n)
    ratio2 = (params.compactness / s) ** 2
    radius = int(math.ceil(2.0 * max(w / cols, h / rows, s)))

    labels, _ = _kernels.slic_iterate(lab, centers, ratio2, radius,
                                      params.max_iterations)

    min_size = int(math.ceil(params.min_segment_fraction * (w * h / n)))
    final = _enforce_connectivity(np.asarray(labels), max(1, min_size))
    return SegmentMap(final.astype(np.int32), int(final.max()) + 1)
