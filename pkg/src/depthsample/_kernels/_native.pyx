# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pyfallback.py``.

The arithmetic (operation order, no FMA via -ffp-contract=off) matches the
numpy fallback so that both backends agree: SLIC labels bit-identically,
the bilateral filter to within transcendental rounding. Keep in sync.
"""

from libc.math cimport exp, floor, INFINITY

import numpy as np

cimport numpy as cnp

BACKEND = "native"


def slic_iterate(cnp.float64_t[:, :, ::1] lab, centers, double ratio2,
                 int radius, int iters):
    cdef int h = lab.shape[0]
    cdef int w = lab.shape[1]
    c_arr = np.array(centers, dtype=np.float64)
    cdef cnp.float64_t[:, ::1] c = c_arr
    cdef int k = c.shape[0]
    labels_arr = np.empty((h, w), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] labels = labels_arr
    dist_arr = np.empty((h, w), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] dist = dist_arr
    sums_arr = np.zeros((k, 5), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] sums = sums_arr
    cnt_arr = np.zeros(k, dtype=np.float64)
    cdef cnp.float64_t[::1] cnt = cnt_arr

    cdef int it, i, x, y, x0, x1, y0, y1, besti, lbl
    cdef double cx, cy, cl, ca, cb, dl, da, db, dx, dy, d2, best

    for it in range(iters):
        for y in range(h):
            for x in range(w):
                dist[y, x] = INFINITY
                labels[y, x] = -1
        for i in range(k):
            cx = c[i, 0]
            cy = c[i, 1]
            cl = c[i, 2]
            ca = c[i, 3]
            cb = c[i, 4]
            x0 = <int>floor(cx) - radius
            if x0 < 0:
                x0 = 0
            x1 = <int>floor(cx) + radius + 1
            if x1 > w:
                x1 = w
            y0 = <int>floor(cy) - radius
            if y0 < 0:
                y0 = 0
            y1 = <int>floor(cy) + radius + 1
            if y1 > h:
                y1 = h
            for y in range(y0, y1):
                dy = y - cy
                for x in range(x0, x1):
                    dl = lab[y, x, 0] - cl
                    da = lab[y, x, 1] - ca
                    db = lab[y, x, 2] - cb
                    dx = x - cx
                    d2 = ((dl * dl + da * da) + db * db) + ratio2 * (
                        (dx * dx) + (dy * dy))
                    if d2 < dist[y, x]:
                        dist[y, x] = d2
                        labels[y, x] = i

        for y in range(h):
            for x in range(w):
                if labels[y, x] >= 0:
                    continue
                best = INFINITY
                besti = -1
                for i in range(k):
                    dl = lab[y, x, 0] - c[i, 2]
                    da = lab[y, x, 1] - c[i, 3]
                    db = lab[y, x, 2] - c[i, 4]
                    dx = x - c[i, 0]
                    dy = y - c[i, 1]
                    d2 = ((dl * dl + da * da) + db * db) + ratio2 * (
                        (dx * dx) + (dy * dy))
                    if d2 < best:
                        best = d2
                        besti = i
                labels[y, x] = besti

        for i in range(k):
            cnt[i] = 0.0
            sums[i, 0] = 0.0
            sums[i, 1] = 0.0
            sums[i, 2] = 0.0
            sums[i, 3] = 0.0
            sums[i, 4] = 0.0
        for y in range(h):
            for x in range(w):
                lbl = labels[y, x]
                cnt[lbl] += 1.0
                sums[lbl, 0] += x
                sums[lbl, 1] += y
                sums[lbl, 2] += lab[y, x, 0]
                sums[lbl, 3] += lab[y, x, 1]
                sums[lbl, 4] += lab[y, x, 2]
        for i in range(k):
            if cnt[i] > 0:
                c[i, 0] = sums[i, 0] / cnt[i]
                c[i, 1] = sums[i, 1] / cnt[i]
                c[i, 2] = sums[i, 2] / cnt[i]
                c[i, 3] = sums[i, 3] / cnt[i]
                c[i, 4] = sums[i, 4] / cnt[i]

    return labels_arr, c_arr


def bilateral(cnp.float64_t[:, ::1] values, cnp.float64_t[:, ::1] spatial_w,
              double inv_two_sr2):
    cdef int h = values.shape[0]
    cdef int w = values.shape[1]
    cdef int r = spatial_w.shape[0] // 2
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef int x, y, dx, dy, yy, xx
    cdef double ctr, dv, wgt, num, den, src

    for y in range(h):
        for x in range(w):
            ctr = values[y, x]
            num = 0.0
            den = 0.0
            for dy in range(-r, r + 1):
                yy = y + dy
                if yy < 0 or yy >= h:
                    continue
                for dx in range(-r, r + 1):
                    xx = x + dx
                    if xx < 0 or xx >= w:
                        continue
                    src = values[yy, xx]
                    dv = src - ctr
                    wgt = spatial_w[dy + r, dx + r] * exp(-(dv * dv) * inv_two_sr2)
                    num = num + wgt * src
                    den = den + wgt
            out[y, x] = num / den
    return out_arr
