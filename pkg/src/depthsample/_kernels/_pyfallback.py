"""Pure numpy implementations of the hot pixel kernels.

These mirror the compiled kernels in ``_native.pyx`` operation for
operation (same arithmetic, same accumulation order), so both backends
produce matching results. Keep the two files in sync.
"""

import numpy as np

BACKEND = "python"


def slic_iterate(lab, centers, ratio2, radius, iters):
    """Run SLIC assignment/update rounds on a CIELAB image.

    lab: (H, W, 3) float64; centers: (K, 5) float64 rows [x, y, L, a, b];
    ratio2: squared spatial weight (m/S)^2; radius: window half-size in px.
    Returns (labels int32 (H, W), centers (K, 5)). Ties in the distance go
    to the lower cluster id (clusters are scanned in ascending order with a
    strict-less update).
    """
    h, w = lab.shape[:2]
    c = np.array(centers, dtype=np.float64)
    k = c.shape[0]
    labels = np.empty((h, w), dtype=np.int32)
    xs_full = np.arange(w, dtype=np.float64)
    ys_full = np.arange(h, dtype=np.float64)

    for _ in range(iters):
        dist = np.full((h, w), np.inf)
        labels.fill(-1)
        for i in range(k):
            cx, cy, cl, ca, cb = c[i]
            x0 = max(0, int(np.floor(cx)) - radius)
            x1 = min(w, int(np.floor(cx)) + radius + 1)
            y0 = max(0, int(np.floor(cy)) - radius)
            y1 = min(h, int(np.floor(cy)) + radius + 1)
            if x0 >= x1 or y0 >= y1:
                continue
            win = lab[y0:y1, x0:x1]
            dl = win[:, :, 0] - cl
            da = win[:, :, 1] - ca
            db = win[:, :, 2] - cb
            dx = xs_full[x0:x1] - cx
            dy = ys_full[y0:y1] - cy
            d2 = dl * dl + da * da + db * db + ratio2 * (
                dx * dx + (dy * dy)[:, None])
            better = d2 < dist[y0:y1, x0:x1]
            dist[y0:y1, x0:x1][better] = d2[better]
            labels[y0:y1, x0:x1][better] = i

        # Pixels outside every search window: nearest center, all-k scan.
        if (labels < 0).any():
            uy, ux = np.nonzero(labels < 0)
            for py, px in zip(uy, ux):
                best = np.inf
                besti = -1
                for i in range(k):
                    dl = lab[py, px, 0] - c[i, 2]
                    da = lab[py, px, 1] - c[i, 3]
                    db = lab[py, px, 2] - c[i, 4]
                    dx = px - c[i, 0]
                    dy = py - c[i, 1]
                    d2 = dl * dl + da * da + db * db + ratio2 * (
                        dx * dx + dy * dy)
                    if d2 < best:
                        best = d2
                        besti = i
                labels[py, px] = besti

        flat = labels.ravel()
        cnt = np.bincount(flat, minlength=k).astype(np.float64)
        sx = np.bincount(flat, weights=np.broadcast_to(
            xs_full, (h, w)).ravel(), minlength=k)
        sy = np.bincount(flat, weights=np.broadcast_to(
            ys_full[:, None], (h, w)).ravel(), minlength=k)
        sl = np.bincount(flat, weights=lab[:, :, 0].ravel(), minlength=k)
        sa = np.bincount(flat, weights=lab[:, :, 1].ravel(), minlength=k)
        sb = np.bincount(flat, weights=lab[:, :, 2].ravel(), minlength=k)
        nz = cnt > 0
        c[nz, 0] = sx[nz] / cnt[nz]
        c[nz, 1] = sy[nz] / cnt[nz]
        c[nz, 2] = sl[nz] / cnt[nz]
        c[nz, 3] = sa[nz] / cnt[nz]
        c[nz, 4] = sb[nz] / cnt[nz]

    return labels, c


def bilateral(values, spatial_w, inv_two_sr2):
    """Windowed bilateral filter on a (H, W) float64 image.

    spatial_w is the precomputed (2r+1, 2r+1) spatial Gaussian; the range
    weight is exp(-(dv^2) * inv_two_sr2). The window is clipped at the
    borders (no padding): only in-bounds neighbors contribute.
    """
    h, w = values.shape
    r = spatial_w.shape[0] // 2
    num = np.zeros((h, w))
    den = np.zeros((h, w))
    for dy in range(-r, r + 1):
        y0 = max(0, -dy)
        y1 = h - max(0, dy)
        if y0 >= y1:
            continue
        for dx in range(-r, r + 1):
            x0 = max(0, -dx)
            x1 = w - max(0, dx)
            if x0 >= x1:
                continue
            src = values[y0 + dy:y1 + dy, x0 + dx:x1 + dx]
            ctr = values[y0:y1, x0:x1]
            dv = src - ctr
            wgt = spatial_w[dy + r, dx + r] * np.exp(-(dv * dv) * inv_two_sr2)
            num[y0:y1, x0:x1] += wgt * src
            den[y0:y1, x0:x1] += wgt
    return num / den
