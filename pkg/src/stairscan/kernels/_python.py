"""Pure-numpy implementations of the point-reduction kernels.

These mirror ``stairscan.kernels._native`` exactly — output ordering,
tie-breaking, and floating-point accumulation order included — so either
backend can serve as the reference for the other. Per-cell sums accumulate in
input order in both (np.bincount here, a sequential loop there).
"""
import numpy as np


def _cell_indices(coords, cell):
    return np.floor(coords / cell).astype(np.int64)


def voxel_centroids(xyz, leaf):
    """Centroid of the points in each occupied voxel.

    Cells are half-open along every axis (a coordinate exactly on a boundary
    belongs to the higher cell). Output rows are ordered by voxel index
    (ix, iy, iz) lexicographically.
    """
    n = xyz.shape[0]
    if n == 0:
        return np.empty((0, 3), dtype=np.float64)
    idx = _cell_indices(xyz, leaf)
    order = np.lexsort((idx[:, 2], idx[:, 1], idx[:, 0]))
    s = idx[order]
    new = np.empty(n, dtype=bool)
    new[0] = True
    new[1:] = np.any(s[1:] != s[:-1], axis=1)
    gid = np.empty(n, dtype=np.int64)
    gid[order] = np.cumsum(new) - 1
    m = int(new.sum())
    counts = np.bincount(gid, minlength=m).astype(np.float64)
    out = np.empty((m, 3), dtype=np.float64)
    for k in range(3):
        out[:, k] = np.bincount(gid, weights=xyz[:, k], minlength=m)
    out /= counts[:, None]
    return out


def top_surface_indices(xyz, cell):
    """Input index of the highest point in each occupied xy cell.

    Ties on z keep the earlier input index. Output is ordered by cell index
    (ix, iy).
    """
    n = xyz.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    ix = _cell_indices(xyz[:, 0], cell)
    iy = _cell_indices(xyz[:, 1], cell)
    order = np.lexsort((np.arange(n), -xyz[:, 2], iy, ix))
    sx = ix[order]
    sy = iy[order]
    first = np.empty(n, dtype=bool)
    first[0] = True
    first[1:] = (sx[1:] != sx[:-1]) | (sy[1:] != sy[:-1])
    return order[first]


def polar_min_range(xyz, z0, z_res, theta_bins, rho_min):
    """Nearest return per (z-row, azimuth-bin) cell.

    Returns (indices, rows, cols, rho), one entry per occupied cell, sorted
    by (row, col). Points with cylindrical range below rho_min are discarded;
    range ties keep the earlier input index.
    """
    n = xyz.shape[0]
    if n == 0:
        return (np.empty(0, np.int64), np.empty(0, np.int64),
                np.empty(0, np.int64), np.empty(0, np.float64))
    rho_all = np.hypot(xyz[:, 0], xyz[:, 1])
    kept = np.flatnonzero(rho_all >= rho_min)
    if kept.size == 0:
        return (np.empty(0, np.int64), np.empty(0, np.int64),
                np.empty(0, np.int64), np.empty(0, np.float64))
    x = xyz[kept, 0]
    y = xyz[kept, 1]
    z = xyz[kept, 2]
    rho = rho_all[kept]
    rows = np.floor((z - z0) / z_res).astype(np.int64)
    bin_w = 2.0 * np.pi / theta_bins
    cols = np.floor((np.arctan2(y, x) + np.pi) / bin_w).astype(np.int64)
    cols[cols >= theta_bins] -= theta_bins
    m = kept.size
    order = np.lexsort((np.arange(m), rho, cols, rows))
    sr = rows[order]
    sc = cols[order]
    first = np.empty(m, dtype=bool)
    first[0] = True
    first[1:] = (sr[1:] != sr[:-1]) | (sc[1:] != sc[:-1])
    sel = order[first]
    return kept[sel], rows[sel], cols[sel], rho[sel]


def iepf_split(x, y, d_p, n_min):
    """Split a point chain into near-straight runs (iterative end-point fit).

    Recursively splits at the point farthest from the chord between the range
    endpoints while that distance exceeds d_p; the split point is shared by
    both halves. Ranges shorter than n_min points are discarded.

    Returns an (K, 2) int64 array of inclusive (first, last) ranges in
    left-to-right order.
    """
    n = x.shape[0]
    out = []
    stack = [(0, n - 1)] if n else []
    while stack:
        first, last = stack.pop()
        if last - first + 1 < n_min:
            continue
        x0 = x[first]
        y0 = y[first]
        dx = x[last] - x0
        dy = y[last] - y0
        xs = x[first:last + 1] - x0
        ys = y[first:last + 1] - y0
        length = np.sqrt(dx * dx + dy * dy)
        if length < 1e-12:
            dist = np.sqrt(xs * xs + ys * ys)
        else:
            dist = np.abs(dx * ys - dy * xs) / length
        j = int(np.argmax(dist))
        if dist[j] > d_p:
            stack.append((first + j, last))
            stack.append((first, first + j))
        else:
            out.append((first, last))
    if not out:
        return np.empty((0, 2), dtype=np.int64)
    return np.asarray(out, dtype=np.int64)
