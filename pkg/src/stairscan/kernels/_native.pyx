# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of stairscan.kernels._python.

Contracts are identical down to tie-breaking, output ordering and float
accumulation order; the test suite asserts cross-backend equality. Cell keys
are bit-packed (bias + shift), which bounds the supported grid index range —
far beyond any real scene, and the packing raises cleanly when exceeded.
"""
import numpy as np

cimport numpy as cnp
from cython.operator cimport dereference as deref
from libc.math cimport atan2, fabs, floor, hypot, sqrt, M_PI
from libcpp.algorithm cimport sort
from libcpp.pair cimport pair
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector

cnp.import_array()

ctypedef long long i64

cdef i64 BIAS21 = 1048576        # 1 << 20
cdef i64 BIAS31 = 1073741824     # 1 << 30


cdef inline i64 _cell21(double coord, double cell) except? -9999999999:
    cdef i64 k = <i64>floor(coord / cell)
    if k < -BIAS21 or k >= BIAS21:
        raise ValueError("coordinate out of supported voxel index range")
    return k


cdef inline i64 _cell31(double coord, double cell) except? -9999999999:
    cdef i64 k = <i64>floor(coord / cell)
    if k < -BIAS31 or k >= BIAS31:
        raise ValueError("coordinate out of supported cell index range")
    return k


def voxel_centroids(const double[:, ::1] xyz, double leaf):
    cdef Py_ssize_t n = xyz.shape[0]
    if n == 0:
        return np.empty((0, 3), dtype=np.float64)
    cdef unordered_map[i64, i64] slots
    cdef unordered_map[i64, i64].iterator it
    cdef vector[double] sx, sy, sz
    cdef vector[i64] cnt
    cdef vector[pair[i64, i64]] order
    cdef Py_ssize_t i
    cdef i64 kx, ky, kz, key, slot
    cdef double x, y, z
    for i in range(n):
        x = xyz[i, 0]
        y = xyz[i, 1]
        z = xyz[i, 2]
        kx = _cell21(x, leaf)
        ky = _cell21(y, leaf)
        kz = _cell21(z, leaf)
        key = ((kx + BIAS21) << 42) | ((ky + BIAS21) << 21) | (kz + BIAS21)
        it = slots.find(key)
        if it == slots.end():
            slot = <i64>sx.size()
            slots[key] = slot
            order.push_back(pair[i64, i64](key, slot))
            sx.push_back(x)
            sy.push_back(y)
            sz.push_back(z)
            cnt.push_back(1)
        else:
            slot = deref(it).second
            sx[slot] += x
            sy[slot] += y
            sz[slot] += z
            cnt[slot] += 1
    sort(order.begin(), order.end())
    cdef Py_ssize_t m = <Py_ssize_t>order.size()
    out_np = np.empty((m, 3), dtype=np.float64)
    cdef double[:, ::1] out = out_np
    cdef Py_ssize_t j
    for j in range(m):
        slot = order[j].second
        out[j, 0] = sx[slot] / <double>cnt[slot]
        out[j, 1] = sy[slot] / <double>cnt[slot]
        out[j, 2] = sz[slot] / <double>cnt[slot]
    return out_np


def top_surface_indices(const double[:, ::1] xyz, double cell):
    cdef Py_ssize_t n = xyz.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    cdef unordered_map[i64, i64] slots
    cdef unordered_map[i64, i64].iterator it
    cdef vector[double] zbest
    cdef vector[i64] ibest
    cdef vector[pair[i64, i64]] order
    cdef Py_ssize_t i
    cdef i64 kx, ky, key, slot
    cdef double z
    for i in range(n):
        kx = _cell31(xyz[i, 0], cell)
        ky = _cell31(xyz[i, 1], cell)
        key = ((kx + BIAS31) << 31) | (ky + BIAS31)
        z = xyz[i, 2]
        it = slots.find(key)
        if it == slots.end():
            slot = <i64>zbest.size()
            slots[key] = slot
            order.push_back(pair[i64, i64](key, slot))
            zbest.push_back(z)
            ibest.push_back(i)
        else:
            slot = deref(it).second
            if z > zbest[slot]:
                zbest[slot] = z
                ibest[slot] = i
    sort(order.begin(), order.end())
    cdef Py_ssize_t m = <Py_ssize_t>order.size()
    out_np = np.empty(m, dtype=np.int64)
    cdef i64[::1] out = out_np
    cdef Py_ssize_t j
    for j in range(m):
        out[j] = ibest[order[j].second]
    return out_np


def polar_min_range(const double[:, ::1] xyz, double z0, double z_res,
                    int theta_bins, double rho_min):
    cdef Py_ssize_t n = xyz.shape[0]
    empty = (np.empty(0, np.int64), np.empty(0, np.int64),
             np.empty(0, np.int64), np.empty(0, np.float64))
    if n == 0:
        return empty
    if theta_bins > BIAS21:
        raise ValueError("theta_bins out of supported range")
    cdef unordered_map[i64, i64] slots
    cdef unordered_map[i64, i64].iterator it
    cdef vector[double] rbest
    cdef vector[i64] ibest, rowv, colv
    cdef vector[pair[i64, i64]] order
    cdef double bin_w = 2.0 * M_PI / theta_bins
    cdef Py_ssize_t i
    cdef i64 row, col, key, slot
    cdef double x, y, z, rho
    for i in range(n):
        x = xyz[i, 0]
        y = xyz[i, 1]
        rho = hypot(x, y)
        if rho < rho_min:
            continue
        z = xyz[i, 2]
        row = <i64>floor((z - z0) / z_res)
        if row < -BIAS31 or row >= BIAS31:
            raise ValueError("row index out of supported range")
        col = <i64>floor((atan2(y, x) + M_PI) / bin_w)
        if col >= theta_bins:
            col -= theta_bins
        key = ((row + BIAS31) << 20) | col
        it = slots.find(key)
        if it == slots.end():
            slot = <i64>rbest.size()
            slots[key] = slot
            order.push_back(pair[i64, i64](key, slot))
            rbest.push_back(rho)
            ibest.push_back(i)
            rowv.push_back(row)
            colv.push_back(col)
        else:
            slot = deref(it).second
            if rho < rbest[slot]:
                rbest[slot] = rho
                ibest[slot] = i
    sort(order.begin(), order.end())
    cdef Py_ssize_t m = <Py_ssize_t>order.size()
    idx_np = np.empty(m, dtype=np.int64)
    row_np = np.empty(m, dtype=np.int64)
    col_np = np.empty(m, dtype=np.int64)
    rho_np = np.empty(m, dtype=np.float64)
    cdef i64[::1] idx_v = idx_np
    cdef i64[::1] row_v = row_np
    cdef i64[::1] col_v = col_np
    cdef double[::1] rho_v = rho_np
    cdef Py_ssize_t j
    for j in range(m):
        slot = order[j].second
        idx_v[j] = ibest[slot]
        row_v[j] = rowv[slot]
        col_v[j] = colv[slot]
        rho_v[j] = rbest[slot]
    return idx_np, row_np, col_np, rho_np


def iepf_split(const double[::1] x, const double[::1] y, double d_p, int n_min):
    cdef Py_ssize_t n = x.shape[0]
    cdef vector[pair[i64, i64]] stack
    cdef vector[i64] firsts, lasts
    cdef i64 first, last, j, k
    cdef double x0, y0, dx, dy, length, dist, best
    if n > 0:
        stack.push_back(pair[i64, i64](0, n - 1))
    while stack.size() > 0:
        first = stack.back().first
        last = stack.back().second
        stack.pop_back()
        if last - first + 1 < n_min:
            continue
        x0 = x[first]
        y0 = y[first]
        dx = x[last] - x0
        dy = y[last] - y0
        length = sqrt(dx * dx + dy * dy)
        best = -1.0
        j = first
        if length < 1e-12:
            for k in range(first, last + 1):
                dist = sqrt((x[k] - x0) * (x[k] - x0) + (y[k] - y0) * (y[k] - y0))
                if dist > best:
                    best = dist
                    j = k
        else:
            for k in range(first, last + 1):
                dist = fabs(dx * (y[k] - y0) - dy * (x[k] - x0)) / length
                if dist > best:
                    best = dist
                    j = k
        if best > d_p:
            stack.push_back(pair[i64, i64](j, last))
            stack.push_back(pair[i64, i64](first, j))
        else:
            firsts.push_back(first)
            lasts.push_back(last)
    cdef Py_ssize_t m = <Py_ssize_t>firsts.size()
    out_np = np.empty((m, 2), dtype=np.int64)
    cdef i64[:, ::1] out = out_np
    cdef Py_ssize_t t
    for t in range(m):
        out[t, 0] = firsts[t]
        out[t, 1] = lasts[t]
    return out_np
