"""Small planar/3D geometry helpers shared across the pipeline."""
from __future__ import annotations

import numpy as np


def cross2(a, b) -> float:
    """z-component of the cross product of two 2D vectors."""
    return float(a[0] * b[1] - a[1] * b[0])


def point_segment_distance(p, a, b) -> float:
    """Euclidean distance from point p to segment (a, b), all 2D."""
    p = np.asarray(p, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*(p - a)))
    u = float((p - a) @ ab) / denom
    u = min(1.0, max(0.0, u))
    return float(np.hypot(*(p - a - u * ab)))


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull of (N, 2) points, counter-clockwise.

    Collinear boundary points are dropped. Degenerate inputs collapse to the
    1- or 2-point hull.
    """
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if pts.shape[0] <= 2:
        return pts

    def half(seq):
        out: list[np.ndarray] = []
        for p in seq:
            while len(out) >= 2 and cross2(out[-1] - out[-2], p - out[-2]) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:  # all points collinear
        return np.vstack([pts[0], pts[-1]])
    return np.vstack(hull)


def distance_to_convex(hull: np.ndarray, p) -> float:
    """Distance from a 2D point to a convex polygon (0 inside)."""
    p = np.asarray(p, dtype=np.float64)
    m = hull.shape[0]
    if m == 1:
        return float(np.hypot(*(p - hull[0])))
    if m == 2:
        return point_segment_distance(p, hull[0], hull[1])
    inside = True
    best = np.inf
    for i in range(m):
        a = hull[i]
        b = hull[(i + 1) % m]
        if cross2(b - a, p - a) < 0:
            inside = False
        best = min(best, point_segment_distance(p, a, b))
    return 0.0 if inside else best


def visible_mask(origin, targets, triangles, tol=0.01) -> np.ndarray:
    """Boolean mask of target points whose ray from origin is unobstructed.

    A target is hidden when some triangle intersects the segment
    origin→target more than `tol` metres before the target (so a surface does
    not occlude its own samples).
    """
    origin = np.asarray(origin, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    d = targets - origin
    length = np.linalg.norm(d, axis=1)
    vis = np.ones(targets.shape[0], dtype=bool)
    eps = 1e-9
    for tri in triangles:
        a, b, c = tri
        e1 = b - a
        e2 = c - a
        pvec = np.cross(d, e2)
        det = pvec @ e1
        ok = np.abs(det) > eps
        if not ok.any():
            continue
        inv = np.zeros_like(det)
        inv[ok] = 1.0 / det[ok]
        tvec = origin - a
        u = (pvec @ tvec) * inv
        qvec = np.cross(tvec, e1)
        v = (d @ qvec) * inv
        t = (e2 @ qvec) * inv
        hit = ok & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > eps)
        hit &= t * length < length - tol
        vis &= ~hit
    return vis
