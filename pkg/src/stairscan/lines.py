"""Row-wise line extraction from a polar grid.

Each occupied grid row (a fixed-height slice) is opened at its largest
angular gap, split into near-straight runs, and each run is fitted with a
weighted least-squares line in normal form

    x·cosψ + y·sinψ = r,

with a 2×2 covariance over (ψ, r) from the Gauss-Newton information matrix.
Adjacent runs whose parameters agree under a χ² Mahalanobis gate are fused
covariance-weighted, healing over-segmentation from the splitter.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import DegenerateInputError
from .preprocess import PolarGrid

_HALF_PI = 0.5 * np.pi


@dataclass(frozen=True, eq=False)
class LineSegment:
    """A fitted straight segment at a constant height slice.

    p_s/p_e: 3D endpoints — the extreme member points projected onto the
        fitted line, at the mean member height. Their xy direction always
        matches ``alpha``.
    alpha: segment direction in the xy plane, degrees in (-90, 90].
    psi, r: normal-form parameters (ψ in radians, ψ ∈ (-π/2, π/2]).
    cov: 2×2 covariance of (ψ, r).
    n_points: number of points behind the fit.
    points: optional (N, 3) raw member points, kept so downstream stages can
        refit a line through the union of several traces of one edge.
        Segments rebuilt from serialized form carry None.
    """

    p_s: np.ndarray
    p_e: np.ndarray
    alpha: float
    psi: float
    r: float
    cov: np.ndarray
    n_points: int
    points: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("p_s", "p_e", "cov"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.points is not None:
            pts = np.array(self.points, dtype=np.float64)
            pts.setflags(write=False)
            object.__setattr__(self, "points", pts)

    @property
    def z_mean(self) -> float:
        # endpoints share the mean member height by construction
        return float(self.p_s[2])

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.p_s + self.p_e)

    @property
    def length(self) -> float:
        return float(np.hypot(*(self.p_e[:2] - self.p_s[:2])))


def fit_weighted_line(xy, sigmas):
    """Weighted least-squares line fit in normal form.

    xy: (N >= 2, 2) points. sigmas: scalar or (N,) per-point std-dev; weights
    are 1/σ². Returns (psi, r, cov): the angle of the line normal (radians,
    in (-π/2, π/2]), the signed distance to the origin, and the 2×2
    covariance of (psi, r).

    The direction solves the weighted orthogonal regression in closed form,
        ψ = ½·atan2(-2 S_xy, S_yy - S_xx)
    over the weighted centered second moments, and r = x̄ cosψ + ȳ sinψ. The
    covariance is H⁻¹ with H the Gauss-Newton information of the residuals
    e_i = x_i cosψ + y_i sinψ - r.

    Raises DegenerateInputError when all points coincide.
    """
    xy = np.asarray(xy, dtype=np.float64)
    if xy.ndim != 2 or xy.shape[1] != 2 or xy.shape[0] < 2:
        raise ValueError("need an (N >= 2, 2) array of points")
    sig = np.broadcast_to(np.asarray(sigmas, dtype=np.float64), (xy.shape[0],))
    if np.any(sig <= 0) or not np.isfinite(sig).all():
        raise ValueError("sigmas must be positive and finite")
    w = 1.0 / (sig * sig)
    sw = float(w.sum())
    xbar = float(w @ xy[:, 0]) / sw
    ybar = float(w @ xy[:, 1]) / sw
    xc = xy[:, 0] - xbar
    yc = xy[:, 1] - ybar
    sxx = float(w @ (xc * xc))
    syy = float(w @ (yc * yc))
    sxy = float(w @ (xc * yc))
    if max(sxx, syy) < 1e-20:
        raise DegenerateInputError("all points coincide; line direction undefined")
    psi = 0.5 * np.arctan2(-2.0 * sxy, syy - sxx)
    r = xbar * np.cos(psi) + ybar * np.sin(psi)
    # information matrix: ∂e/∂ψ = -x sinψ + y cosψ =: v, ∂e/∂r = -1
    v = -xy[:, 0] * np.sin(psi) + xy[:, 1] * np.cos(psi)
    h11 = float(w @ (v * v))
    h12 = -float(w @ v)
    det = h11 * sw - h12 * h12
    if det <= 0 or not np.isfinite(det):
        raise DegenerateInputError("line fit information matrix is singular")
    cov = np.array([[sw, -h12], [-h12, h11]]) / det
    return float(psi), float(r), cov


def _fold_psi_r(psi: float, r: float):
    """Shift ψ into (-π/2, π/2] by multiples of π, flipping r's sign."""
    while psi > _HALF_PI:
        psi -= np.pi
        r = -r
    while psi <= -_HALF_PI:
        psi += np.pi
        r = -r
    return psi, r


def _rebase(psi: float, r: float, psi_ref: float):
    """Move (ψ, r) to the representative within π/2 of psi_ref."""
    while psi - psi_ref > _HALF_PI:
        psi -= np.pi
        r = -r
    while psi - psi_ref < -_HALF_PI:
        psi += np.pi
        r = -r
    return psi, r


def _make_segment(a_xy, b_xy, z, psi, r, cov, n_points,
                  points=None) -> LineSegment:
    dx = b_xy[0] - a_xy[0]
    dy = b_xy[1] - a_xy[1]
    alpha = float(np.degrees(np.arctan2(dy, dx)))
    if alpha <= -90.0:
        a_xy, b_xy = b_xy, a_xy
        alpha += 180.0
    elif alpha > 90.0:
        a_xy, b_xy = b_xy, a_xy
        alpha -= 180.0
    return LineSegment(
        p_s=np.array([a_xy[0], a_xy[1], z]),
        p_e=np.array([b_xy[0], b_xy[1], z]),
        alpha=alpha, psi=float(psi), r=float(r), cov=cov,
        n_points=int(n_points), points=points)


def segment_from_points(pts, sigmas, z: Optional[float] = None) -> LineSegment:
    """Fit a LineSegment to (N, 3) member points (xy fit, constant z).

    Endpoints are the projections of the extreme members onto the fitted
    line. ``z`` fixes the segment height (a grid row's height); when omitted
    the member mean is used.
    """
    pts = np.asarray(pts, dtype=np.float64)
    psi, r, cov = fit_weighted_line(pts[:, :2], sigmas)
    normal = np.array([np.cos(psi), np.sin(psi)])
    tangent = np.array([-np.sin(psi), np.cos(psi)])
    t = pts[:, :2] @ tangent
    foot = r * normal
    if z is None:
        z = float(pts[:, 2].mean())
    return _make_segment(foot + t.min() * tangent, foot + t.max() * tangent,
                         float(z), psi, r, cov, pts.shape[0], points=pts)


def normal_form_from_endpoints(a_xy, b_xy):
    """(ψ, r) of the infinite line through two xy points, principal branch."""
    dx = float(b_xy[0] - a_xy[0])
    dy = float(b_xy[1] - a_xy[1])
    if dx == 0.0 and dy == 0.0:
        raise DegenerateInputError("endpoints coincide")
    psi = float(np.arctan2(dy, dx)) + _HALF_PI  # normal = tangent rotated 90°
    r = float(a_xy[0]) * np.cos(psi) + float(a_xy[1]) * np.sin(psi)
    return _fold_psi_r(psi, r)


def mahalanobis_gap(l1: LineSegment, l2: LineSegment) -> float:
    """Squared Mahalanobis distance between two lines' (ψ, r) estimates.

    l2's parameters are first rebased to l1's branch so the ψ-periodicity
    (ψ, r) ~ (ψ+π, -r) cannot inflate the distance.
    """
    psi2, r2 = _rebase(l2.psi, l2.r, l1.psi)
    delta = np.array([l1.psi - psi2, l1.r - r2])
    return float(delta @ np.linalg.solve(l1.cov + l2.cov, delta))


def fuse_segments(l1: LineSegment, l2: LineSegment) -> LineSegment:
    """Covariance-weighted fusion of two estimates of the same line.

    (ψ, r) is the information-weighted mean with covariance (P₁⁻¹+P₂⁻¹)⁻¹;
    endpoints are the extreme projections of both segments' endpoints onto
    the fused line; z is the point-count-weighted mean height.
    """
    info1 = np.linalg.inv(l1.cov)
    info2 = np.linalg.inv(l2.cov)
    psi2, r2 = _rebase(l2.psi, l2.r, l1.psi)
    info = info1 + info2
    theta = np.linalg.solve(
        info, info1 @ np.array([l1.psi, l1.r]) + info2 @ np.array([psi2, r2]))
    cov = np.linalg.inv(info)
    psi_f, r_f = _fold_psi_r(float(theta[0]), float(theta[1]))
    normal = np.array([np.cos(psi_f), np.sin(psi_f)])
    tangent = np.array([-np.sin(psi_f), np.cos(psi_f)])
    ends = np.vstack([l1.p_s[:2], l1.p_e[:2], l2.p_s[:2], l2.p_e[:2]])
    t = ends @ tangent
    foot = r_f * normal
    n_tot = l1.n_points + l2.n_points
    z = (l1.z_mean * l1.n_points + l2.z_mean * l2.n_points) / n_tot
    pts = None
    if l1.points is not None and l2.points is not None:
        pts = np.vstack([l1.points, l2.points])
    return _make_segment(foot + t.min() * tangent, foot + t.max() * tangent,
                         z, psi_f, r_f, cov, n_tot, points=pts)


def _merge_collinear_tagged(lines, tags, chi2):
    """Greedy forward pass fusing adjacent collinear lines.

    ``tags`` is an arbitrary parallel payload; a fused line keeps the left
    member's tag.
    """
    lines = list(lines)
    tags = list(tags)
    i = 0
    while i + 1 < len(lines):
        if mahalanobis_gap(lines[i], lines[i + 1]) < chi2:
            lines[i] = fuse_segments(lines[i], lines[i + 1])
            del lines[i + 1]
            del tags[i + 1]
        else:
            i += 1
    return lines, tags


def merge_collinear(lines, chi2: float = 5.99):
    """Fuse runs of adjacent, mutually collinear lines (order preserved)."""
    merged, _ = _merge_collinear_tagged(lines, range(len(list(lines))), chi2)
    return merged


def split_iepf(xy, d_p: float = 0.03, n_min: int = 4) -> np.ndarray:
    """Split an ordered xy chain into near-straight index ranges.

    Returns (K, 2) inclusive (first, last) ranges; adjacent ranges share the
    split index; ranges shorter than n_min are dropped.
    """
    xy = np.asarray(xy, dtype=np.float64)
    if d_p <= 0:
        raise ValueError(f"d_p must be positive, got {d_p}")
    if n_min < 2:
        raise ValueError(f"n_min must be at least 2, got {n_min}")
    return kernels.iepf_split(xy[:, 0], xy[:, 1], d_p, n_min)


def _despeckle(pts, cols, d_p):
    """Drop scan points whose range jumps more than d_p/2 off a local median.

    A cell whose surface patch straddles a row boundary occasionally drops
    out of the row and lets a farther patch show through, and noise smears
    an edge one cell forward of its true position; both leave range spikes
    riding on the scan. A sliding window of five neighbours tolerates spikes
    up to two cells wide and keeps each stretch of the scan on its locally
    dominant surface; genuine structure varies smoothly over that span.
    """
    if pts.shape[0] < 5:
        return pts, cols
    rho = np.hypot(pts[:, 0], pts[:, 1])
    padded = np.pad(rho, 2, mode="edge")
    med = np.median(np.lib.stride_tricks.sliding_window_view(padded, 5), axis=1)
    keep = np.abs(rho - med) <= 0.5 * d_p
    return pts[keep], cols[keep]


def _cull_showthrough(grid: PolarGrid, gate: float) -> PolarGrid:
    """Drop grid returns hidden behind an adjacent row's return.

    A flat surface whose height falls near a row boundary scatters its cells
    over the two neighbouring rows, so in any azimuth column only one of the
    rows can hold the surface's front cell; the other row's nearest return
    then comes from the surface interior, one or more cells farther out.
    Those show-through returns ride 2 cm and more behind the true front and
    shred the per-row scans. Within a single (row, column) cell the
    projection already keeps the nearest return, so every offender is
    cross-row: discard a return when the same azimuth column of a nearby row
    (within two rows — noise spreads a surface's cells that far) sees the
    world more than ``gate`` nearer.
    """
    if len(grid) == 0:
        return grid
    r = grid.rows - int(grid.rows.min())
    depth = np.full((int(r.max()) + 5, grid.theta_bins), np.inf)
    depth[r + 2, grid.cols] = grid.rho
    nearest = np.minimum.reduce([depth[r, grid.cols], depth[r + 1, grid.cols],
                                 depth[r + 3, grid.cols], depth[r + 4, grid.cols]])
    keep = grid.rho - nearest <= gate
    if bool(keep.all()):
        return grid
    return PolarGrid(z0=grid.z0, z_res=grid.z_res, theta_bins=grid.theta_bins,
                     rows=grid.rows[keep], cols=grid.cols[keep],
                     points=grid.points[keep], rho=grid.rho[keep])


def _span_support(seg, c_first, c_last, row_id, depth, row_lo, gate):
    """Fraction of a segment's spanned azimuth columns backed by the grid.

    A column supports the segment when its own row or an adjacent row holds
    a return within ``gate`` of the fitted line's predicted range there. A
    surface near a row boundary scatters its cells over neighbouring rows,
    so a genuine edge keeps near-total support even when the segment itself
    owns only part of the columns; stragglers chained across empty space do
    not, since the space they cross returns nothing at a compatible range.
    """
    psi, r = (seg.psi, seg.r) if seg.r >= 0 else (seg.psi + np.pi, -seg.r)
    t = depth.shape[1]
    ncols = (c_last - c_first) % t + 1
    cols = (c_first + np.arange(ncols)) % t
    theta = -np.pi + (cols + 0.5) * (2.0 * np.pi / t)
    c = np.cos(theta - psi)
    predictable = c > 0.1
    rho_pred = r / np.where(predictable, c, 1.0)
    r = row_id - row_lo + 1
    near = np.abs(depth[r - 1:r + 2, cols] - rho_pred) <= gate
    supported = predictable & near.any(axis=0)
    return float(supported.sum()) / float(ncols)


def extract_lines(grid: PolarGrid, d_p: float = 0.03, n_min: int = 4,
                  sigma: float = 0.0125, chi2: float = 5.99,
                  min_fill: float = 0.45):
    """Extract line segments from every occupied grid row.

    The grid is first cleared of show-through returns (interior cells of a
    surface whose front landed in an adjacent row). Rows wrap in azimuth, so
    each row's cell chain is opened at its largest angular gap before
    splitting, and range speckle is scrubbed with a sliding median. A
    segment is kept only when at least min_fill of the azimuth columns it
    spans hold a return near its fit (own row or adjacent rows — see
    _span_support); sparse stragglers chained over long spans are grid
    artifacts, since solid structure puts a return in nearly every column it
    crosses. Segments carry the row's height. Output is ordered by (row,
    azimuth column of the first member point).
    """
    grid = _cull_showthrough(grid, 0.5 * d_p)
    out = []
    if len(grid) == 0:
        return out
    row_lo = int(grid.rows.min())
    depth = np.full((int(grid.rows.max()) - row_lo + 3, grid.theta_bins), np.inf)
    depth[grid.rows - row_lo + 1, grid.cols] = grid.rho
    for row_id, pts, cols in grid.iter_rows():
        m = pts.shape[0]
        if m < n_min:
            continue
        gaps = np.diff(cols)
        wrap_gap = cols[0] + grid.theta_bins - cols[-1]
        jmax = int(np.argmax(np.r_[gaps, wrap_gap]))
        start = (jmax + 1) % m
        pts_r = np.roll(pts, -start, axis=0)
        cols_r = np.roll(cols, -start)
        pts_r, cols_r = _despeckle(pts_r, cols_r, d_p)
        if pts_r.shape[0] < n_min:
            continue
        row_z = float(grid.row_z(row_id))
        ranges = kernels.iepf_split(
            np.ascontiguousarray(pts_r[:, 0]),
            np.ascontiguousarray(pts_r[:, 1]), d_p, n_min)
        segs = []
        firsts = []
        for a, b in ranges:
            chunk = pts_r[a:b + 1]
            try:
                seg = segment_from_points(chunk, sigma, row_z)
            except DegenerateInputError:
                continue
            if _span_support(seg, int(cols_r[a]), int(cols_r[b]), row_id,
                             depth, row_lo, 2.0 * d_p) < min_fill:
                continue
            segs.append(seg)
            firsts.append(int(cols_r[a]))
        segs, firsts = _merge_collinear_tagged(segs, firsts, chi2)
        for k in np.argsort(np.asarray(firsts, dtype=np.int64), kind="stable"):
            out.append(segs[k])
    return out


@dataclass(frozen=True)
class LineGroups:
    """Lines split by height relative to the ground plane."""

    above: tuple
    ground: tuple
    below: tuple


def group_by_height(lines, ground_z: float = 0.0, band: float = 0.08) -> LineGroups:
    """Partition lines into above-ground / ground-band / below-ground.

    The ground band is inclusive: z_mean within [ground_z - band,
    ground_z + band] counts as ground.
    """
    above, ground, below = [], [], []
    for line in lines:
        dz = line.z_mean - ground_z
        if dz > band:
            above.append(line)
        elif dz < -band:
            below.append(line)
        else:
            ground.append(line)
    return LineGroups(tuple(above), tuple(ground), tuple(below))
