"""Staircase detection: chain height-adjacent lines into stairs and model them.

Two extracted lines form a stair when their rise h, run d, slope
φ = atan(h/d) and direction difference all fall inside StairThresholds *and*
no third line lies vertically between them in the middle of their gap (which
is what separates a staircase from a ramp sliced into many parallel lines).
Chains grow greedily from the lowest admissible seed pair; a chain of at
least ``min_stairs`` lines is a staircase, and its step model is the mean of
the endpoint gaps along the chain.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cloud import PointCloud, voxel_downsample
from .config import RunConfig, StairThresholds
from .errors import DegenerateStaircaseError
from .lines import (LineSegment, _make_segment, extract_lines, fuse_segments,
                    group_by_height, normal_form_from_endpoints,
                    segment_from_points)
from .preprocess import cylindrical_project, top_surface_filter

ASCENDING = "ascending"
DESCENDING = "descending"


@dataclass(frozen=True)
class StairLink:
    """Geometry of an accepted line pair: rise, run and slope."""

    h: float
    d: float
    phi: float


@dataclass(frozen=True)
class StaircaseModel:
    """Average step geometry of a staircase.

    h/d/w in metres, phi in degrees; location is the 3D midpoint of the first
    (lowest for ascending, highest for descending) stair edge.
    """

    h: float
    d: float
    w: float
    phi: float
    location: np.ndarray

    def __post_init__(self):
        loc = np.array(self.location, dtype=np.float64).reshape(3)
        loc.setflags(write=False)
        object.__setattr__(self, "location", loc)


@dataclass(frozen=True, eq=False)
class Staircase:
    """A detected staircase: its stair lines in traversal order and model.

    ``stairs`` are ordered by increasing z for ascending staircases and by
    decreasing z for descending ones.
    """

    stairs: tuple
    direction: str
    model: StaircaseModel


def alpha_gap_deg(a1: float, a2: float) -> float:
    """Absolute difference of two line directions, folded to [0, 90]."""
    g = abs(a1 - a2) % 180.0
    return min(g, 180.0 - g)


def _normal_gap(l1: LineSegment, l2: LineSegment) -> float:
    """Distance between the midpoints projected on the mean line normal.

    The mean direction is taken in doubled-angle space since line directions
    are only defined modulo 180°.
    """
    a1 = np.radians(l1.alpha)
    a2 = np.radians(l2.alpha)
    abar = 0.5 * np.arctan2(np.sin(2 * a1) + np.sin(2 * a2),
                            np.cos(2 * a1) + np.cos(2 * a2))
    normal = np.array([-np.sin(abar), np.cos(abar)])
    return float(abs((l2.midpoint[:2] - l1.midpoint[:2]) @ normal))


def _blocked_between(l1, l2, lines, z_res, d_p) -> bool:
    """True when a third line lies vertically between l1 and l2 and sits in
    the central band of their horizontal gap.

    The z margin of one grid row keeps split siblings of l1/l2 themselves
    from counting as blockers. Horizontally, a blocker must fall at 30-70 %
    of the midpoint gap along the pair's mean normal and within the pair's
    tangential extent (dilated by d_p): an intervening step edge lands near
    the middle of the gap, whereas trailing-edge artifacts hugging one of
    the two lines do not.
    """
    zlo, zhi = sorted((l1.z_mean, l2.z_mean))
    frame = None
    for other in lines:
        if other is l1 or other is l2:
            continue
        z = other.z_mean
        if not (zlo + z_res < z < zhi - z_res):
            continue
        if frame is None:
            a1 = np.radians(l1.alpha)
            a2 = np.radians(l2.alpha)
            abar = 0.5 * np.arctan2(np.sin(2 * a1) + np.sin(2 * a2),
                                    np.cos(2 * a1) + np.cos(2 * a2))
            tangent = np.array([np.cos(abar), np.sin(abar)])
            normal = np.array([-np.sin(abar), np.cos(abar)])
            origin = l1.midpoint[:2]
            gap = float((l2.midpoint[:2] - origin) @ normal)
            span = (np.vstack([l1.p_s[:2], l1.p_e[:2],
                               l2.p_s[:2], l2.p_e[:2]]) - origin) @ tangent
            frame = (origin, tangent, normal, gap,
                     span.min() - d_p, span.max() + d_p)
        origin, tangent, normal, gap, t_lo, t_hi = frame
        rel = other.midpoint[:2] - origin
        if abs(gap) > 1e-9:
            s = float(rel @ normal) / gap
            if not 0.3 <= s <= 0.7:
                continue
        if t_lo <= float(rel @ tangent) <= t_hi:
            return True
    return False


def stair_relation(l1: LineSegment, l2: LineSegment, lines,
                   thresholds: Optional[StairThresholds] = None, *,
                   z_res: float = 0.025, d_p: float = 0.03) -> Optional[StairLink]:
    """Check whether two lines form a stair; returns the link geometry or None.

    ``lines`` is the candidate pool searched for blocking lines (l1/l2 are
    skipped by identity). The test is symmetric in its first two arguments.
    """
    t = thresholds or StairThresholds()
    h = abs(l1.z_mean - l2.z_mean)
    if not t.h_min <= h <= t.h_max:
        return None
    if alpha_gap_deg(l1.alpha, l2.alpha) > t.alpha_tol:
        return None
    d = _normal_gap(l1, l2)
    if not t.d_min <= d <= t.d_max:
        return None
    phi = float(np.degrees(np.arctan2(h, d)))
    if not t.phi_min <= phi <= t.phi_max:
        return None
    if _blocked_between(l1, l2, lines, z_res, d_p):
        return None
    return StairLink(h=h, d=d, phi=phi)


def _same_edge(member, other, z_res, z_rows=2.5, perp_tol=0.08):
    """True when ``other`` reads as another trace of ``member``'s step edge.

    Noise smears one physical edge into near-parallel lines in neighbouring
    grid rows (partial re-traces a cell or two in front of or behind the
    edge). Those duplicates sit within a short vertical and perpendicular
    tube around the member line; a genuine neighbouring step never does,
    since it is at least h_min higher and d_min away.
    """
    if abs(other.z_mean - member.z_mean) > z_rows * z_res:
        return False
    if alpha_gap_deg(member.alpha, other.alpha) > 20.0:
        return False
    a = np.radians(member.alpha)
    tangent = np.array([np.cos(a), np.sin(a)])
    normal = np.array([-np.sin(a), np.cos(a)])
    rel = other.midpoint[:2] - member.midpoint[:2]
    if abs(float(rel @ normal)) > perp_tol:
        return False
    half = 0.5 * float(np.hypot(*(member.p_e[:2] - member.p_s[:2])))
    return abs(float(rel @ tangent)) <= half + 0.3


def _chain_tangent(chain):
    """Point-weighted mean xy direction of a chain's lines (doubled-angle
    space, since directions are defined modulo 180°)."""
    a = np.radians([m.alpha for m in chain])
    wts = np.asarray([m.n_points for m in chain], dtype=np.float64)
    abar = 0.5 * np.arctan2(float(wts @ np.sin(2 * a)),
                            float(wts @ np.cos(2 * a)))
    return np.array([np.cos(abar), np.sin(abar)])


def _consolidate(member, active, chain, z_res, sigma):
    """Refit a chain member through every trace of its step edge.

    Row straddling and range speckle shatter one physical edge into
    complementary, sometimes skewed fragments spread over one or two grid
    rows; a skewed fragment may win the chain slot while its straight
    siblings carry most of the edge. Every line inside a short vertical and
    perpendicular tube around the member — measured along the chain's
    consensus direction, so a skewed member cannot hide its own siblings —
    is gathered and a single line is refitted through the union of their raw
    points, restoring the step's full extent and true direction for the
    model's endpoint differences. Returns (refitted line, absorbed lines).
    """
    tangent = _chain_tangent(chain)
    normal = np.array([-tangent[1], tangent[0]])
    alpha_bar = float(np.degrees(np.arctan2(tangent[1], tangent[0])))
    half_w = 0.5 * max(m.length for m in chain) + 0.3
    mid = member.midpoint[:2]
    group = [member]
    for o in active:
        if o is member or any(o is c for c in chain):
            continue
        if abs(o.z_mean - member.z_mean) > 1.5 * z_res:
            continue
        if alpha_gap_deg(alpha_bar, o.alpha) > 20.0:
            continue
        rel = o.midpoint[:2] - mid
        if abs(float(rel @ normal)) > 0.05:
            continue
        if abs(float(rel @ tangent)) > half_w:
            continue
        group.append(o)
    if len(group) == 1 or any(g.points is None for g in group):
        fused = member
        for tr in sorted(group[1:], key=lambda o: (o.z_mean, float(o.p_s[0]),
                                                   float(o.p_s[1]))):
            fused = fuse_segments(fused, tr)
        return fused, group[1:]
    n_tot = sum(g.n_points for g in group)
    z = sum(g.z_mean * g.n_points for g in group) / n_tot
    pts = np.vstack([g.points for g in group])
    return segment_from_points(pts, sigma, z), group[1:]


def _harmonize(chain):
    """Cut every stair line back to the chain's common lateral interval.

    The model's step depth comes from endpoint-to-endpoint gaps, so a stair
    whose observed extent starts or stops short of its neighbours' (self-
    occlusion at oblique views, a shadowing obstacle) inflates the gap by
    its lateral shortfall. Since the stairs of one flight span the same
    lateral interval in reality, each line is re-terminated at the chain's
    median start and stop stations along the consensus direction — trimming
    overshoot and extending truncated lines along their own fit. Winding
    flights (direction drifting along the chain) are left untouched.
    """
    if any(alpha_gap_deg(a.alpha, b.alpha) > 15.0
           for a, b in zip(chain, chain[1:])):
        return chain
    tangent = _chain_tangent(chain)
    origin = chain[0].midpoint[:2]
    taus = np.array([[float((m.p_s[:2] - origin) @ tangent),
                      float((m.p_e[:2] - origin) @ tangent)] for m in chain])
    taus.sort(axis=1)
    lo = float(np.median(taus[:, 0]))
    hi = float(np.median(taus[:, 1]))
    if hi - lo < 0.3:
        return chain
    out = []
    for m, (t_s, t_e) in zip(chain, taus):
        span = t_e - t_s
        if span < 1e-9:
            out.append(m)
            continue
        a = m.p_s if (m.p_s[:2] - origin) @ tangent <= \
            (m.p_e[:2] - origin) @ tangent else m.p_e
        b = m.p_e if a is m.p_s else m.p_s
        direction = (b - a) / span
        new_a = a + (lo - t_s) * direction
        new_b = a + (hi - t_s) * direction
        out.append(_make_segment(new_a[:2], new_b[:2], m.z_mean, m.psi, m.r,
                                 m.cov, m.n_points, points=m.points))
    return out


def _detect_chains(lines, t, sign, ground_z, band, z_res, d_p, sigma):
    """Greedy staircase chaining; sign=+1 ascends, sign=-1 descends.

    Seed pairs are drawn from the lines nearest the ground (within
    band + 2.5·h_max of it), tried lowest-first then smallest gap; the first
    passing pair seeds a chain. The chain then grows stepwise, each time
    taking the best-supported (most points) line that forms a stair with the
    current top. Candidate pairs that fail cost nothing. A chain that
    reaches min_stairs consumes its members and their duplicate edge traces
    (so the same staircase is not reported twice); one that falls short
    retires only its seed pair from the init list.
    """

    def key(line):
        return sign * line.z_mean

    pool = sorted(lines, key=key)
    limit = sign * ground_z + band + 2.5 * t.h_max
    init = [l for l in pool if key(l) <= limit]
    active = list(pool)
    chains = []
    while len(init) >= 2:
        pairs = sorted(
            ((key(init[i]), key(init[j]) - key(init[i]), i, j)
             for i in range(len(init)) for j in range(i + 1, len(init))),
            key=lambda p: p[:2])
        seed = None
        for _, _, i, j in pairs:
            if stair_relation(init[i], init[j], active, t,
                              z_res=z_res, d_p=d_p) is not None:
                seed = (init[i], init[j])
                break
        if seed is None:
            break
        l1, l2 = seed
        chain = [l1, l2]
        while True:
            cands = [c for c in active
                     if key(c) > key(chain[-1])
                     and stair_relation(chain[-1], c, active, t,
                                        z_res=z_res, d_p=d_p) is not None]
            if not cands:
                break
            chain.append(max(cands, key=lambda c: (c.n_points, -key(c))))
        if len(chain) >= t.min_stairs:
            fused = []
            used = {id(l) for l in chain}
            for m in chain:
                seg, absorbed = _consolidate(m, active, chain, z_res, sigma)
                fused.append(seg)
                used.update(id(o) for o in absorbed)
            chains.append(_harmonize(fused))
            used.update(id(o) for o in active for m in chain
                        if id(o) not in used and _same_edge(m, o, z_res))
            init = [l for l in init if id(l) not in used]
            active = [l for l in active if id(l) not in used]
        else:
            init = [l for l in init if l is not l1 and l is not l2]
    return chains


def estimate_params(stairs) -> StaircaseModel:
    """Average step geometry over the consecutive stair pairs of a chain.

    Endpoints are first oriented so consecutive start points correspond
    (minimum total xy displacement); h and d are the means of the 2(k-1)
    endpoint gaps, w the mean 3D stair length, phi = atan(h/d), and location
    the midpoint of the first stair.
    """
    stairs = list(stairs)
    k = len(stairs)
    if k < 2:
        raise DegenerateStaircaseError(f"need at least 2 stairs, got {k}")
    starts = np.empty((k, 3))
    ends = np.empty((k, 3))
    starts[0] = stairs[0].p_s
    ends[0] = stairs[0].p_e
    for i in range(1, k):
        s, e = stairs[i].p_s, stairs[i].p_e
        keep = (np.hypot(*(s[:2] - starts[i - 1][:2]))
                + np.hypot(*(e[:2] - ends[i - 1][:2])))
        swap = (np.hypot(*(e[:2] - starts[i - 1][:2]))
                + np.hypot(*(s[:2] - ends[i - 1][:2])))
        if swap < keep:
            s, e = e, s
        starts[i] = s
        ends[i] = e
    dz = np.abs(np.diff(starts[:, 2])).sum() + np.abs(np.diff(ends[:, 2])).sum()
    h = dz / (2 * (k - 1))
    ds = np.hypot(*np.diff(starts[:, :2], axis=0).T)
    de = np.hypot(*np.diff(ends[:, :2], axis=0).T)
    d = (ds.sum() + de.sum()) / (2 * (k - 1))
    w = float(np.linalg.norm(ends - starts, axis=1).mean())
    phi = float(np.degrees(np.arctan2(h, d)))
    location = 0.5 * (starts[0] + ends[0])
    return StaircaseModel(h=float(h), d=float(d), w=w, phi=phi, location=location)


def detect_ascending(lines, thresholds: Optional[StairThresholds] = None, *,
                     ground_z: float = 0.0, band: float = 0.08,
                     z_res: float = 0.025, d_p: float = 0.03,
                     sigma: float = 0.0125):
    """Detect ascending staircases among above-ground lines."""
    t = thresholds or StairThresholds()
    chains = _detect_chains(lines, t, 1.0, ground_z, band, z_res, d_p, sigma)
    return [Staircase(stairs=tuple(c), direction=ASCENDING,
                      model=estimate_params(c)) for c in chains]


def detect_descending(lines, thresholds: Optional[StairThresholds] = None, *,
                      ground_z: float = 0.0, band: float = 0.08,
                      z_res: float = 0.025, d_p: float = 0.03,
                      sigma: float = 0.0125):
    """Detect descending staircases among below-ground lines."""
    t = thresholds or StairThresholds()
    chains = _detect_chains(lines, t, -1.0, ground_z, band, z_res, d_p, sigma)
    return [Staircase(stairs=tuple(c), direction=DESCENDING,
                      model=estimate_params(c)) for c in chains]


def validate_staircase(staircase: Staircase,
                       thresholds: Optional[StairThresholds] = None,
                       lines=None, *, z_res: float = 0.025,
                       d_p: float = 0.03) -> bool:
    """Re-check every adjacent stair pair of a staircase against the stair
    relation. ``lines`` is the blocking pool (defaults to the staircase's own
    stairs)."""
    t = thresholds or StairThresholds()
    pool = staircase.stairs if lines is None else lines
    for a, b in zip(staircase.stairs, staircase.stairs[1:]):
        if stair_relation(a, b, pool, t, z_res=z_res, d_p=d_p) is None:
            return False
    return True


@dataclass
class DetectionResult:
    """Detected staircases plus wall-clock timing of each pipeline stage."""

    staircases: list
    timing_ms: dict


def detect(cloud: PointCloud, config: Optional[RunConfig] = None) -> DetectionResult:
    """Run the full pipeline: reduce, project, extract, chain, model."""
    cfg = config or RunConfig()
    cfg.validate()
    stages = {}
    t_start = time.perf_counter()

    t0 = time.perf_counter()
    reduced = voxel_downsample(cloud, cfg.leaf)
    stages["voxel"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    surface = top_surface_filter(reduced, cfg.leaf)
    stages["top_surface"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    grid = cylindrical_project(surface, cfg.z_res, cfg.theta_bins)
    stages["project"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    lines = extract_lines(grid, cfg.d_p, cfg.n_min, cfg.sigma, cfg.chi2,
                          cfg.min_fill)
    stages["extract"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    groups = group_by_height(lines, cfg.ground_z, cfg.band)
    stages["group"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    up = detect_ascending(groups.above, cfg.stair, ground_z=cfg.ground_z,
                          band=cfg.band, z_res=cfg.z_res, d_p=cfg.d_p,
                          sigma=cfg.sigma)
    down = detect_descending(groups.below, cfg.stair, ground_z=cfg.ground_z,
                             band=cfg.band, z_res=cfg.z_res, d_p=cfg.d_p,
                             sigma=cfg.sigma)
    stages["detect"] = time.perf_counter() - t0

    timing = {"total": (time.perf_counter() - t_start) * 1e3,
              "per_stage": {k: v * 1e3 for k, v in stages.items()}}
    return DetectionResult(staircases=up + down, timing_ms=timing)


# --- JSON round-trip ---------------------------------------------------------

def result_to_dict(result: DetectionResult, include_timing: bool = True) -> dict:
    """Plain-JSON view of a DetectionResult."""
    out = {"staircases": [staircase_to_dict(s) for s in result.staircases]}
    if include_timing:
        out["timing_ms"] = {
            "total": float(result.timing_ms.get("total", 0.0)),
            "per_stage": {k: float(v) for k, v in
                          result.timing_ms.get("per_stage", {}).items()},
        }
    return out


def staircase_to_dict(s: Staircase) -> dict:
    return {
        "direction": s.direction,
        "steps": [{
            "start": [float(v) for v in line.p_s],
            "end": [float(v) for v in line.p_e],
            "alpha": float(line.alpha),
            "cov": [[float(line.cov[0, 0]), float(line.cov[0, 1])],
                    [float(line.cov[1, 0]), float(line.cov[1, 1])]],
            "n_points": int(line.n_points),
        } for line in s.stairs],
        "model": {
            "h": float(s.model.h),
            "d": float(s.model.d),
            "w": float(s.model.w),
            "phi": float(s.model.phi),
            "location": [float(v) for v in s.model.location],
        },
    }


_DEFAULT_COV = np.array([[np.radians(0.5) ** 2, 0.0], [0.0, 0.005 ** 2]])


def _step_from_dict(d: dict) -> LineSegment:
    start = np.asarray(d["start"], dtype=np.float64)
    end = np.asarray(d["end"], dtype=np.float64)
    psi, r = normal_form_from_endpoints(start[:2], end[:2])
    cov = np.asarray(d["cov"], dtype=np.float64) if "cov" in d else _DEFAULT_COV
    n_points = int(d.get("n_points", 2))
    z = float(d.get("z_mean", 0.5 * (start[2] + end[2])))
    return _make_segment(start[:2], end[:2], z, psi, r, cov, n_points)


def staircase_from_dict(d: dict) -> Staircase:
    stairs = tuple(_step_from_dict(sd) for sd in d["steps"])
    model = d.get("model")
    if model is not None:
        sm = StaircaseModel(h=float(model["h"]), d=float(model["d"]),
                            w=float(model["w"]), phi=float(model["phi"]),
                            location=np.asarray(model["location"], dtype=np.float64))
    else:
        sm = estimate_params(stairs)
    return Staircase(stairs=stairs, direction=str(d["direction"]), model=sm)


def result_from_dict(data: dict) -> DetectionResult:
    staircases = [staircase_from_dict(sd) for sd in data.get("staircases", [])]
    timing = data.get("timing_ms", {"total": 0.0, "per_stage": {}})
    return DetectionResult(staircases=staircases, timing_ms=timing)
