"""Fusing repeated detections of the same staircase.

Two detections (e.g. from consecutive scans) rarely see the same stairs: one
may catch the lower steps, the other the upper ones. Merging aligns them on
the first stair pair that matches under MergeThresholds, fuses index-aligned
matching stairs covariance-weighted, and keeps everything unmatched, giving a
model built from the union of the evidence.
"""
from __future__ import annotations

from typing import Optional

from . import geom
from .config import MergeThresholds
from .detect import ASCENDING, Staircase, alpha_gap_deg, estimate_params
from .errors import NoMatchError
from .lines import LineSegment, fuse_segments


def same_stair(l1: LineSegment, l2: LineSegment,
               thresholds: Optional[MergeThresholds] = None) -> bool:
    """True when two stair lines plausibly measure the same physical edge.

    Checks height difference, direction difference, and the xy gap (smaller
    of the two midpoint-to-segment distances, so partially overlapping
    segments of different lengths compare sanely).
    """
    t = thresholds or MergeThresholds()
    if abs(l1.z_mean - l2.z_mean) > t.h_tol:
        return False
    if alpha_gap_deg(l1.alpha, l2.alpha) > t.alpha_tol:
        return False
    gap = min(
        geom.point_segment_distance(l1.midpoint[:2], l2.p_s[:2], l2.p_e[:2]),
        geom.point_segment_distance(l2.midpoint[:2], l1.p_s[:2], l1.p_e[:2]))
    return gap <= t.d_tol


def merge_staircases(sa: Staircase, sb: Staircase,
                     thresholds: Optional[MergeThresholds] = None) -> Staircase:
    """Merge two detections of one staircase into a single staircase.

    The shorter detection is scanned against the longer for the first
    matching stair pair (the anchor). From the anchor both stair lists are
    walked in lockstep: matching stairs fuse, non-matching stairs are both
    kept. Stairs before the anchor and past the shorter list are appended
    unfused. The result is re-sorted in traversal order and re-modeled.

    Raises NoMatchError when directions differ or no stair pair matches.
    """
    t = thresholds or MergeThresholds()
    if sa.direction != sb.direction:
        raise NoMatchError("staircases run in different directions")
    if len(sa.stairs) > len(sb.stairs):
        sa, sb = sb, sa
    short = list(sa.stairs)
    long = list(sb.stairs)
    anchor = None
    for i in range(len(short)):
        for j in range(len(long)):
            if same_stair(short[i], long[j], t):
                anchor = (i, j)
                break
        if anchor is not None:
            break
    if anchor is None:
        raise NoMatchError("no stair pair matches within the merge thresholds")
    i0, j0 = anchor
    fused = short[:i0] + long[:j0]
    step = 0
    while i0 + step < len(short) and j0 + step < len(long):
        a = short[i0 + step]
        b = long[j0 + step]
        if same_stair(a, b, t):
            fused.append(fuse_segments(a, b))
        else:
            fused.append(a)
            fused.append(b)
        step += 1
    fused.extend(short[i0 + step:])
    fused.extend(long[j0 + step:])
    sign = 1.0 if sa.direction == ASCENDING else -1.0
    fused.sort(key=lambda l: sign * l.z_mean)
    return Staircase(stairs=tuple(fused), direction=sa.direction,
                     model=estimate_params(fused))
