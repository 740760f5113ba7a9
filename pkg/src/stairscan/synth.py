"""Synthetic staircase scenes with exact ground truth.

Scenes are triangle soups sampled into point clouds: solid/hollow straight
flights, spiral flights (constant yaw per step), debris boxes on treads, and
a set of stair-free negative scenes. Ground truth records the stair edges a
cylindrical top-surface scan can actually observe: the tread leading edges —
for a descending flight seen from the upper plateau these are the riser base
corners, one level below each tread's walking surface entry.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geom
from .cloud import PointCloud, RigidPose
from .errors import InvalidSpecError

NEGATIVE_KINDS = ("flat", "wall", "ramp", "boxes")


@dataclass(frozen=True)
class DebrisSpec:
    """A box resting on a tread.

    tread: index of the carrying tread (0 = first tread above/below the base).
    offset: (forward from the tread's leading edge, lateral from center) [m].
    size: (depth, width, height) [m].
    """

    tread: int
    offset: tuple = (0.05, 0.0)
    size: tuple = (0.15, 0.30, 0.25)


@dataclass(frozen=True)
class StairSceneSpec:
    """Parametric staircase scene plus sampling settings."""

    n_steps: int = 6
    h: float = 0.18
    d: float = 0.29
    w: float = 1.0
    direction: str = "ascending"
    style: str = "solid"
    yaw_per_step: float = 0.0
    debris: tuple = ()
    pose: RigidPose = field(default_factory=RigidPose.identity)
    ground_extent: float = 5.0
    landing: float = 1.2
    density: float = 24000.0
    noise_sigma: float = 0.0125
    seed: int = 0
    viewpoint: tuple = None

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise InvalidSpecError("n_steps must be an integer >= 1")
        for name in ("h", "d", "w"):
            if getattr(self, name) <= 0:
                raise InvalidSpecError(f"{name} must be positive")
        if self.direction not in ("ascending", "descending"):
            raise InvalidSpecError(f"unknown direction {self.direction!r}")
        if self.style not in ("solid", "hollow"):
            raise InvalidSpecError(f"unknown style {self.style!r}")
        if abs(self.yaw_per_step) >= 45.0:
            raise InvalidSpecError("yaw_per_step must stay below 45 degrees")
        if self.ground_extent < 0 or self.landing < 0:
            raise InvalidSpecError("ground_extent and landing must be non-negative")
        if self.density < 0 or self.noise_sigma < 0:
            raise InvalidSpecError("density and noise_sigma must be non-negative")
        if self.viewpoint is not None and len(self.viewpoint) != 3:
            raise InvalidSpecError("viewpoint must be a 3-vector or None")
        object.__setattr__(self, "debris", tuple(self.debris))
        for box in self.debris:
            if not 0 <= box.tread < self.n_steps:
                raise InvalidSpecError(f"debris tread {box.tread} out of range")
            depth, width, height = box.size
            if min(depth, width, height) <= 0:
                raise InvalidSpecError("debris size components must be positive")
            if box.offset[0] < 0 or box.offset[0] + depth > self.d:
                raise InvalidSpecError("debris does not fit its tread (depth)")
            if abs(box.offset[1]) + width / 2 > self.w / 2:
                raise InvalidSpecError("debris does not fit its tread (width)")


@dataclass(frozen=True)
class GroundTruth:
    """Observable stair-edge geometry of a synthetic staircase."""

    direction: str
    h: float
    d: float
    w: float
    phi: float
    location: np.ndarray  # (3,) midpoint of the first stair edge
    edges: np.ndarray     # (n, 2, 3) endpoints per stair edge, traversal order

    def __post_init__(self):
        loc = np.array(self.location, dtype=np.float64).reshape(3)
        edges = np.array(self.edges, dtype=np.float64).reshape(-1, 2, 3)
        loc.setflags(write=False)
        edges.setflags(write=False)
        object.__setattr__(self, "location", loc)
        object.__setattr__(self, "edges", edges)


@dataclass(frozen=True)
class Scene:
    """Triangle soup plus (for staircase scenes) its ground truth."""

    triangles: np.ndarray  # (M, 3, 3)
    truth: GroundTruth = None

    def __post_init__(self):
        tris = np.array(self.triangles, dtype=np.float64).reshape(-1, 3, 3)
        tris.setflags(write=False)
        object.__setattr__(self, "triangles", tris)


def _quad(c0, c1, c2, c3):
    """Two triangles covering the (planar) quad c0-c1-c2-c3."""
    return [np.array([c0, c1, c2]), np.array([c0, c2, c3])]


def _rect_z(x0, x1, y0, y1, z):
    return _quad([x0, y0, z], [x1, y0, z], [x1, y1, z], [x0, y1, z])


def _frames(spec: StairSceneSpec):
    """Edge frame (R, t) per stair edge: frame i+1 advances d along frame
    i's +x, then yaws."""
    yaw = np.radians(spec.yaw_per_step)
    rot = np.array([[np.cos(yaw), -np.sin(yaw)], [np.sin(yaw), np.cos(yaw)]])
    frames = []
    r = np.eye(2)
    t = np.zeros(2)
    for _ in range(spec.n_steps + 1):
        frames.append((r, t))
        t = t + r @ np.array([spec.d, 0.0])
        r = r @ rot
    return frames


def _edge_endpoints(frame, w):
    r, t = frame
    return t + r @ np.array([0.0, -w / 2]), t + r @ np.array([0.0, w / 2])


def _lift(p_xy, z):
    return [p_xy[0], p_xy[1], z]


def _flight_surfaces(spec: StairSceneSpec):
    """Local-frame triangles and ground truth of one flight (no ground)."""
    n = spec.n_steps
    sgn = 1.0 if spec.direction == "ascending" else -1.0
    frames = _frames(spec)
    edge_z = [sgn * (i + 1) * spec.h for i in range(n + 1)]
    tris = []

    if spec.style == "solid":
        for i in range(n):
            lo_z = edge_z[i] - spec.h if sgn > 0 else edge_z[i] + spec.h
            a, b = _edge_endpoints(frames[i], spec.w)
            tris += _quad(_lift(a, lo_z), _lift(b, lo_z),
                          _lift(b, edge_z[i]), _lift(a, edge_z[i]))
    for i in range(n):
        a0, b0 = _edge_endpoints(frames[i], spec.w)
        a1, b1 = _edge_endpoints(frames[i + 1], spec.w)
        z = edge_z[i]
        tris += _quad(_lift(a0, z), _lift(b0, z), _lift(b1, z), _lift(a1, z))
    if spec.landing > 0:
        r, t = frames[n]
        fwd = r @ np.array([spec.landing, 0.0])
        a, b = _edge_endpoints(frames[n], spec.w)
        z = edge_z[n - 1]
        tris += _quad(_lift(a, z), _lift(b, z),
                      _lift(b + fwd, z), _lift(a + fwd, z))

    for box in spec.debris:
        r, t = frames[box.tread]
        depth, width, height = box.size
        ox, oy = box.offset
        z0 = edge_z[box.tread]
        corners = []
        for dx, dy in ((ox, oy - width / 2), (ox + depth, oy - width / 2),
                       (ox + depth, oy + width / 2), (ox, oy + width / 2)):
            corners.append(t + r @ np.array([dx, dy]))
        bot = [_lift(c, z0) for c in corners]
        top = [_lift(c, z0 + height) for c in corners]
        tris += _quad(*top)
        for k in range(4):
            k2 = (k + 1) % 4
            tris += _quad(bot[k], bot[k2], top[k2], top[k])

    # observable stair edges: the tread leading edges
    edges = np.empty((n, 2, 3))
    for i in range(n):
        a, b = _edge_endpoints(frames[i], spec.w)
        edges[i, 0] = _lift(a, edge_z[i])
        edges[i, 1] = _lift(b, edge_z[i])

    tris = [spec.pose.apply(tri) for tri in tris]
    edges = spec.pose.apply(edges.reshape(-1, 3)).reshape(n, 2, 3)
    truth = GroundTruth(
        direction=spec.direction, h=spec.h, d=spec.d, w=spec.w,
        phi=float(np.degrees(np.arctan2(spec.h, spec.d))),
        location=0.5 * (edges[0, 0] + edges[0, 1]), edges=edges)
    return tris, truth


def _ground_tris(extent, holes=()):
    """Square ground patch at z=0, minus axis-aligned rectangular holes."""
    if extent <= 0:
        return []
    half = extent / 2
    rects = [(-half, half, -half, half)]
    for hx0, hx1, hy0, hy1 in holes:
        nxt = []
        for x0, x1, y0, y1 in rects:
            gx0, gx1 = max(x0, hx0), min(x1, hx1)
            gy0, gy1 = max(y0, hy0), min(y1, hy1)
            if gx0 >= gx1 or gy0 >= gy1:
                nxt.append((x0, x1, y0, y1))
                continue
            if x0 < gx0:
                nxt.append((x0, gx0, y0, y1))
            if gx1 < x1:
                nxt.append((gx1, x1, y0, y1))
            if y0 < gy0:
                nxt.append((gx0, gx1, y0, gy0))
            if gy1 < y1:
                nxt.append((gx0, gx1, gy1, y1))
        rects = nxt
    tris = []
    for x0, x1, y0, y1 in rects:
        tris += _rect_z(x0, x1, y0, y1, 0.0)
    return tris


def _flight_hole(tris):
    """World-xy bounding box of a flight's triangles."""
    pts = np.concatenate([np.asarray(t).reshape(-1, 3) for t in tris])
    return (pts[:, 0].min(), pts[:, 0].max(), pts[:, 1].min(), pts[:, 1].max())


def build_scene(spec: StairSceneSpec) -> Scene:
    """Construct the staircase (and its ground plane) as triangles.

    For a descending flight the ground plane gets a cutout under the flight's
    footprint so the stairwell is not roofed over.
    """
    tris, truth = _flight_surfaces(spec)
    holes = [_flight_hole(tris)] if spec.direction == "descending" else []
    tris = tris + _ground_tris(spec.ground_extent, holes)
    return Scene(np.array(tris), truth)


def build_bidirectional_scene(up: StairSceneSpec, down: StairSceneSpec):
    """One scene containing an ascending and a descending flight.

    Returns (scene, truth_up, truth_down); the shared ground comes from
    ``up.ground_extent`` with a cutout under the descending flight.
    """
    if up.direction != "ascending" or down.direction != "descending":
        raise InvalidSpecError("need one ascending and one descending spec")
    tris_up, truth_up = _flight_surfaces(up)
    tris_down, truth_down = _flight_surfaces(down)
    tris = tris_up + tris_down + _ground_tris(
        up.ground_extent, [_flight_hole(tris_down)])
    return Scene(np.array(tris)), truth_up, truth_down


def _sample_triangles(triangles, density, noise_sigma, seed, viewpoint):
    """Uniform surface sampling, one child RNG stream per triangle.

    Sample counts are Poisson(area·density); with a viewpoint set, samples
    whose sight line is interrupted >1 cm before the surface are discarded
    (tested against the noise-free positions).
    """
    triangles = np.asarray(triangles, dtype=np.float64)
    children = np.random.SeedSequence(seed).spawn(len(triangles))
    clean_parts = []
    noisy_parts = []
    for k, tri in enumerate(triangles):
        a, b, c = tri
        area = 0.5 * np.linalg.norm(np.cross(b - a, c - a))
        if area <= 0:
            continue
        rng = np.random.default_rng(children[k])
        count = rng.poisson(area * density)
        if count == 0:
            continue
        u = rng.random(count)
        v = rng.random(count)
        su = np.sqrt(u)
        pts = ((1 - su)[:, None] * a + (su * (1 - v))[:, None] * b
               + (su * v)[:, None] * c)
        clean_parts.append(pts)
        if noise_sigma > 0:
            noisy_parts.append(pts + rng.normal(0.0, noise_sigma, pts.shape))
        else:
            noisy_parts.append(pts)
    if not clean_parts:
        return np.empty((0, 3))
    clean = np.concatenate(clean_parts)
    noisy = np.concatenate(noisy_parts)
    if viewpoint is not None:
        mask = geom.visible_mask(np.asarray(viewpoint, dtype=np.float64),
                                 clean, triangles)
        noisy = noisy[mask]
    return noisy


def sample_lidar(scene: Scene, spec: StairSceneSpec) -> PointCloud:
    """Sample a scene into a point cloud per the spec's sampling settings."""
    xyz = _sample_triangles(scene.triangles, spec.density, spec.noise_sigma,
                            spec.seed, spec.viewpoint)
    return PointCloud(xyz)


def make_cloud(spec: StairSceneSpec) -> PointCloud:
    """build_scene + sample_lidar in one call."""
    return sample_lidar(build_scene(spec), spec)


def negative_scene(kind: str, seed: int = 0, density: float = 24000.0,
                   noise_sigma: float = 0.0125) -> PointCloud:
    """A stair-free scene: 'flat', 'wall', 'ramp' or 'boxes'.

    The ramp slope sits inside the admissible staircase slope range on
    purpose — only the absence of discrete steps distinguishes it.
    """
    if kind not in NEGATIVE_KINDS:
        raise InvalidSpecError(f"unknown negative scene kind {kind!r}")
    rng = np.random.default_rng([seed, NEGATIVE_KINDS.index(kind)])
    tris = _ground_tris(7.0)
    if kind == "wall":
        azim = rng.uniform(0, 2 * np.pi)
        dist = rng.uniform(1.5, 3.0)
        along = rng.uniform(0, np.pi)
        width = rng.uniform(2.0, 4.0)
        height = rng.uniform(1.0, 2.0)
        center = dist * np.array([np.cos(azim), np.sin(azim)])
        u = np.array([np.cos(along), np.sin(along)])
        a = center - u * width / 2
        b = center + u * width / 2
        tris += _quad(_lift(a, 0), _lift(b, 0), _lift(b, height), _lift(a, height))
    elif kind == "ramp":
        azim = rng.uniform(0, 2 * np.pi)
        dist = rng.uniform(1.5, 2.5)
        yaw = np.degrees(azim) + rng.uniform(-30, 30)
        slope = np.radians(rng.uniform(26.0, 34.0))
        rise = 1.2
        run = rise / np.tan(slope)
        width = 2.5
        pose = RigidPose.from_yaw(
            yaw, (dist * np.cos(azim), dist * np.sin(azim), 0.0))
        base = [(0.0, -width / 2, 0.0), (0.0, width / 2, 0.0)]
        top = [(run, width / 2, rise), (run, -width / 2, rise)]
        plateau = [(run + 1.5, width / 2, rise), (run + 1.5, -width / 2, rise)]
        tris += _quad(*(pose.apply(np.array(p)) for p in base + top))
        tris += _quad(*(pose.apply(np.array(p)) for p in
                        [top[1], top[0], plateau[0], plateau[1]]))
    elif kind == "boxes":
        count = int(rng.integers(4, 7))
        heights = [0.45, 0.95, 1.5]
        base_angle = rng.uniform(0, 2 * np.pi)
        for k in range(count):
            azim = base_angle + 2 * np.pi * k / count
            dist = rng.uniform(1.5, 3.5)
            center = dist * np.array([np.cos(azim), np.sin(azim)])
            height = heights[k % 3] + rng.uniform(-0.05, 0.05)
            sx = rng.uniform(0.4, 0.8)
            sy = rng.uniform(0.4, 0.8)
            yaw = rng.uniform(0, np.pi)
            u = np.array([np.cos(yaw), np.sin(yaw)])
            v = np.array([-np.sin(yaw), np.cos(yaw)])
            corners = [center + sx / 2 * su * u + sy / 2 * sv * v
                       for su, sv in ((-1, -1), (1, -1), (1, 1), (-1, 1))]
            bot = [_lift(c, 0.0) for c in corners]
            top = [_lift(c, height) for c in corners]
            tris += _quad(*top)
            for k2 in range(4):
                k3 = (k2 + 1) % 4
                tris += _quad(bot[k2], bot[k3], top[k3], top[k2])
    xyz = _sample_triangles(np.array(tris), density, noise_sigma, seed, None)
    return PointCloud(xyz)


def canonical_scene_specs() -> dict:
    """One representative spec per scene class, 2 m in front of the sensor."""
    pose = RigidPose.from_yaw(0.0, (2.0, 0.0, 0.0))
    return {
        "ascending": StairSceneSpec(n_steps=6, h=0.17, d=0.29, w=1.0, pose=pose),
        "hollow": StairSceneSpec(n_steps=6, h=0.17, d=0.29, w=1.0,
                                 style="hollow", pose=pose),
        "spiral": StairSceneSpec(n_steps=10, h=0.17, d=0.30, w=1.1,
                                 yaw_per_step=8.0, pose=pose),
        "descending": StairSceneSpec(n_steps=6, h=0.17, d=0.29, w=1.0,
                                     direction="descending", pose=pose),
        "debris": StairSceneSpec(
            n_steps=8, h=0.17, d=0.29, w=1.0, pose=pose,
            debris=(DebrisSpec(tread=4, size=(0.15, 0.30, 0.25)),
                    DebrisSpec(tread=5, size=(0.15, 0.30, 0.12)),
                    DebrisSpec(tread=6, size=(0.15, 0.30, 0.02)))),
    }


# --- JSON round-trip ---------------------------------------------------------

_SPEC_KEYS = ("n_steps", "h", "d", "w", "direction", "style", "yaw_per_step",
              "debris", "pose", "ground_extent", "landing", "density",
              "noise_sigma", "seed", "viewpoint")


def spec_to_dict(spec: StairSceneSpec) -> dict:
    return {
        "n_steps": spec.n_steps, "h": spec.h, "d": spec.d, "w": spec.w,
        "direction": spec.direction, "style": spec.style,
        "yaw_per_step": spec.yaw_per_step,
        "debris": [{"tread": b.tread, "offset": list(b.offset),
                    "size": list(b.size)} for b in spec.debris],
        "pose": {"rotation": spec.pose.rotation.tolist(),
                 "translation": spec.pose.translation.tolist()},
        "ground_extent": spec.ground_extent, "landing": spec.landing,
        "density": spec.density, "noise_sigma": spec.noise_sigma,
        "seed": spec.seed,
        "viewpoint": None if spec.viewpoint is None else list(spec.viewpoint),
    }


def _pose_from_dict(d) -> RigidPose:
    try:
        translation = d.get("translation", (0.0, 0.0, 0.0))
        if "rotation" in d:
            return RigidPose(np.asarray(d["rotation"], dtype=np.float64), translation)
        return RigidPose.from_yaw(float(d.get("yaw_deg", 0.0)), translation)
    except (TypeError, ValueError) as exc:
        raise InvalidSpecError(f"bad pose: {exc}") from None


def spec_from_dict(data: dict) -> StairSceneSpec:
    if not isinstance(data, dict):
        raise InvalidSpecError("scene spec must be a JSON object")
    unknown = set(data) - set(_SPEC_KEYS)
    if unknown:
        raise InvalidSpecError(f"unknown scene spec key(s) {sorted(unknown)}")
    kwargs = dict(data)
    if "debris" in kwargs:
        try:
            kwargs["debris"] = tuple(
                DebrisSpec(tread=int(b["tread"]),
                           offset=tuple(b.get("offset", (0.05, 0.0))),
                           size=tuple(b.get("size", (0.15, 0.30, 0.25))))
                for b in kwargs["debris"])
        except (TypeError, KeyError) as exc:
            raise InvalidSpecError(f"bad debris entry: {exc}") from None
    if "pose" in kwargs:
        kwargs["pose"] = _pose_from_dict(kwargs["pose"])
    if kwargs.get("viewpoint") is not None:
        kwargs["viewpoint"] = tuple(kwargs["viewpoint"])
    try:
        return StairSceneSpec(**kwargs)
    except TypeError as exc:
        raise InvalidSpecError(str(exc)) from None


def truth_to_dict(truth: GroundTruth) -> dict:
    return {
        "direction": truth.direction, "h": truth.h, "d": truth.d,
        "w": truth.w, "phi": truth.phi,
        "location": truth.location.tolist(), "edges": truth.edges.tolist(),
    }


def truth_from_dict(d: dict) -> GroundTruth:
    return GroundTruth(direction=str(d["direction"]), h=float(d["h"]),
                       d=float(d["d"]), w=float(d["w"]), phi=float(d["phi"]),
                       location=np.asarray(d["location"], dtype=np.float64),
                       edges=np.asarray(d["edges"], dtype=np.float64))
