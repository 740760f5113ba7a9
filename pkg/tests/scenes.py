"""Deterministic scene builders shared by the tests.

Every builder derives its RNG from (seed, crc32(label)) so the generated
scenes are stable across runs and machines regardless of hash seeding.
"""
import zlib
from dataclasses import replace

import numpy as np

from stairscan.cloud import PointCloud, RigidPose
from stairscan.detect import Staircase, estimate_params
from stairscan.lines import normal_form_from_endpoints, segment_from_points
from stairscan.synth import DebrisSpec, StairSceneSpec, build_bidirectional_scene, sample_lidar

SCENE_CLASSES = ("ascending", "hollow", "spiral", "descending", "debris")


def _class_rng(label, seed):
    return np.random.default_rng([seed, zlib.crc32(label.encode()) % 2 ** 16])


def random_spec(cls, seed):
    """A randomized scene spec of one class, plus its key truth numbers.

    Pose (azimuth, approach yaw, distance) and viewpoint height are drawn
    per seed; geometry stays within common building-code stair dimensions.
    Returns (spec, (h, d, w, n_steps, dist, dyaw)).
    """
    rng = _class_rng(cls, seed)
    h = rng.uniform(0.14, 0.22)
    d = rng.uniform(max(0.18, h / np.tan(np.radians(55.0))),
                    min(0.40, h / np.tan(np.radians(28.0))))
    w = rng.uniform(0.8, 1.4)
    n = int(rng.integers(5, 9))
    az = rng.uniform(0, 2 * np.pi)
    dyaw = rng.uniform(-50, 50)
    zs = rng.uniform(0.8, 1.8)
    if cls == "descending":
        # keep the flight out of the rim's occlusion shadow: edges below
        # ground are visible only while dist < sensor_z * d/h, and oblique
        # approaches shorten the usable window by cos(dyaw)
        dyaw = rng.uniform(-35, 35)
        zs = rng.uniform(1.2, 2.0)
        dist = max(0.6, rng.uniform(0.5, 0.85) * zs * (d / h)
                   * np.cos(np.radians(dyaw)))
    else:
        dist = rng.uniform(1.2, 3.0)
    yaw = np.degrees(az) + dyaw
    pose = RigidPose.from_yaw(yaw, (dist * np.cos(az), dist * np.sin(az), 0.0))
    kw = dict(n_steps=n, h=h, d=d, w=w, pose=pose, seed=seed,
              viewpoint=(0.0, 0.0, zs))
    if cls == "hollow":
        kw["style"] = "hollow"
    elif cls == "descending":
        kw["direction"] = "descending"
    elif cls == "spiral":
        kw["n_steps"] = int(rng.integers(7, 11))
        kw["yaw_per_step"] = float(rng.choice([-1, 1]) * rng.uniform(4, 9))
        kw["w"] = rng.uniform(1.0, 1.4)
    elif cls == "debris":
        boxes = []
        for tread in rng.choice(np.arange(1, n), size=min(2, n - 1),
                                replace=False):
            sx = min(rng.uniform(0.10, 0.18), 0.5 * d)
            sy = min(rng.uniform(0.18, 0.32), 0.4 * w)
            sz = rng.uniform(0.02, 0.28)
            off_y = rng.uniform(-0.25, 0.25) * w
            boxes.append(DebrisSpec(tread=int(tread), offset=(0.05, off_y),
                                    size=(sx, sy, sz)))
        kw["debris"] = tuple(boxes)
    return StairSceneSpec(**kw), (h, d, w, kw["n_steps"], dist, dyaw)


def random_bidirectional(seed):
    """A scene with one ascending and one descending flight around the sensor.

    Returns (cloud, up_spec, down_spec).
    """
    rng = _class_rng("bidirectional", seed)
    zs = rng.uniform(1.2, 1.8)

    def flight(direction, az):
        h = rng.uniform(0.14, 0.22)
        d = rng.uniform(max(0.18, h / np.tan(np.radians(55.0))),
                        min(0.40, h / np.tan(np.radians(28.0))))
        w = rng.uniform(0.8, 1.4)
        n = int(rng.integers(5, 9))
        dyaw = rng.uniform(-30, 30)
        if direction == "descending":
            dist = max(0.6, rng.uniform(0.5, 0.85) * zs * (d / h)
                       * np.cos(np.radians(dyaw)))
        else:
            dist = rng.uniform(1.5, 3.0)
        pose = RigidPose.from_yaw(np.degrees(az) + dyaw,
                                  (dist * np.cos(az), dist * np.sin(az), 0.0))
        return StairSceneSpec(n_steps=n, h=h, d=d, w=w, pose=pose, seed=seed,
                              direction=direction, viewpoint=(0.0, 0.0, zs))

    az0 = rng.uniform(0, 2 * np.pi)
    up = flight("ascending", az0)
    down = flight("descending", az0 + np.pi + rng.uniform(-0.5, 0.5))
    scene, _, _ = build_bidirectional_scene(up, down)
    return sample_lidar(scene, up), up, down


def easy_spec(seed, salt):
    """A well-posed ascending flight (moderate slope, frontal-ish approach).

    Returns (spec, (h, d, w, n_steps)). ``salt`` decouples the RNG streams
    of scenes that must be independent draws of the same seed.
    """
    rng = _class_rng(salt, seed)
    h = rng.uniform(0.15, 0.21)
    d = rng.uniform(max(0.20, h / np.tan(np.radians(50.0))),
                    min(0.38, h / np.tan(np.radians(30.0))))
    w = rng.uniform(0.9, 1.4)
    n = int(rng.integers(7, 10))
    az = rng.uniform(0, 2 * np.pi)
    dyaw = rng.uniform(-25, 25)
    dist = rng.uniform(1.8, 2.6)
    pose = RigidPose.from_yaw(np.degrees(az) + dyaw,
                              (dist * np.cos(az), dist * np.sin(az), 0.0))
    spec = StairSceneSpec(n_steps=n, h=h, d=d, w=w, pose=pose,
                          seed=seed + 7 * len(salt),
                          viewpoint=(0.0, 0.0, rng.uniform(1.0, 1.6)))
    return spec, (h, d, w, n)


def zcrop(cloud, zlo, zhi):
    """The cloud restricted to zlo <= z <= zhi (emulates a limited z FOV)."""
    m = (cloud.xyz[:, 2] >= zlo) & (cloud.xyz[:, 2] <= zhi)
    return PointCloud(cloud.xyz[m], cloud.frame_id)


def substair(stc, lines):
    """A staircase built from a subset of another's stair lines."""
    lines = list(lines)
    return Staircase(stairs=tuple(lines), direction=stc.direction,
                     model=estimate_params(lines))


def shifted(stc, off_xy):
    """The staircase rigidly translated in the xy plane."""
    out = []
    for l in stc.stairs:
        ps = l.p_s + np.r_[off_xy, 0.0]
        pe = l.p_e + np.r_[off_xy, 0.0]
        psi, r = normal_form_from_endpoints(ps[:2], pe[:2])
        out.append(replace(l, p_s=ps, p_e=pe, psi=psi, r=r, points=None))
    return Staircase(stairs=tuple(out), direction=stc.direction,
                     model=estimate_params(out))


def ideal_stair_lines(n=6, h=0.17, d=0.29, w=1.0, x0=2.0, pose=None,
                      points_per_edge=25, sigma=0.005):
    """Noise-free stair-edge segments of a straight ascending flight.

    Edge i runs laterally at x = x0 + i*d, z = (i+1)*h; an optional pose
    moves the whole set rigidly.
    """
    lines = []
    for i in range(n):
        y = np.linspace(-w / 2, w / 2, points_per_edge)
        pts = np.column_stack([np.full_like(y, x0 + i * d), y,
                               np.full_like(y, (i + 1) * h)])
        if pose is not None:
            pts = pose.apply(pts)
        lines.append(segment_from_points(pts, sigma, float(pts[:, 2].mean())))
    return lines
