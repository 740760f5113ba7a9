"""Point-cloud container and rigid-motion utilities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


def _as_points(a) -> np.ndarray:
    pts = np.asarray(a, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected an (N, 3) array of points, got shape {pts.shape}")
    if pts.size and not np.isfinite(pts).all():
        raise ValueError("point coordinates must be finite")
    return pts


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Immutable set of 3D points in a named frame.

    ``xyz`` is an (N, 3) float64 array; the buffer is marked read-only so a
    cloud can be shared between pipeline stages without defensive copies.
    Non-finite coordinates are rejected — file readers drop them before
    construction.
    """

    xyz: np.ndarray
    frame_id: str = "robot"

    def __post_init__(self):
        pts = _as_points(self.xyz)
        if pts is self.xyz and pts.flags.writeable:
            pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "xyz", pts)

    def __len__(self) -> int:
        return self.xyz.shape[0]


@dataclass(frozen=True, eq=False)
class RigidPose:
    """Proper rigid motion p ↦ R p + t."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-9):
            raise ValueError("rotation must be orthonormal")
        if not np.isclose(np.linalg.det(rot), 1.0, atol=1e-9):
            raise ValueError("rotation must be proper (det = +1)")
        rot.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "RigidPose":
        return RigidPose(np.eye(3), np.zeros(3))

    @staticmethod
    def from_yaw(yaw_deg: float, translation=(0.0, 0.0, 0.0)) -> "RigidPose":
        """Rotation about +z by yaw_deg degrees, then translation."""
        c = np.cos(np.radians(yaw_deg))
        s = np.sin(np.radians(yaw_deg))
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return RigidPose(rot, translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (N, 3) array (or a single (3,) point)."""
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def compose(self, other: "RigidPose") -> "RigidPose":
        """self ∘ other (apply ``other`` first)."""
        return RigidPose(self.rotation @ other.rotation,
                         self.rotation @ other.translation + self.translation)


def transform(cloud: PointCloud, pose: RigidPose) -> PointCloud:
    """Apply a rigid motion to every point; frame_id is preserved."""
    return PointCloud(pose.apply(cloud.xyz), cloud.frame_id)


def voxel_downsample(cloud: PointCloud, leaf: float) -> PointCloud:
    """Replace the points of each leaf-sized voxel by their centroid.

    Voxels are half-open boxes on a grid anchored at the origin; output points
    are ordered by voxel index. Idempotent: a centroid stays in its own cell.
    """
    if leaf <= 0:
        raise ValueError(f"leaf must be positive, got {leaf}")
    return PointCloud(kernels.voxel_centroids(cloud.xyz, leaf), cloud.frame_id)
