"""Point-count reduction ahead of line extraction.

The stages run in order: voxel downsampling (see stairscan.cloud), top-surface
filtering (one point per xy cell), and cylindrical projection into a sparse
polar grid that keeps the nearest return per (z-row, azimuth) cell.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .cloud import PointCloud

# Returns closer than this to the sensor axis are discarded: they come from
# the robot body or produce unusable azimuth resolution.
RHO_MIN = 0.05


def top_surface_filter(cloud: PointCloud, cell: float) -> PointCloud:
    """Keep only the highest point of every xy cell.

    Walkable structure is seen from above; dropping everything below the top
    surface removes riser faces and clutter underneath while preserving the
    tread-edge geometry. Ties keep the earliest point; output is ordered by
    cell.
    """
    if cell <= 0:
        raise ValueError(f"cell must be positive, got {cell}")
    idx = kernels.top_surface_indices(cloud.xyz, cell)
    return PointCloud(cloud.xyz[idx], cloud.frame_id)


@dataclass(frozen=True, eq=False)
class PolarGrid:
    """Sparse cylindrical range image around the sensor's vertical axis.

    One entry per occupied (row, col) cell, sorted by (row, col):
    ``rows[k]``/``cols[k]`` index the cell, ``points[k]`` is the winning
    (nearest) 3D point and ``rho[k]`` its horizontal range. Rows partition z
    into slices of height ``z_res`` starting at ``z0``; columns partition
    azimuth into ``theta_bins`` equal bins starting at -180°.
    """

    z0: float
    z_res: float
    theta_bins: int
    rows: np.ndarray
    cols: np.ndarray
    points: np.ndarray
    rho: np.ndarray

    def __len__(self) -> int:
        return self.rows.shape[0]

    @property
    def bin_width(self) -> float:
        """Azimuth bin width in radians."""
        return 2.0 * np.pi / self.theta_bins

    def row_z(self, row) -> float:
        """Center height of a row."""
        return self.z0 + (np.asarray(row) + 0.5) * self.z_res

    def iter_rows(self):
        """Yield (row_id, points, cols) per occupied row, in row order."""
        n = len(self)
        if n == 0:
            return
        starts = np.flatnonzero(np.r_[True, self.rows[1:] != self.rows[:-1]])
        stops = np.r_[starts[1:], n]
        for a, b in zip(starts, stops):
            yield int(self.rows[a]), self.points[a:b], self.cols[a:b]

    def to_cloud(self, frame_id: str = "robot") -> PointCloud:
        """The surviving points as a cloud (debugging/visualization)."""
        return PointCloud(self.points, frame_id)


def cylindrical_project(cloud: PointCloud, z_res: float = 0.025,
                        theta_bins: int = 720, z0=None) -> PolarGrid:
    """Project a cloud into a PolarGrid keeping the nearest return per cell.

    ``z0`` anchors row 0; it defaults to the cloud's minimum z so rows are
    non-negative. Points with horizontal range below RHO_MIN are discarded.
    """
    if z_res <= 0:
        raise ValueError(f"z_res must be positive, got {z_res}")
    if theta_bins < 8:
        raise ValueError(f"theta_bins must be at least 8, got {theta_bins}")
    if z0 is None:
        z0 = float(cloud.xyz[:, 2].min()) if len(cloud) else 0.0
    idx, rows, cols, rho = kernels.polar_min_range(
        cloud.xyz, z0, z_res, theta_bins, RHO_MIN)
    return PolarGrid(z0=float(z0), z_res=float(z_res), theta_bins=int(theta_bins),
                     rows=rows, cols=cols, points=cloud.xyz[idx], rho=rho)
