"""stairscan: real-time staircase detection in 3D LiDAR point clouds.

Pipeline: voxel downsample → top-surface filter → cylindrical projection →
row-wise line extraction → geometric stair chaining → step model estimation,
plus covariance-weighted merging of repeated detections and a synthetic scene
generator with exact ground truth for testing and benchmarking.
"""
from . import errors, kernels
from .cloud import PointCloud, RigidPose, transform, voxel_downsample
from .config import (MergeThresholds, RunConfig, StairThresholds,
                     config_from_dict, config_to_dict, load_config, save_config)
from .detect import (ASCENDING, DESCENDING, DetectionResult, StairLink,
                     Staircase, StaircaseModel, alpha_gap_deg, detect,
                     detect_ascending, detect_descending, estimate_params,
                     result_from_dict, result_to_dict, stair_relation,
                     staircase_from_dict, staircase_to_dict, validate_staircase)
from .lines import (LineGroups, LineSegment, extract_lines, fit_weighted_line,
                    fuse_segments, group_by_height, mahalanobis_gap,
                    merge_collinear, segment_from_points, split_iepf)
from .merging import merge_staircases, same_stair
from .pcd import load_pcd, save_pcd
from .ply import save_line_ply, save_marker_ply
from .preprocess import (RHO_MIN, PolarGrid, cylindrical_project,
                         top_surface_filter)
from .synth import (DebrisSpec, GroundTruth, Scene, StairSceneSpec,
                    build_bidirectional_scene, build_scene,
                    canonical_scene_specs, make_cloud, negative_scene,
                    sample_lidar, spec_from_dict, spec_to_dict,
                    truth_from_dict, truth_to_dict)

__version__ = "0.1.0"

__all__ = [
    "ASCENDING", "DESCENDING", "RHO_MIN",
    "PointCloud", "RigidPose", "transform", "voxel_downsample",
    "load_pcd", "save_pcd", "save_line_ply", "save_marker_ply",
    "PolarGrid", "top_surface_filter", "cylindrical_project",
    "LineGroups", "LineSegment", "extract_lines", "fit_weighted_line",
    "fuse_segments", "group_by_height", "mahalanobis_gap", "merge_collinear",
    "segment_from_points", "split_iepf",
    "StairLink", "Staircase", "StaircaseModel", "StairThresholds",
    "alpha_gap_deg", "detect", "detect_ascending", "detect_descending",
    "estimate_params", "stair_relation", "validate_staircase",
    "DetectionResult", "result_from_dict", "result_to_dict",
    "staircase_from_dict", "staircase_to_dict",
    "MergeThresholds", "merge_staircases", "same_stair",
    "DebrisSpec", "GroundTruth", "Scene", "StairSceneSpec",
    "build_bidirectional_scene", "build_scene", "canonical_scene_specs",
    "make_cloud", "negative_scene", "sample_lidar",
    "spec_from_dict", "spec_to_dict", "truth_from_dict", "truth_to_dict",
    "RunConfig", "config_from_dict", "config_to_dict", "load_config",
    "save_config", "errors", "kernels", "__version__",
]
