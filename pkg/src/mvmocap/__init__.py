"""Markerless multi-view motion capture.

Reconstructs 3D human joints from calibrated multi-view 2D detections by
iterative voxel-space subdivision, converts skeletons to animation-ready
per-bone transforms against a T-pose template, and evaluates accuracy with
3D and reprojection error metrics.
"""

from .geometry import (
    CameraParams,
    ConvexRegion,
    NonPositiveDepth,
    backproject,
    convex_hull,
    cube_projection_region,
    project,
    project_points,
    region_contains,
)
from .metrics import ErrorReport, avg_2d_err, mean_abs_3d_err, sequence_mean
from .retarget import (
    BoneTransformSet,
    DegenerateParallel,
    chain_rotations,
    frame_from_bone,
    retarget_frame,
    retarget_sequence,
    spin_correct,
    to_global,
)
from .skeleton import (
    Skeleton3D,
    SkeletonTopology,
    TPoseTemplate,
    bone_vector,
    default_template,
    default_topology,
)
from .synth import SyntheticScene, dlt_triangulate, generate_scene, render_observations
from .voxel import (
    Cube,
    EstimatorConfig,
    JointEstimate,
    JointObservation,
    JointObservationFrame,
    count_votes,
    estimate_joint,
    estimate_skeleton,
)

__version__ = "0.1.0"
