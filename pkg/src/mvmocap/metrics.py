"""Evaluation measures: per-frame 3D error, sequence mean, per-view 2D error.

All 3D errors are mean absolute Euclidean distances in millimeters over
the joints reconstructed on both sides; joints missing on either side are
excluded rather than penalized. 2D errors are mean pixel distances between
detected joints and reprojections of the estimated 3D joints, reported per
view.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .skeleton import Skeleton3D


class NoComparableJoints(ValueError):
    """No joint is present on both sides of a comparison."""


class EmptySequence(ValueError):
    """A sequence mean was requested over zero frames."""


@dataclass
class ErrorReport:
    """Aggregated evaluation results for one sequence."""

    per_frame_3d: list[float]
    sequence_mean_3d: float
    per_view_2d: dict[int, float]
    joint_count: int

    @classmethod
    def build(cls, per_frame_3d: list[float], per_view_2d: dict[int, float], joint_count: int) -> "ErrorReport":
        return cls(
            per_frame_3d=list(per_frame_3d),
            sequence_mean_3d=sequence_mean(per_frame_3d),
            per_view_2d=dict(per_view_2d),
            joint_count=int(joint_count),
        )


def mean_abs_3d_err(estimated: Skeleton3D, truth: Skeleton3D) -> float:
    """Mean Euclidean distance in mm over joints present on both sides."""
    shared = [i for i in estimated.statuses if estimated.joint_ok(i) and truth.joint_ok(i)]
    if not shared:
        raise NoComparableJoints("no joint is reconstructed in both skeletons")
    total = 0.0
    for i in shared:
        total += float(np.linalg.norm(estimated.positions[i] - truth.positions[i]))
    return total / len(shared)


def sequence_mean(per_frame: list[float]) -> float:
    """Arithmetic mean of per-frame errors."""
    if len(per_frame) == 0:
        raise EmptySequence("cannot average an empty sequence")
    return float(np.mean(np.asarray(per_frame, dtype=float)))


def avg_2d_err(
    detected: dict[int, dict[int, np.ndarray]],
    reprojected: dict[int, dict[int, np.ndarray]],
) -> dict[int, float]:
    """Per-view mean pixel distance between detections and reprojections.

    Both arguments map view id -> joint index -> (u, v). Only joints
    present in both maps for a view are compared; views with no matched
    joints are omitted. Raises NoComparableJoints when nothing matches in
    any view.
    """
    out: dict[int, float] = {}
    for view_id in sorted(set(detected) | set(reprojected)):
        det = detected.get(view_id, {})
        rep = reprojected.get(view_id, {})
        shared = sorted(set(det) & set(rep))
        if not shared:
            continue
        total = 0.0
        for j in shared:
            total += float(np.linalg.norm(np.asarray(det[j], dtype=float) - np.asarray(rep[j], dtype=float)))
        out[view_id] = total / len(shared)
    if not out:
        raise NoComparableJoints("no view has matched detected/reprojected joints")
    return out
