"""Synthetic scenes with known ground truth, plus an independent DLT oracle.

Scenes stand in for a physical capture rig: five 1920x1080 cameras on a
ring around the origin, plus parametric body motion built by rotating
template bones rigidly (so bone lengths are constant by construction).
Observations are exact projections of the truth with optional pixel-space
Gaussian noise and per-joint dropout, which mimics a 2D detector.

Everything is deterministic given the seed; per-frame noise uses derived
sub-seeds so frames can be rendered independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CameraParams, project
from .mathutil import rotation_about_axis, unit
from .skeleton import (
    ROOT_JOINT,
    T_POSE_STATURE_MM,
    Skeleton3D,
    default_topology,
    tpose_positions,
)
from .voxel import JointObservation, JointObservationFrame

PRESETS = ("tpose-static", "walk", "wave", "squat")

_RING_VIEWS = 5
_RING_RADIUS_MM = 3000.0
_RING_HEIGHT_MM = 620.0  # roughly 1.5 m above the feet
_RESOLUTION = (1920, 1080)
_FOCAL_PX = 1000.0

_X = np.array([1.0, 0.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])


class UnknownPreset(ValueError):
    """Requested motion preset does not exist."""


class RankDeficient(ValueError):
    """Triangulation geometry does not pin down a unique point."""


@dataclass
class SyntheticScene:
    cameras: list[CameraParams]
    truth: list[Skeleton3D]
    noise_px: float
    dropout: float
    rng_seed: int
    preset: str


def camera_ring(
    count: int = _RING_VIEWS,
    radius_mm: float = _RING_RADIUS_MM,
    height_mm: float = _RING_HEIGHT_MM,
    resolution: tuple[int, int] = _RESOLUTION,
    focal_px: float = _FOCAL_PX,
) -> list[CameraParams]:
    """Evenly spaced cameras on a ring, all aimed at the origin."""
    w, h = resolution
    K = np.array([[focal_px, 0.0, w / 2.0], [0.0, focal_px, h / 2.0], [0.0, 0.0, 1.0]])
    up = np.array([0.0, 1.0, 0.0])
    cams = []
    for i in range(count):
        angle = 2.0 * np.pi * i / count
        center = np.array([radius_mm * np.sin(angle), height_mm, radius_mm * np.cos(angle)])
        z_axis = unit(-center)  # look at the origin
        x_axis = unit(np.cross(z_axis, up))
        y_axis = np.cross(z_axis, x_axis)
        R = np.stack([x_axis, y_axis, z_axis])
        t = -R @ center
        cams.append(CameraParams(id=i, intrinsic=K, rotation=R, translation=t, resolution=resolution))
    return cams


def _pose_from_rotations(
    bone_rotations: dict[str, np.ndarray],
    root_offset: np.ndarray,
    stature_mm: float,
) -> dict[int, np.ndarray]:
    """Place joints by rotating template bone offsets rigidly.

    bone_rotations maps bone name -> global rotation applied to that
    bone's template offset; unspecified bones stay at rest. Hip joints
    ride on the torso rotation so the pelvis stays rigid.
    """
    template = tpose_positions(stature_mm)
    topology = default_topology()
    torso_rot = bone_rotations.get("torso", np.eye(3))
    positions = {ROOT_JOINT: template[ROOT_JOINT] + root_offset}
    for hip in (8, 11):
        positions[hip] = positions[ROOT_JOINT] + torso_rot @ (template[hip] - template[ROOT_JOINT])
    for bone in topology.bones_topological():
        rot = bone_rotations.get(bone.name, np.eye(3))
        offset = template[bone.child_joint] - template[bone.parent_joint]
        positions[bone.child_joint] = positions[bone.parent_joint] + rot @ offset
    return positions


def _walk_rotations(phase: float) -> tuple[dict[str, np.ndarray], np.ndarray]:
    swing = np.deg2rad(25.0) * np.sin(phase)
    knee_r = np.deg2rad(20.0) * max(0.0, np.sin(phase))
    knee_l = np.deg2rad(20.0) * max(0.0, -np.sin(phase))
    arm = np.deg2rad(15.0) * np.sin(phase)
    rot = {
        "r_upper_leg": rotation_about_axis(_X, swing),
        "r_lower_leg": rotation_about_axis(_X, swing + knee_r),
        "l_upper_leg": rotation_about_axis(_X, -swing),
        "l_lower_leg": rotation_about_axis(_X, -swing + knee_l),
        "r_upper_arm": rotation_about_axis(_X, -arm),
        "r_lower_arm": rotation_about_axis(_X, -arm),
        "l_upper_arm": rotation_about_axis(_X, arm),
        "l_lower_arm": rotation_about_axis(_X, arm),
    }
    return rot, np.zeros(3)


def _wave_rotations(phase: float) -> tuple[dict[str, np.ndarray], np.ndarray]:
    raise_angle = np.deg2rad(60.0) * 0.5 * (1.0 - np.cos(phase))
    wave = np.deg2rad(30.0) * np.sin(2.0 * phase)
    rot = {
        "l_upper_arm": rotation_about_axis(_Z, raise_angle),
        "l_lower_arm": rotation_about_axis(_Z, raise_angle + wave),
    }
    return rot, np.zeros(3)


def _squat_rotations(phase: float) -> tuple[dict[str, np.ndarray], np.ndarray]:
    bend = np.deg2rad(50.0) * 0.5 * (1.0 - np.cos(phase))
    thigh = rotation_about_axis(_X, -bend)
    shank = rotation_about_axis(_X, bend)
    rot = {
        "r_upper_leg": thigh,
        "l_upper_leg": thigh,
        "r_lower_leg": shank,
        "l_lower_leg": shank,
    }
    leg_len = 430.0 + 450.0  # template thigh + shank
    drop = np.array([0.0, -(1.0 - np.cos(bend)) * leg_len, 0.0])
    return rot, drop


_MOTIONS = {
    "tpose-static": lambda phase: ({}, np.zeros(3)),
    "walk": _walk_rotations,
    "wave": _wave_rotations,
    "squat": _squat_rotations,
}


def generate_scene(
    preset: str,
    frames: int,
    noise_px: float = 0.0,
    dropout: float = 0.0,
    seed: int = 0,
) -> SyntheticScene:
    """Deterministic scene: ring cameras plus `frames` of truth skeletons."""
    if preset not in PRESETS:
        raise UnknownPreset(f"unknown preset {preset!r}; choose from {PRESETS}")
    if frames < 1:
        raise ValueError("frames must be at least 1")
    motion = _MOTIONS[preset]
    period = 40.0
    truth = []
    for f in range(frames):
        phase = 2.0 * np.pi * f / period
        rotations, root_offset = motion(phase)
        positions = _pose_from_rotations(rotations, root_offset, T_POSE_STATURE_MM)
        truth.append(Skeleton3D.from_positions(frame=f, positions=positions))
    return SyntheticScene(
        cameras=camera_ring(),
        truth=truth,
        noise_px=float(noise_px),
        dropout=float(dropout),
        rng_seed=int(seed),
        preset=preset,
    )


def render_observations(scene: SyntheticScene) -> list[JointObservationFrame]:
    """Project truth into every view with noise and dropout applied.

    Kept joints carry confidence 1.0. Draw order (view-major, joint-minor)
    and per-frame sub-seeding keep the output reproducible.
    """
    frames = []
    for skel in scene.truth:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=scene.rng_seed, spawn_key=(skel.frame,)))
        views: dict[int, dict[int, JointObservation]] = {}
        for cam in scene.cameras:
            joints: dict[int, JointObservation] = {}
            for idx in sorted(skel.positions):
                if idx == ROOT_JOINT:
                    continue  # the root is synthesized downstream, never detected
                noise = rng.normal(0.0, scene.noise_px, size=2) if scene.noise_px > 0 else np.zeros(2)
                dropped = scene.dropout > 0 and rng.random() < scene.dropout
                if dropped:
                    continue
                pixel = project(skel.positions[idx], cam) + noise
                joints[idx] = JointObservation(view_id=cam.id, pixel=pixel, confidence=1.0)
            views[cam.id] = joints
        frames.append(JointObservationFrame(frame=skel.frame, views=views))
    return frames


def dlt_triangulate(observations: list[JointObservation], cameras: list[CameraParams]) -> np.ndarray:
    """Linear least-squares triangulation from stacked projection rows.

    Each observation contributes the two classic direct-linear-transform
    constraints u*P3 - P1 and v*P3 - P2; the homogeneous solution is the
    smallest right singular vector. Raises RankDeficient for fewer than
    two views or collinear ray geometry.
    """
    if len(observations) < 2:
        raise RankDeficient("triangulation needs at least two views")
    by_id = {c.id: c for c in cameras}
    rows = []
    for obs in observations:
        cam = by_id[obs.view_id]
        P = cam.intrinsic @ np.hstack([cam.rotation, cam.translation[:, None]])
        u, v = obs.pixel
        rows.append(u * P[2] - P[0])
        rows.append(v * P[2] - P[1])
    A = np.stack(rows)
    _, s, vt = np.linalg.svd(A)
    if s[2] <= 1e-9 * s[0]:
        raise RankDeficient("observation rays are collinear")
    X = vt[-1]
    if abs(X[3]) <= 1e-12 * np.linalg.norm(X[:3]):
        raise RankDeficient("triangulated point is at infinity")
    return X[:3] / X[3]
