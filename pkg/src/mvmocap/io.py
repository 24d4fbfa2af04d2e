"""File formats: calibration JSON, keypoint/skeleton/transform JSON lines.

All record streams are JSON lines so long sequences never need to be
resident in memory. Floats are written with fixed 6-decimal precision to
keep emitted files byte-identical across platforms and runs.

Formats:
  calibration  JSON array of {id, K: 3x3, R: 3x3, t: 3, width, height}
  keypoints    one line per frame:
               {"frame": F, "views": [{"view_id": V,
                 "joints": [{"idx": I, "u": U, "v": V, "c": C}, ...]}, ...]}
  skeletons    one line per frame:
               {"frame": F, "joints": [{"idx": I, "status": S, "p": [x, y, z]}, ...]}
               (the "p" entry is omitted for joints without consensus)
  transforms   one line per frame:
               {"frame": F, "bones": [{"name": N, "status": S, "T": 4x4}, ...]}
All matrices are row-major.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .geometry import CameraParams
from .retarget import BoneTransformSet
from .skeleton import STATUS_OK, Skeleton3D
from .voxel import JointObservation, JointObservationFrame


class InputParseError(ValueError):
    """Malformed input file; message carries file and line context."""


def _fmt(x: float) -> str:
    return format(float(x), ".6f")


def _fmt_matrix(m: np.ndarray) -> str:
    rows = ", ".join("[" + ", ".join(_fmt(v) for v in row) + "]" for row in np.asarray(m, dtype=float))
    return "[" + rows + "]"


def _fmt_vector(v) -> str:
    return "[" + ", ".join(_fmt(x) for x in np.asarray(v, dtype=float)) + "]"


# -- calibration --------------------------------------------------------


def save_cameras(path: str | Path, cameras: list[CameraParams]) -> None:
    entries = []
    for c in cameras:
        w, h = c.resolution
        entries.append(
            "{"
            + f'"id": {c.id}, "K": {_fmt_matrix(c.intrinsic)}, "R": {_fmt_matrix(c.rotation)}, '
            + f'"t": {_fmt_vector(c.translation)}, "width": {w}, "height": {h}'
            + "}"
        )
    Path(path).write_text("[\n" + ",\n".join(entries) + "\n]\n", encoding="utf-8")


def load_cameras(path: str | Path) -> list[CameraParams]:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputParseError(f"{path}: cannot parse calibration: {exc}") from exc
    cameras = []
    try:
        for entry in data:
            cameras.append(
                CameraParams(
                    id=int(entry["id"]),
                    intrinsic=np.asarray(entry["K"], dtype=float),
                    rotation=_snap_rotation(np.asarray(entry["R"], dtype=float)),
                    translation=np.asarray(entry["t"], dtype=float),
                    resolution=(int(entry["width"]), int(entry["height"])),
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputParseError(f"{path}: invalid camera entry: {exc}") from exc
    return cameras


def _snap_rotation(r: np.ndarray) -> np.ndarray:
    """Project a file-precision rotation back onto an exact rotation.

    Serialized matrices carry only 6 decimals, which breaks strict
    orthonormality checks. Matrices further than 1e-4 from orthonormal are
    rejected as genuinely invalid.
    """
    if r.shape != (3, 3):
        raise ValueError("R must be 3x3")
    if np.max(np.abs(r @ r.T - np.eye(3))) > 1e-4 or np.linalg.det(r) < 0:
        raise ValueError("R is not a rotation matrix")
    u, _, vt = np.linalg.svd(r)
    snapped = u @ vt
    if np.linalg.det(snapped) < 0:
        raise ValueError("R is not a rotation matrix")
    return snapped


# -- keypoints -----------------------------------------------------------


def keypoint_line(frame: JointObservationFrame) -> str:
    view_parts = []
    for view_id in sorted(frame.views):
        joint_parts = []
        for idx in sorted(frame.views[view_id]):
            o = frame.views[view_id][idx]
            joint_parts.append(
                f'{{"idx": {idx}, "u": {_fmt(o.pixel[0])}, "v": {_fmt(o.pixel[1])}, "c": {_fmt(o.confidence)}}}'
            )
        view_parts.append(f'{{"view_id": {view_id}, "joints": [' + ", ".join(joint_parts) + "]}")
    return f'{{"frame": {frame.frame}, "views": [' + ", ".join(view_parts) + "]}"


def write_keypoints(path: str | Path, frames: Iterable[JointObservationFrame]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for frame in frames:
            fh.write(keypoint_line(frame) + "\n")


def read_keypoints(path: str | Path) -> Iterator[JointObservationFrame]:
    path = Path(path)
    for lineno, raw in enumerate(_read_lines(path), start=1):
        try:
            rec = json.loads(raw)
            views: dict[int, dict[int, JointObservation]] = {}
            for view in rec["views"]:
                view_id = int(view["view_id"])
                joints = {}
                for j in view["joints"]:
                    joints[int(j["idx"])] = JointObservation(
                        view_id=view_id,
                        pixel=np.array([float(j["u"]), float(j["v"])]),
                        confidence=float(j["c"]),
                    )
                views[view_id] = joints
            yield JointObservationFrame(frame=int(rec["frame"]), views=views)
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise InputParseError(f"{path}:{lineno}: bad keypoint record: {exc}") from exc


# -- skeletons ------------------------------------------------------------


def skeleton_line(skel: Skeleton3D) -> str:
    parts = []
    for idx in sorted(skel.statuses):
        status = skel.statuses[idx]
        if status == STATUS_OK:
            parts.append(f'{{"idx": {idx}, "status": "{status}", "p": {_fmt_vector(skel.positions[idx])}}}')
        else:
            parts.append(f'{{"idx": {idx}, "status": "{status}"}}')
    return f'{{"frame": {skel.frame}, "joints": [' + ", ".join(parts) + "]}"


def write_skeletons(path: str | Path, skeletons: Iterable[Skeleton3D]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for skel in skeletons:
            fh.write(skeleton_line(skel) + "\n")


def read_skeletons(path: str | Path) -> Iterator[Skeleton3D]:
    path = Path(path)
    for lineno, raw in enumerate(_read_lines(path), start=1):
        try:
            rec = json.loads(raw)
            positions: dict[int, np.ndarray] = {}
            statuses: dict[int, str] = {}
            for j in rec["joints"]:
                idx = int(j["idx"])
                statuses[idx] = str(j["status"])
                if j["status"] == STATUS_OK:
                    positions[idx] = np.asarray(j["p"], dtype=float)
            yield Skeleton3D(frame=int(rec["frame"]), positions=positions, statuses=statuses)
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise InputParseError(f"{path}:{lineno}: bad skeleton record: {exc}") from exc


# -- bone transforms -------------------------------------------------------


def transform_line(tset: BoneTransformSet) -> str:
    parts = []
    for name in sorted(tset.transforms):
        parts.append(
            f'{{"name": "{name}", "status": "{tset.statuses[name]}", "T": {_fmt_matrix(tset.transforms[name])}}}'
        )
    return f'{{"frame": {tset.frame}, "bones": [' + ", ".join(parts) + "]}"


def write_transforms(path: str | Path, sets: Iterable[BoneTransformSet]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tset in sets:
            fh.write(transform_line(tset) + "\n")


def read_transforms(path: str | Path) -> Iterator[BoneTransformSet]:
    path = Path(path)
    for lineno, raw in enumerate(_read_lines(path), start=1):
        try:
            rec = json.loads(raw)
            transforms = {}
            statuses = {}
            for b in rec["bones"]:
                transforms[str(b["name"])] = np.asarray(b["T"], dtype=float)
                statuses[str(b["name"])] = str(b["status"])
            yield BoneTransformSet(frame=int(rec["frame"]), transforms=transforms, statuses=statuses)
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise InputParseError(f"{path}:{lineno}: bad transform record: {exc}") from exc


def _read_lines(path: Path) -> Iterator[str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield line
    except OSError as exc:
        raise InputParseError(f"{path}: cannot read: {exc}") from exc

