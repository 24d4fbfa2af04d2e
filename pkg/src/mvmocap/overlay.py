"""SVG reprojection overlays: detected joints in red, reprojected in blue."""

from __future__ import annotations

import numpy as np

from .geometry import CameraParams
from .skeleton import SkeletonTopology

_MARKER_RADIUS = 5
_BONE_WIDTH = 2


def _f(x: float) -> str:
    return format(float(x), ".3f")


def render_overlay_svg(
    cam: CameraParams,
    detected: dict[int, np.ndarray],
    reprojected: dict[int, np.ndarray],
    topology: SkeletonTopology,
) -> str:
    """One view's overlay at the camera's native resolution.

    Bones are drawn as segments between reprojected joints when both
    endpoints exist; detected joints render as red circles, reprojections
    as blue circles.
    """
    w, h = cam.resolution
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
    ]
    for bone in topology.bones:
        a = reprojected.get(bone.parent_joint)
        b = reprojected.get(bone.child_joint)
        if a is None or b is None:
            continue
        parts.append(
            f'<line x1="{_f(a[0])}" y1="{_f(a[1])}" x2="{_f(b[0])}" y2="{_f(b[1])}" '
            f'stroke="steelblue" stroke-width="{_BONE_WIDTH}"/>'
        )
    for idx in sorted(detected):
        p = detected[idx]
        parts.append(f'<circle cx="{_f(p[0])}" cy="{_f(p[1])}" r="{_MARKER_RADIUS}" fill="red"/>')
    for idx in sorted(reprojected):
        p = reprojected[idx]
        parts.append(f'<circle cx="{_f(p[0])}" cy="{_f(p[1])}" r="{_MARKER_RADIUS}" fill="blue"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
