"""3D joint estimation by iterative subdivision of a sampling volume.

For a single joint, a work queue starts from one large axis-aligned cube.
Each cube is projected into every usable view; a view votes for the cube
when its detected 2D joint falls inside the convex hull of the cube's
eight projected vertices (views where any vertex fails the depth test do
not vote). Cubes with fewer than `sigma` votes are pruned. Cubes that keep
consensus while all edges have shrunk below `delta` become candidates;
everything else splits into eight half-size children. The joint position
is the unweighted mean of candidate centers.

Because every cube at a given depth shares the same edge lengths, the
queue is processed one depth level at a time and each level is evaluated
as a single vectorized batch. Results are independent of observation
order: votes are integer counts and candidates are sorted canonically
before averaging.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .geometry import CameraParams
from .skeleton import (
    ROOT_JOINT,
    STATUS_NO_CONSENSUS,
    STATUS_OK,
    Skeleton3D,
    SkeletonTopology,
)

# Unit corner signs of an axis-aligned cube, in a fixed canonical order.
_CORNER_SIGNS = np.array(sorted(itertools.product((-1.0, 1.0), repeat=3)))

# Tolerance on the angular-gap containment test, radians.
_GAP_TOL = 1e-12


@dataclass(frozen=True)
class Cube:
    """Axis-aligned sampling region: center plus (w, h, l) edge lengths."""

    center: np.ndarray
    edges: tuple[float, float, float]

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(3)
        e = tuple(float(x) for x in self.edges)
        if any(x <= 0 for x in e):
            raise ValueError("cube edges must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "edges", e)

    def vertices(self) -> np.ndarray:
        """The eight corners, (8, 3), canonical corner order."""
        return self.center + _CORNER_SIGNS * (np.asarray(self.edges) / 2.0)

    def children(self) -> list["Cube"]:
        """Eight sub-cubes with exactly halved edges."""
        half = tuple(e / 2.0 for e in self.edges)
        offs = _CORNER_SIGNS * (np.asarray(self.edges) / 4.0)
        return [Cube(self.center + o, half) for o in offs]


def _default_volume() -> Cube:
    return Cube(center=np.zeros(3), edges=(4000.0, 3000.0, 4000.0))


@dataclass(frozen=True)
class EstimatorConfig:
    """Parameters of the subdivision search.

    sigma: minimum number of consenting views for a cube to survive.
    delta: terminal cube size (w, h, l) in mm; a consenting cube whose
        edges are all strictly below delta becomes a candidate.
    initial_volume: the level-zero cube covering the capture space.
    min_confidence: observations below this confidence are ignored.
    max_candidates: safety cap against runaway traversals caused by
        degenerate calibrations.
    """

    sigma: int = 4
    delta: tuple[float, float, float] = (10.0, 10.0, 10.0)
    initial_volume: Cube = field(default_factory=_default_volume)
    min_confidence: float = 0.1
    max_candidates: int = 100_000

    def __post_init__(self):
        if self.sigma < 2:
            raise ValueError("sigma must be at least 2 (two perspectives fix a point)")
        d = tuple(float(x) for x in self.delta)
        if any(x <= 0 for x in d):
            raise ValueError("delta components must be positive")
        if any(e < dv for e, dv in zip(self.initial_volume.edges, d)):
            raise ValueError("initial volume must be at least delta in every axis")
        if not 0.0 <= self.min_confidence <= 1.0:
            raise ValueError("min_confidence must lie in [0, 1]")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be positive")
        object.__setattr__(self, "delta", d)


@dataclass(frozen=True)
class JointObservation:
    """One detected 2D joint in one view."""

    view_id: int
    pixel: np.ndarray
    confidence: float

    def __post_init__(self):
        object.__setattr__(self, "pixel", np.asarray(self.pixel, dtype=float).reshape(2))


@dataclass
class JointObservationFrame:
    """Per-frame detections: view id -> joint index -> observation."""

    frame: int
    views: dict[int, dict[int, JointObservation]]

    def observations_for(self, joint_idx: int) -> list[JointObservation]:
        out = []
        for view_id in sorted(self.views):
            obs = self.views[view_id].get(joint_idx)
            if obs is not None:
                out.append(obs)
        return out


@dataclass
class JointEstimate:
    """Result of one subdivision search.

    candidates and terminal_edges are diagnostics: the surviving terminal
    cube centers (canonically sorted) and their edge lengths.
    """

    position: np.ndarray | None
    candidate_count: int
    supporting_views: frozenset[int]
    status: str
    nodes_visited: int = 0
    candidates: np.ndarray | None = None
    terminal_edges: tuple[float, float, float] | None = None


def _camera_arrays(cameras: list[CameraParams]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    K = np.stack([c.intrinsic for c in cameras])
    R = np.stack([c.rotation for c in cameras])
    t = np.stack([c.translation for c in cameras])
    return K, R, t


def _views_containing(
    centers: np.ndarray,
    edges: np.ndarray,
    K: np.ndarray,
    R: np.ndarray,
    t: np.ndarray,
    pixels: np.ndarray,
) -> np.ndarray:
    """Vote matrix (V, M): does view v's pixel lie in cube m's projection?

    Containment uses the angular-gap test: the pixel is inside the convex
    hull of the eight projected vertices iff the directions from the pixel
    to those vertices leave no angular gap larger than pi (boundary
    inclusive), or the pixel coincides with a vertex. Views where any
    vertex has non-positive depth do not vote.
    """
    verts = centers[:, None, :] + _CORNER_SIGNS[None, :, :] * (edges / 2.0)  # (M, 8, 3)
    cam = np.einsum("vij,mkj->vmki", R, verts) + t[:, None, None, :]  # (V, M, 8, 3)
    z = cam[..., 2]
    valid = np.all(z > 0.0, axis=2)  # (V, M)
    zsafe = np.where(z > 0.0, z, 1.0)
    img = np.einsum("vij,vmkj->vmki", K, cam)
    uv = img[..., :2] / zsafe[..., None]

    d = uv - pixels[:, None, None, :]  # (V, M, 8, 2)
    touches_vertex = np.any(np.einsum("vmki,vmki->vmk", d, d) <= 1e-18, axis=-1)
    ang = np.sort(np.arctan2(d[..., 1], d[..., 0]), axis=-1)
    gaps = np.diff(ang, axis=-1)
    wrap = 2.0 * np.pi - (ang[..., -1] - ang[..., 0])
    max_gap = np.maximum(gaps.max(axis=-1), wrap)
    inside = (max_gap <= np.pi + _GAP_TOL) | touches_vertex
    return inside & valid


def count_votes(
    cube: Cube,
    observations: list[JointObservation],
    cameras: list[CameraParams],
    min_confidence: float = 0.1,
) -> int:
    """Number of views whose detection falls inside the cube's projection."""
    by_id = {c.id: c for c in cameras}
    usable = [o for o in observations if o.confidence >= min_confidence]
    if not usable:
        return 0
    cams = [by_id[o.view_id] for o in usable]
    K, R, t = _camera_arrays(cams)
    pixels = np.stack([o.pixel for o in usable])
    inside = _views_containing(cube.center[None, :], np.asarray(cube.edges, dtype=float), K, R, t, pixels)
    return int(inside[:, 0].sum())


def estimate_joint(
    observations: list[JointObservation],
    cameras: list[CameraParams],
    config: EstimatorConfig,
) -> JointEstimate:
    """Locate one 3D joint from multi-view detections.

    Returns status "no_consensus" when fewer than sigma views ever agree,
    including the case where the search volume is exhausted.
    """
    by_id = {c.id: c for c in cameras}
    usable = [o for o in observations if o.confidence >= config.min_confidence]
    if len(usable) < config.sigma:
        return JointEstimate(None, 0, frozenset(), STATUS_NO_CONSENSUS)

    view_ids = [o.view_id for o in usable]
    K, R, t = _camera_arrays([by_id[v] for v in view_ids])
    pixels = np.stack([o.pixel for o in usable])

    delta = np.asarray(config.delta, dtype=float)
    centers = config.initial_volume.center[None, :].copy()
    edges = np.asarray(config.initial_volume.edges, dtype=float)
    nodes = 0
    candidates: np.ndarray | None = None
    support = np.zeros(len(usable), dtype=bool)

    while centers.shape[0]:
        nodes += centers.shape[0]
        inside = _views_containing(centers, edges, K, R, t, pixels)
        votes = inside.sum(axis=0)
        keep = votes >= config.sigma
        if not keep.any():
            break
        centers = centers[keep]
        inside = inside[:, keep]
        if np.all(edges < delta):
            candidates = centers
            support = inside.any(axis=1)
            break
        centers = _subdivide(centers, edges)
        edges = edges / 2.0
        if centers.shape[0] > config.max_candidates:
            # Runaway guard: cap the working frontier deterministically.
            centers = _canonical_order(centers)[: config.max_candidates]

    if candidates is None or candidates.shape[0] == 0:
        return JointEstimate(None, 0, frozenset(), STATUS_NO_CONSENSUS, nodes_visited=nodes)

    candidates = _canonical_order(candidates)[: config.max_candidates]
    position = candidates.mean(axis=0)
    views = frozenset(view_ids[i] for i in np.flatnonzero(support))
    return JointEstimate(
        position=position,
        candidate_count=int(candidates.shape[0]),
        supporting_views=views,
        status=STATUS_OK,
        nodes_visited=nodes,
        candidates=candidates,
        terminal_edges=tuple(edges),
    )


def _subdivide(centers: np.ndarray, edges: np.ndarray) -> np.ndarray:
    offs = _CORNER_SIGNS * (edges / 4.0)
    return (centers[:, None, :] + offs[None, :, :]).reshape(-1, 3)


def _canonical_order(centers: np.ndarray) -> np.ndarray:
    order = np.lexsort((centers[:, 2], centers[:, 1], centers[:, 0]))
    return centers[order]


def estimate_skeleton(
    frame: JointObservationFrame,
    cameras: list[CameraParams],
    config: EstimatorConfig,
    topology: SkeletonTopology,
) -> Skeleton3D:
    """Estimate every detected joint independently, then synthesize the root.

    The pelvis root is not produced by 2D detection; it is placed at the
    midpoint of the two hip estimates and inherits no-consensus status when
    either hip is missing.
    """
    positions: dict[int, np.ndarray] = {}
    statuses: dict[int, str] = {}
    for idx in topology.detected_joint_indices:
        est = estimate_joint(frame.observations_for(idx), cameras, config)
        statuses[idx] = est.status
        if est.status == STATUS_OK:
            positions[idx] = est.position

    r_hip, l_hip = 8, 11
    if statuses.get(r_hip) == STATUS_OK and statuses.get(l_hip) == STATUS_OK:
        positions[ROOT_JOINT] = 0.5 * (positions[r_hip] + positions[l_hip])
        statuses[ROOT_JOINT] = STATUS_OK
    else:
        statuses[ROOT_JOINT] = STATUS_NO_CONSENSUS

    return Skeleton3D(frame=frame.frame, positions=positions, statuses=statuses)
