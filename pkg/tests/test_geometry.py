"""Projection and convex-region tests, each checked against an independent
hand-rolled oracle where the expected value is not obvious."""

import numpy as np
import pytest
from scipy.spatial import ConvexHull as ScipyHull

from mvmocap.geometry import (
    CameraParams,
    ConvexRegion,
    NonPositiveDepth,
    backproject,
    convex_hull,
    cube_projection_region,
    project,
    region_contains,
)
from mvmocap.voxel import Cube


def simple_camera(f=800.0, cx=640.0, cy=360.0):
    K = np.array([[f, 0, cx], [0, f, cy], [0, 0, 1.0]])
    return CameraParams(id=0, intrinsic=K, rotation=np.eye(3), translation=np.zeros(3), resolution=(1280, 720))


def random_camera(rng):
    # Random pose looking roughly back at the origin from ~3 m away.
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0, 2 * np.pi)
    c, s = np.cos(angle), np.sin(angle)
    skew = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    R = c * np.eye(3) + (1 - c) * np.outer(axis, axis) + s * skew
    t = np.array([rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(2500, 4000)])
    K = np.array([[rng.uniform(600, 1500), 0, 960], [0, rng.uniform(600, 1500), 540], [0, 0, 1.0]])
    return CameraParams(id=0, intrinsic=K, rotation=R, translation=t, resolution=(1920, 1080))


class PointRegionCube:
    """Degenerate stand-in whose eight vertices coincide at one point."""

    def __init__(self, center):
        self.center = np.asarray(center, dtype=float)

    def vertices(self):
        return np.tile(self.center, (8, 1))


# -- project -----------------------------------------------------------------


def test_optical_axis_point_maps_to_principal_point():
    cam = simple_camera(f=500.0, cx=320.0, cy=240.0)
    uv = project(np.array([0.0, 0.0, 1000.0]), cam)
    assert np.allclose(uv, [320.0, 240.0], atol=1e-12)


def test_point_behind_camera_raises():
    cam = simple_camera()
    with pytest.raises(NonPositiveDepth):
        project(np.array([0.0, 0.0, -1.0]), cam)


def test_project_matches_matrix_oracle(rng):
    for _ in range(100):
        cam = random_camera(rng)
        p = rng.uniform(-500, 500, size=3)
        # Independent oracle: 3x4 projection matrix multiply and divide.
        P = cam.intrinsic @ np.hstack([cam.rotation, cam.translation[:, None]])
        x = P @ np.append(p, 1.0)
        assert np.allclose(project(p, cam), x[:2] / x[2], atol=1e-9)


def test_backprojection_roundtrip(rng):
    for _ in range(100):
        cam = random_camera(rng)
        p = rng.uniform(-500, 500, size=3)
        depth = (cam.rotation @ p + cam.translation)[2]
        assert np.allclose(backproject(project(p, cam), depth, cam), p, atol=1e-6)


# -- cube projection region ----------------------------------------------------


def test_fronto_parallel_cube_projects_to_square():
    cam = simple_camera()
    cube = Cube(center=np.array([0.0, 0.0, 2000.0]), edges=(300.0, 300.0, 300.0))
    region = cube_projection_region(cube, cam)
    assert region.vertices.shape == (4, 2)
    # Symmetric about the principal point.
    assert np.allclose(region.vertices.mean(axis=0), [640.0, 360.0], atol=1e-9)


def test_degenerate_cube_projects_to_point():
    cam = simple_camera()
    center = np.array([100.0, -50.0, 1500.0])
    region = cube_projection_region(PointRegionCube(center), cam)
    assert region.vertices.shape == (1, 2)
    assert np.allclose(region.vertices[0], project(center, cam), atol=1e-12)
    assert region_contains(region, project(center, cam))


def test_vertex_behind_camera_raises():
    cam = simple_camera()
    cube = Cube(center=np.array([0.0, 0.0, 100.0]), edges=(500.0, 500.0, 500.0))
    with pytest.raises(NonPositiveDepth):
        cube_projection_region(cube, cam)


def test_hull_area_matches_scipy_oracle(rng):
    for _ in range(60):
        cam = random_camera(rng)
        cube = Cube(center=rng.uniform(-400, 400, size=3), edges=tuple(rng.uniform(50, 400, size=3)))
        pix = np.array([project(v, cam) for v in cube.vertices()])
        region = cube_projection_region(cube, cam)
        ours = _shoelace(region.vertices)
        oracle = ScipyHull(pix).volume  # 2D hull "volume" is the area
        assert ours == pytest.approx(oracle, abs=1e-6)


def _shoelace(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, 1)) - np.dot(y, np.roll(x, 1)))


def test_subcube_region_inside_parent_region(rng):
    cam = simple_camera()
    cube = Cube(center=np.array([50.0, -80.0, 2500.0]), edges=(400.0, 300.0, 350.0))
    parent = cube_projection_region(cube, cam)
    for child in cube.children():
        child_region = cube_projection_region(child, cam)
        for v in child_region.vertices:
            assert region_contains(parent, v)


# -- region containment -----------------------------------------------------


def test_centroid_inside_far_point_outside():
    region = ConvexRegion(np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 8.0], [0.0, 8.0]]))
    centroid = region.vertices.mean(axis=0)
    assert region_contains(region, centroid)
    diameter = 2 * np.max(np.linalg.norm(region.vertices - centroid, axis=1))
    assert not region_contains(region, centroid + np.array([10 * diameter, 0.0]))


def test_containment_matches_half_plane_oracle(rng):
    pts = rng.uniform(0, 100, size=(8, 2))
    region = ConvexRegion(convex_hull(pts))

    def oracle(p):
        v = region.vertices
        for i in range(len(v)):
            a, b = v[i], v[(i + 1) % len(v)]
            e = b - a
            if (e[0] * (p - a)[1] - e[1] * (p - a)[0]) / np.linalg.norm(e) < -1e-9:
                return False
        return True

    for _ in range(1000):
        p = rng.uniform(-20, 120, size=2)
        assert region_contains(region, p) == oracle(p)


def test_containment_invariant_under_vertex_rotation(rng):
    pts = rng.uniform(0, 50, size=(8, 2))
    hull = convex_hull(pts)
    probes = rng.uniform(-10, 60, size=(200, 2))
    base = [region_contains(ConvexRegion(hull), p) for p in probes]
    for k in range(1, len(hull)):
        rotated = ConvexRegion(np.roll(hull, k, axis=0))
        assert [region_contains(rotated, p) for p in probes] == base


def test_boundary_points_are_inside():
    region = ConvexRegion(np.array([[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]]))
    assert region_contains(region, np.array([2.0, 0.0]))  # edge midpoint
    assert region_contains(region, np.array([4.0, 4.0]))  # vertex


def test_segment_region_containment():
    region = ConvexRegion(np.array([[0.0, 0.0], [10.0, 0.0]]))
    assert region_contains(region, np.array([5.0, 0.0]))
    assert not region_contains(region, np.array([5.0, 1.0]))


# -- validation ---------------------------------------------------------------


def test_camera_params_validation():
    K = np.array([[800.0, 0, 640], [0, 800.0, 360], [0, 0, 1.0]])
    with pytest.raises(ValueError):
        CameraParams(id=0, intrinsic=K, rotation=2 * np.eye(3), translation=np.zeros(3), resolution=(10, 10))
    with pytest.raises(ValueError):
        CameraParams(id=0, intrinsic=K, rotation=np.diag([1.0, 1.0, -1.0]), translation=np.zeros(3), resolution=(10, 10))
    bad_k = K.copy()
    bad_k[2, 2] = 2.0
    with pytest.raises(ValueError):
        CameraParams(id=0, intrinsic=bad_k, rotation=np.eye(3), translation=np.zeros(3), resolution=(10, 10))
    with pytest.raises(ValueError):
        CameraParams(id=0, intrinsic=K, rotation=np.eye(3), translation=np.zeros(3), resolution=(0, 10))


def test_convex_region_rejects_nonconvex():
    with pytest.raises(ValueError):
        ConvexRegion(np.array([[0.0, 0.0], [4.0, 0.0], [1.0, 1.0], [0.0, 4.0]]))
