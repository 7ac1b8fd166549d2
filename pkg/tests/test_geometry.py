import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from sara.geometry import (
    EPS_ON_PLANE,
    GazeRay,
    ImageDims,
    PixelPoint,
    Quaternion,
    ScreenPose,
    WorldPoint,
    gaze_to_pixel,
    intersect_ray_screen,
    pixel_to_screen_local,
    screen_local_to_pixel,
    world_to_screen_local,
)
from oracles import quat_to_matrix, ray_plane_intersection_parametric

ORIGIN_SCREEN = ScreenPose(WorldPoint(0, 0, 0), Quaternion.identity(), 0.4, 0.3)
DIMS = ImageDims(800, 600)


def normalize(v):
    n = math.sqrt(sum(c * c for c in v))
    return tuple(c / n for c in v)


# --- strategies ------------------------------------------------------------

finite = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)


@st.composite
def quaternions(draw):
    comps = [draw(st.floats(min_value=-1, max_value=1, allow_nan=False)) for _ in range(4)]
    n = math.sqrt(sum(c * c for c in comps))
    assume(n > 0.1)
    return Quaternion(*[c / n for c in comps]).normalized()


@st.composite
def poses(draw):
    center = WorldPoint(draw(finite), draw(finite), draw(finite))
    q = draw(quaternions())
    w = draw(st.floats(min_value=0.05, max_value=3.0, allow_nan=False))
    h = draw(st.floats(min_value=0.05, max_value=3.0, allow_nan=False))
    return ScreenPose(center, q, w, h)


@st.composite
def image_dims(draw):
    return ImageDims(
        draw(st.integers(min_value=1, max_value=4000)),
        draw(st.integers(min_value=1, max_value=4000)),
    )


@st.composite
def uvs_on(draw, pose):
    u = draw(st.floats(min_value=-0.5, max_value=0.5, allow_nan=False)) * pose.width_m
    v = draw(st.floats(min_value=-0.5, max_value=0.5, allow_nan=False)) * pose.height_m
    return (u, v)


# --- worked examples -------------------------------------------------------


class TestIntersectRayScreen:
    def test_head_on(self):
        ray = GazeRay(WorldPoint(0, 0, 1), (0, 0, -1))
        hit = intersect_ray_screen(ray, ORIGIN_SCREEN)
        assert hit == WorldPoint(0, 0, 0)

    def test_parallel_ray_misses(self):
        ray = GazeRay(WorldPoint(0, 0, 1), (1, 0, 0))
        assert intersect_ray_screen(ray, ORIGIN_SCREEN) is None

    def test_oblique_hit_matches_parametric_oracle(self):
        d = normalize((-0.2, -0.1, -1.0))
        ray = GazeRay(WorldPoint(0.2, 0.1, 1.0), d)
        hit = intersect_ray_screen(ray, ORIGIN_SCREEN)
        assert hit is not None
        expected = ray_plane_intersection_parametric(
            (0.2, 0.1, 1.0), d, (0, 0, 0), (0, 0, 1)
        )
        assert np.allclose(hit.as_tuple(), expected, atol=1e-12)
        assert np.allclose(hit.as_tuple(), (0.0, 0.0, 0.0), atol=1e-12)

    def test_hit_behind_origin_misses(self):
        ray = GazeRay(WorldPoint(0, 0, 1), (0, 0, 1))
        assert intersect_ray_screen(ray, ORIGIN_SCREEN) is None


class TestWorldToScreenLocal:
    def test_center_maps_to_origin(self):
        pose = ScreenPose(WorldPoint(1, 2, 3), Quaternion.identity(), 0.4, 0.3)
        assert world_to_screen_local(WorldPoint(1, 2, 3), pose) == (0.0, 0.0)

    def test_pure_translation(self):
        pose = ScreenPose(WorldPoint(1, 2, 3), Quaternion.identity(), 0.4, 0.3)
        u, v = world_to_screen_local(WorldPoint(1.1, 2.05, 3), pose)
        assert u == pytest.approx(0.1, abs=1e-12)
        assert v == pytest.approx(0.05, abs=1e-12)

    def test_yawed_screen_matches_matrix_oracle(self):
        q = Quaternion.from_axis_angle((0, 1, 0), math.pi / 2)
        pose = ScreenPose(WorldPoint(0, 0, 0), q, 0.4, 0.3)
        p = WorldPoint(0, 0, -0.1)
        u, v = world_to_screen_local(p, pose)
        assert u == pytest.approx(0.1, abs=1e-12)
        assert v == pytest.approx(0.0, abs=1e-12)
        # independent check: invert with a rotation matrix
        local = quat_to_matrix(q).T @ np.array(p.as_tuple())
        assert np.allclose((u, v), local[:2], atol=1e-12)

    def test_off_plane_point_rejected(self):
        with pytest.raises(ValueError):
            world_to_screen_local(WorldPoint(0, 0, 10 * EPS_ON_PLANE), ORIGIN_SCREEN)


class TestScreenLocalToPixel:
    def test_center_to_center(self):
        assert screen_local_to_pixel((0, 0), ORIGIN_SCREEN, DIMS) == PixelPoint(400, 300)

    def test_scaling_and_mirror(self):
        p = screen_local_to_pixel((0.1, 0.075), ORIGIN_SCREEN, DIMS)
        assert p.x_px == pytest.approx(600.0, abs=1e-9)
        assert p.y_px == pytest.approx(150.0, abs=1e-9)

    def test_bottom_left_corner(self):
        p = screen_local_to_pixel((-0.2, -0.15), ORIGIN_SCREEN, DIMS)
        assert p.x_px == pytest.approx(0.0, abs=1e-9)
        assert p.y_px == pytest.approx(600.0, abs=1e-9)

    def test_inverse_worked_examples(self):
        assert pixel_to_screen_local(PixelPoint(400, 300), ORIGIN_SCREEN, DIMS) == (0, 0)
        u, v = pixel_to_screen_local(PixelPoint(600, 150), ORIGIN_SCREEN, DIMS)
        assert (u, v) == pytest.approx((0.1, 0.075), abs=1e-12)
        u, v = pixel_to_screen_local(PixelPoint(0, 600), ORIGIN_SCREEN, DIMS)
        assert (u, v) == pytest.approx((-0.2, -0.15), abs=1e-12)


class TestGazeToPixel:
    def test_head_on_center(self):
        ray = GazeRay(WorldPoint(0, 0, 1), (0, 0, -1))
        p = gaze_to_pixel(ray, ORIGIN_SCREEN, DIMS)
        assert (p.x_px, p.y_px) == (400.0, 300.0)

    def test_parallel_ray_none(self):
        ray = GazeRay(WorldPoint(0, 0, 1), (0, 1, 0))
        assert gaze_to_pixel(ray, ORIGIN_SCREEN, DIMS) is None

    def test_yawed_screen_composition(self):
        # Screen yawed 90 deg about +y; ray built to hit local (0.1, 0),
        # which is world (0, 0, -0.1).
        q = Quaternion.from_axis_angle((0, 1, 0), math.pi / 2)
        pose = ScreenPose(WorldPoint(0, 0, 0), q, 0.4, 0.3)
        ray = GazeRay(WorldPoint(1, 0, -0.1), (-1, 0, 0))
        p = gaze_to_pixel(ray, pose, DIMS)
        assert p.x_px == pytest.approx(600.0, abs=1e-9)
        assert p.y_px == pytest.approx(300.0, abs=1e-9)


# --- validation ------------------------------------------------------------


def test_ray_requires_unit_direction():
    with pytest.raises(ValueError):
        GazeRay(WorldPoint(0, 0, 0), (1, 1, 0))


def test_pose_requires_positive_extent():
    with pytest.raises(ValueError):
        ScreenPose(WorldPoint(0, 0, 0), Quaternion.identity(), 0.0, 0.3)


def test_pose_requires_normalized_quaternion():
    with pytest.raises(ValueError):
        ScreenPose(WorldPoint(0, 0, 0), Quaternion(1, 1, 0, 0), 0.4, 0.3)


def test_world_point_rejects_nan():
    with pytest.raises(ValueError):
        WorldPoint(float("nan"), 0, 0)


# --- properties ------------------------------------------------------------


@given(data=st.data(), pose=poses(), dims=image_dims())
@settings(max_examples=200)
def test_pixel_roundtrip_property(data, pose, dims):
    uv = data.draw(uvs_on(pose))
    px = screen_local_to_pixel(uv, pose, dims)
    u2, v2 = pixel_to_screen_local(px, pose, dims)
    assert abs(u2 - uv[0]) < 1e-9
    assert abs(v2 - uv[1]) < 1e-9


@given(data=st.data(), pose=poses())
@settings(max_examples=200)
def test_intersection_lies_on_plane_and_ray(data, pose):
    uv = data.draw(uvs_on(pose))
    eye_off = data.draw(st.tuples(finite, finite,
                                  st.floats(min_value=0.2, max_value=5.0, allow_nan=False)))
    # target point on the plane, eye displaced along the normal
    n = pose.normal()
    rot = pose.orientation
    tgt = rot.rotate((uv[0], uv[1], 0.0))
    c = pose.center.as_tuple()
    tgt = (tgt[0] + c[0], tgt[1] + c[1], tgt[2] + c[2])
    right = rot.rotate((1.0, 0.0, 0.0))
    up = rot.rotate((0.0, 1.0, 0.0))
    eye = tuple(
        tgt[k] + eye_off[0] * right[k] + eye_off[1] * up[k] + eye_off[2] * n[k]
        for k in range(3)
    )
    d = normalize(tuple(tgt[k] - eye[k] for k in range(3)))
    assume(abs(sum(d[k] * n[k] for k in range(3))) > 1e-6)
    hit = intersect_ray_screen(GazeRay(WorldPoint(*eye), d), pose)
    assert hit is not None
    h = np.array(hit.as_tuple())
    # on the plane
    assert abs(float(np.dot(h - np.array(c), np.array(n)))) < 1e-9
    # on the ray, in front of the eye
    oh = h - np.array(eye)
    s = float(np.dot(oh, np.array(d)))
    assert s >= 0
    assert float(np.linalg.norm(oh - s * np.array(d))) < 1e-9


@given(pose=poses(), dims=image_dims(),
       u=st.floats(min_value=-1, max_value=1, allow_nan=False),
       du=st.floats(min_value=1e-6, max_value=1, allow_nan=False),
       v=st.floats(min_value=-1, max_value=1, allow_nan=False),
       dv=st.floats(min_value=1e-6, max_value=1, allow_nan=False))
@settings(max_examples=100)
def test_monotone_u_right_v_mirrored(pose, dims, u, du, v, dv):
    p1 = screen_local_to_pixel((u, v), pose, dims)
    p2 = screen_local_to_pixel((u + du, v + dv), pose, dims)
    assert p2.x_px > p1.x_px
    assert p2.y_px < p1.y_px


@given(data=st.data(), pose=poses(), dims=image_dims(),
       motion_q=quaternions())
@settings(max_examples=150)
def test_rigid_motion_invariance(data, pose, dims, motion_q):
    uv = data.draw(uvs_on(pose))
    shift = [data.draw(finite) for _ in range(3)]
    n = pose.normal()
    rot = pose.orientation
    tgt_local = rot.rotate((uv[0], uv[1], 0.0))
    c = pose.center.as_tuple()
    tgt = tuple(tgt_local[k] + c[k] for k in range(3))
    eye = tuple(tgt[k] + 0.8 * n[k] for k in range(3))
    d = normalize(tuple(tgt[k] - eye[k] for k in range(3)))
    ray = GazeRay(WorldPoint(*eye), d)
    p1 = gaze_to_pixel(ray, pose, dims)
    assert p1 is not None

    def move(pt):
        r = motion_q.rotate(pt)
        return (r[0] + shift[0], r[1] + shift[1], r[2] + shift[2])

    moved_ray = GazeRay(WorldPoint(*move(eye)), normalize(motion_q.rotate(d)))
    moved_pose = ScreenPose(
        WorldPoint(*move(c)),
        (motion_q * pose.orientation).normalized(),
        pose.width_m,
        pose.height_m,
    )
    p2 = gaze_to_pixel(moved_ray, moved_pose, dims)
    assert p2 is not None
    assert abs(p2.x_px - p1.x_px) < 1e-6
    assert abs(p2.y_px - p1.y_px) < 1e-6


@given(q=quaternions(), vec=st.tuples(finite, finite, finite))
@settings(max_examples=200)
def test_quaternion_rotation_matches_matrix(q, vec):
    got = q.rotate(vec)
    expected = quat_to_matrix(q) @ np.array(vec)
    assert np.allclose(got, expected, atol=1e-9)
