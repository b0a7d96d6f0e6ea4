import numpy as np
import pytest

from surfchan.geometry import (LocalFrame, PlanePose, elevation_in_frame,
                               elevations_in_frame, incidence_cosines,
                               mirror_image, mirror_images, specular_path, vec3)


def test_vec3_rejects_non_finite():
    with pytest.raises(ValueError):
        vec3(0.0, np.nan, 1.0)
    with pytest.raises(ValueError):
        vec3(np.inf, 0.0, 0.0)


def test_plane_pose_requires_orthonormal_axes():
    with pytest.raises(ValueError):
        PlanePose(origin=vec3(0, 0, 0), unit_normal=vec3(0, 0, 2.0),
                  axis_u=vec3(1, 0, 0), axis_v=vec3(0, 1, 0))
    with pytest.raises(ValueError, match="not orthogonal"):
        PlanePose(origin=vec3(0, 0, 0), unit_normal=vec3(0, 0, 1.0),
                  axis_u=vec3(1, 0, 0), axis_v=vec3(1, 0, 0))


def test_vertical_wall_normal_and_distance():
    wall = PlanePose.vertical_x(45.0, 35.0, 0.0, normal_sign=-1.0)
    assert wall.signed_distance(vec3(40.0, 35.0, 0.0)) == pytest.approx(5.0)
    assert wall.signed_distance(vec3(50.0, 0.0, 0.0)) == pytest.approx(-5.0)


def test_mirror_involution_random_planes():
    rng = np.random.default_rng(42)
    for _ in range(200):
        n = rng.standard_normal(3)
        n /= np.linalg.norm(n)
        u = rng.standard_normal(3)
        u -= np.dot(u, n) * n
        u /= np.linalg.norm(u)
        pose = PlanePose(origin=rng.standard_normal(3), unit_normal=n,
                         axis_u=u, axis_v=np.cross(n, u))
        pts = rng.standard_normal((50, 3)) * 10.0
        back = mirror_images(mirror_images(pts, pose), pose)
        assert np.max(np.abs(back - pts)) < 1e-12


def test_mirror_image_plane_point_fixed():
    pose = PlanePose.xy_plane()
    p = vec3(0.3, -0.2, 0.0)
    assert np.allclose(mirror_image(p, pose), p)
    assert np.allclose(mirror_image(vec3(0, 0, 2.0), pose), vec3(0, 0, -2.0))


def test_elevation_known_angles():
    frame = LocalFrame(origin=vec3(0, 0, 0), z_axis=vec3(0, 0, 1.0))
    assert elevation_in_frame(vec3(0, 0, 5.0), frame) == pytest.approx(np.pi / 2)
    assert elevation_in_frame(vec3(1.0, 0, 0), frame) == pytest.approx(0.0)
    assert elevation_in_frame(vec3(1.0, 0, -1.0), frame) == pytest.approx(-np.pi / 4)


def test_elevation_vectorized_matches_scalar():
    rng = np.random.default_rng(3)
    frame = LocalFrame(origin=vec3(0.1, 0.2, 0.3), z_axis=vec3(0, 1.0, 0))
    pts = rng.standard_normal((20, 3))
    batch = elevations_in_frame(pts, frame)
    for i in range(20):
        assert batch[i] == pytest.approx(elevation_in_frame(pts[i], frame))


def test_elevation_coincident_point_raises():
    frame = LocalFrame(origin=vec3(1, 2, 3), z_axis=vec3(0, 0, 1.0))
    with pytest.raises(ValueError, match="coincident"):
        elevation_in_frame(vec3(1, 2, 3), frame)


def test_incidence_cosines_on_axis():
    pose = PlanePose.xy_plane()
    c1, c2 = incidence_cosines(pose, vec3(0, 0, 10.0), vec3(0, 0, -3.0))
    assert c1 == pytest.approx(1.0)
    assert c2 == pytest.approx(1.0)
    with pytest.raises(ValueError, match="grazing"):
        incidence_cosines(pose, vec3(1.0, 0, 0), vec3(0, 0, 1.0))


def test_specular_path_analytic():
    # both antennas at height h, horizontal offset 2a: R = 2*sqrt(h^2 + a^2)
    pose = PlanePose.xy_plane()
    h, a = 2.0, 1.5
    R, cos_spec = specular_path(pose, vec3(-a, 0, h), vec3(a, 0, h))
    assert R == pytest.approx(2.0 * np.hypot(h, a))
    assert cos_spec == pytest.approx(2.0 * h / R)
    assert 0.0 < cos_spec <= 1.0
