"""Smoke tests for the _splatalign extension module."""

import math

import numpy as np
import pytest

import _splatalign as sa


def make_cloud(n=1, seed=0):
    rng = np.random.default_rng(seed)
    positions = rng.uniform(-0.3, 0.3, (n, 3))
    rotations = np.tile([1.0, 0.0, 0.0, 0.0], (n, 1))
    log_scales = np.full((n, 3), math.log(0.08))
    colors = rng.uniform(0.1, 0.9, (n, 3))
    opacity = np.zeros(n)
    return sa.GaussianCloud(positions, rotations, log_scales, colors, opacity)


def test_covariance_identity():
    cov = sa.covariance_of(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))
    assert np.allclose(cov, np.eye(3))


def test_covariance_diagonal():
    cov = sa.covariance_of(np.array([1.0, 0.0, 0.0, 0.0]),
                           np.array([math.log(2.0), 0.0, 0.0]))
    assert np.allclose(np.diag(cov), [4.0, 1.0, 1.0])


def test_validate_cloud_reports_bad_quaternion():
    cloud = sa.GaussianCloud(np.zeros((1, 3)), np.array([[0.9, 0, 0, 0.0]]),
                             np.zeros((1, 3)), np.full((1, 3), 0.5), np.zeros(1))
    violations = sa.validate_cloud(cloud)
    assert len(violations) == 1 and "rotations" in violations[0]


def test_render_single_centered_gaussian():
    positions = np.array([[0.0, 0.0, 0.0]])
    rotations = np.array([[1.0, 0.0, 0.0, 0.0]])
    log_scales = np.full((1, 3), math.log(0.05))
    colors = np.array([[1.0, 0.0, 0.0]])
    opacity = np.array([math.log(0.9 / 0.1)])
    cloud = sa.GaussianCloud(positions, rotations, log_scales, colors, opacity)

    cam = sa.orbit_camera(0.0, 0.0, 2.4, 40.0, 17, 17)
    image = sa.render(cloud, cam)
    assert image.shape == (17, 17, 4)
    assert abs(image[8, 8, 0] - 0.9) < 1e-5
    assert abs(image[8, 8, 3] - 0.9) < 1e-5


def test_render_backward_zero_upstream():
    cloud = make_cloud(4, seed=1)
    cam = sa.orbit_camera(0.0, 0.0, 2.4, 24.0, 16, 16)
    grads = sa.render_backward(cloud, cam, np.zeros((16, 16, 4)))
    assert np.all(grads["positions"] == 0.0)
    assert np.all(grads["opacity_logits"] == 0.0)


def test_render_rejects_invalid_cloud():
    cloud = sa.GaussianCloud(np.zeros((1, 3)), np.array([[0.5, 0, 0, 0.0]]),
                             np.zeros((1, 3)), np.full((1, 3), 0.5), np.zeros(1))
    cam = sa.orbit_camera(0.0, 0.0, 2.4, 24.0, 8, 8)
    with pytest.raises(ValueError):
        sa.render(cloud, cam)


def test_mse_and_perceptual_losses():
    rng = np.random.default_rng(2)
    a = rng.uniform(0, 1, (16, 16, 4))
    value, grad = sa.mse_loss(a, a)
    assert value == 0.0 and np.all(grad == 0.0)

    b = rng.uniform(0, 1, (16, 16, 4))
    value, grad = sa.mse_loss(a, b)
    assert value > 0.0 and grad.shape == (16, 16, 3)

    p_ab, _ = sa.perceptual_loss(a, b)
    p_ba, _ = sa.perceptual_loss(b, a)
    assert p_ab == pytest.approx(p_ba)


def test_sds_mock_closed_form():
    rng = np.random.default_rng(3)
    schedule = sa.DiffusionSchedule.cosine(1000)
    x = rng.uniform(0, 1, (8, 8, 4))
    target = rng.uniform(0, 1, (8, 8, 3))
    eps = rng.normal(size=(8, 8, 3))
    tau = 500
    grad = sa.sds_gradient_mock(x, target, tau, eps, schedule)
    ratio = schedule.alpha[tau] / schedule.sigma[tau]
    assert np.allclose(grad, ratio * (x[:, :, :3] - target), atol=1e-9)


def test_deform_identity_at_init():
    cloud = make_cloud(5, seed=4)
    field = sa.DeformationField(hidden_width=16, seed=9)
    moved = sa.deform(cloud, 0.5, field)
    assert np.array_equal(moved.positions, cloud.positions)


def test_positional_encoding_dims():
    enc = sa.positional_encoding([0.0], 2)
    assert list(enc) == [0.0, 0.0, 1.0, 0.0, 1.0]


def test_ply_round_trip(tmp_path):
    cloud = make_cloud(12, seed=5)
    path = str(tmp_path / "cloud.ply")
    sa.export_ply(cloud, path)
    back = sa.import_ply(path)
    assert len(back) == 12
    assert np.allclose(back.positions, cloud.positions, atol=1e-6)
    assert np.allclose(back.colors, cloud.colors, atol=1e-6)


def test_focal_sweep_recovers_render_focal():
    # One bright triangle rendered at a known focal; the sweep must find it.
    vertices = np.array([[-0.4, -0.3, 0.0], [0.4, -0.3, 0.0], [0.0, 0.5, 0.0]])
    triangles = np.array([[0, 1, 2]], dtype=np.int32)
    colors = np.array([[1.0, 0.2, 0.1], [0.2, 1.0, 0.1], [0.1, 0.2, 1.0]])
    cam = sa.orbit_camera(0.0, 0.0, 2.4, 56.0, 48, 48)
    frame = sa.render_mesh(vertices, triangles, colors, cam)

    focal, candidates, mse = sa.sweep_focal(vertices, triangles, colors, frame,
                                            initial_focal=48.0, offset_min=-16.0,
                                            offset_max=16.0, candidates=33)
    assert focal == pytest.approx(56.0)
    assert min(mse) < 1e-10
    assert len(candidates) == 33


def test_full_pipeline_smoke(tmp_path):
    frames = str(tmp_path / "frames")
    meshes = str(tmp_path / "meshes")
    sa.write_synthetic_fixture(3, frames, meshes, width=32, height=32, n_frames=3)

    import json
    config = json.loads(sa.default_config_json())
    config.update({
        "frames_dir": frames,
        "meshes_dir": meshes,
        "out_dir": str(tmp_path / "out"),
        "width": 32,
        "height": 32,
        "n_frames": 3,
        "n_points": 200,
        "static_iters": 8,
        "dynamic_iters": 3,
        "seed": 3,
    })
    result = sa.run_pipeline(json.dumps(config))
    assert result["static_iterations"] == 8
    assert result["dynamic_iterations"] == 3
    assert (tmp_path / "out" / "manifest.json").exists()
    back = sa.import_ply(result["cloud_ply"])
    assert len(back) == 200
