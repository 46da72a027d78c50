import numpy as np
import pytest

from wavedepth.errors import ContractError
from wavedepth.reconstruct import CameraIntrinsics, PointCloud, backproject, export_ply, read_ply


@pytest.fixture
def k():
    return CameraIntrinsics(fx=40.0, fy=45.0, cx=15.0, cy=11.0, width=32, height=24)


def test_principal_ray(k):
    depth = np.full((24, 32), 7.0)
    mask = np.zeros_like(depth, dtype=bool)
    mask[11, 15] = True
    pc = backproject(depth, mask, k)
    np.testing.assert_array_equal(pc.points, [[0.0, 0.0, 7.0]])


def test_constant_plane_spacing(k):
    z = 3.0
    pc = backproject(np.full((24, 32), z), np.ones((24, 32), dtype=bool), k)
    assert np.all(pc.points[:, 2] == z)
    row = pc.points[pc.pixels[:, 1] == 5]
    np.testing.assert_allclose(np.diff(row[:, 0]), z / k.fx, rtol=0, atol=1e-15)


def test_reprojection_round_trip(k, rng):
    depth = rng.uniform(0.1, 20.0, size=(24, 32))
    pc = backproject(depth, np.ones(depth.shape, dtype=bool), k)
    assert np.max(np.abs(k.project(pc.points) - pc.pixels)) <= 1e-9


def test_rigid_transform_preserves_distances(k, rng):
    depth = rng.uniform(1.0, 5.0, size=(24, 32))
    mask = rng.random(depth.shape) < 0.1
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    pose = np.eye(4)
    pose[:3, :3] = q * np.sign(np.linalg.det(q))
    pose[:3, 3] = rng.normal(size=3)
    a = backproject(depth, mask, k).points
    b = backproject(depth, mask, k, pose=pose).points
    da = np.linalg.norm(a[:, None] - a[None], axis=-1)
    db = np.linalg.norm(b[:, None] - b[None], axis=-1)
    assert np.max(np.abs(da - db)) <= 1e-9


def test_masked_pixels_produce_no_points(k, rng):
    mask = rng.random((24, 32)) < 0.3
    pc = backproject(np.ones((24, 32)), mask, k)
    assert len(pc) == mask.sum()
    assert np.all(mask[pc.pixels[:, 1], pc.pixels[:, 0]])


def test_colors_sampled(k, rng):
    rgb = rng.uniform(0, 1, size=(3, 24, 32))
    pc = backproject(np.ones((24, 32)), np.ones((24, 32), dtype=bool), k, rgb=rgb)
    u, v = pc.pixels[7]
    np.testing.assert_array_equal(pc.colors[7], np.rint(rgb[:, v, u] * 255).astype(np.uint8))


def test_errors(k):
    with pytest.raises(ContractError):
        backproject(np.ones((10, 10)), np.ones((10, 10), dtype=bool), k)
    with pytest.raises(ContractError):
        CameraIntrinsics(fx=0.0, fy=1.0, cx=0, cy=0, width=4, height=4)
    with pytest.raises(ContractError, match="principal point"):
        CameraIntrinsics(fx=1.0, fy=1.0, cx=9, cy=0, width=4, height=4)
    with pytest.raises(ContractError, match="missing"):
        CameraIntrinsics.from_dict({"fx": 1})
    with pytest.raises(ContractError, match="empty"):
        export_ply(PointCloud(np.zeros((0, 3))), "unused.ply")


def test_single_point_ply(tmp_path):
    path = tmp_path / "one.ply"
    export_ply(PointCloud(np.array([[1.0, -2.0, 3.0]])), path)
    lines = path.read_text().splitlines()
    assert "element vertex 1" in lines
    assert lines[-2] == "end_header" and lines[-1] == "1 -2 3"


def test_ply_round_trip_to_printed_precision(tmp_path, rng, k):
    depth = rng.uniform(0.1, 20.0, size=(24, 32))
    rgb = rng.uniform(0, 1, size=(3, 24, 32))
    pc = backproject(depth, np.ones(depth.shape, dtype=bool), k, rgb=rgb)
    path = tmp_path / "c.ply"
    export_ply(pc, path)
    back = read_ply(path)
    assert sum(1 for line in path.read_text().splitlines() if line.startswith("property")) == 6
    want = np.array([[float(f"{c:.9g}") for c in p] for p in pc.points])
    np.testing.assert_array_equal(back.points, want)
    np.testing.assert_array_equal(back.colors, pc.colors)


def test_export_to_unwritable_path_names_it(tmp_path):
    target = tmp_path / "file"
    target.write_text("x")
    with pytest.raises(OSError, match="file"):
        export_ply(PointCloud(np.ones((1, 3))), target / "sub" / "c.ply")
