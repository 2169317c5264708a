import numpy as np
import pytest

from lulc2label.config import UNKNOWN_LABEL
from lulc2label.errors import DataError
from lulc2label.models import CameraIntrinsics, CameraPose, SemanticScene
from lulc2label.render import (
    NADIR_ATTITUDE,
    fill_sky,
    geometric_schedule,
    image_to_world,
    look_attitude,
    project_raster,
    rasterize,
    render_labels,
    rotation_from_wxyz,
    sample_scene,
    world_to_image,
)

from .conftest import ORIGIN, make_raster


def _flat_world(size: int = 200):
    """Linke Hälfte (Westen) Klasse 0, rechte Hälfte Klasse 2, flaches Gelände auf Höhe 0."""
    lulc = np.zeros((size, size), dtype=np.uint8)
    lulc[:, size // 2 :] = 2
    return make_raster(lulc), make_raster(np.zeros((size, size), dtype=np.float32))


def _ground_triangles(pose: CameraPose, heights=(0.0,), labels=(1,)) -> SemanticScene:
    cx, cy, _ = pose.position
    vertices, vertex_labels = [], []
    for z, label in zip(heights, labels, strict=True):
        vertices += [(cx - 100.0, cy - 100.0, z), (cx + 100.0, cy - 100.0, z), (cx, cy + 100.0, z)]
        vertex_labels += [label] * 3
    triangles = np.arange(len(vertices)).reshape(-1, 3)
    return SemanticScene.from_triangles(vertices, np.array(vertex_labels, dtype=np.uint8), triangles)


class TestCamera:
    def test_nadir_projection(self, nadir_pose, intrinsics):
        x, y, _ = nadir_pose.position
        u, v, depth = world_to_image((x + 10.0, y + 5.0, 0.0), nadir_pose, intrinsics)
        # Osten nach rechts, Norden nach oben
        assert u == pytest.approx(42.0)
        assert v == pytest.approx(19.0)
        assert depth == pytest.approx(100.0)

    def test_point_behind_camera(self, nadir_pose, intrinsics):
        x, y, _ = nadir_pose.position
        assert world_to_image((x, y, 150.0), nadir_pose, intrinsics) is None

    def test_rejects_non_finite_point(self, nadir_pose, intrinsics):
        with pytest.raises(DataError):
            world_to_image((np.nan, 0.0, 0.0), nadir_pose, intrinsics)

    @pytest.mark.parametrize("k1,k2", [(0.0, 0.0), (0.05, -0.01)])
    def test_round_trip(self, intrinsics, k1, k2):
        camera = CameraIntrinsics(100.0, 100.0, 32.0, 24.0, 64, 48, k1=k1, k2=k2)
        pose = CameraPose((ORIGIN[0], ORIGIN[1], 80.0), look_attitude(heading_deg=30.0, pitch_deg=40.0))
        point = np.array([ORIGIN[0] + 12.0, ORIGIN[1] + 35.0, 3.0])
        u, v, depth = world_to_image(point, pose, camera)
        np.testing.assert_allclose(image_to_world(u, v, depth, pose, camera), point, atol=1e-6)

    def test_look_attitude_nadir(self):
        expected = rotation_from_wxyz(NADIR_ATTITUDE).as_matrix()
        np.testing.assert_allclose(rotation_from_wxyz(look_attitude()).as_matrix(), expected, atol=1e-12)

    def test_fill_sky_above_horizon_only(self, intrinsics):
        pose = CameraPose((0.0, 0.0, 10.0), look_attitude(heading_deg=0.0, pitch_deg=90.0))
        labels = np.full((48, 64), UNKNOWN_LABEL, dtype=np.uint8)
        labels[40, 10] = 3
        filled = fill_sky(labels, pose, intrinsics, sky_class=5)
        assert (filled[:24] == 5).all()
        assert (filled[24:40] == UNKNOWN_LABEL).all()
        assert filled[40, 10] == 3

    def test_fill_sky_disabled(self, nadir_pose, intrinsics):
        labels = np.full((48, 64), UNKNOWN_LABEL, dtype=np.uint8)
        assert fill_sky(labels, nadir_pose, intrinsics, None) is labels


class TestRasterize:
    def test_nearer_surface_wins(self, nadir_pose, intrinsics):
        scene = _ground_triangles(nadir_pose, heights=(0.0, 10.0), labels=(1, 2))
        labels, depth = render_labels(scene, nadir_pose, intrinsics)
        assert (labels[20:28, 28:36] == 2).all()
        np.testing.assert_allclose(depth[20:28, 28:36], 90.0, rtol=1e-6)

    def test_equal_depth_prefers_lower_triangle_index(self, nadir_pose, intrinsics):
        scene = _ground_triangles(nadir_pose, heights=(0.0, 0.0), labels=(1, 2))
        labels, _ = render_labels(scene, nadir_pose, intrinsics)
        assert (labels[20:28, 28:36] == 1).all()

    def test_geometry_behind_camera_is_unknown(self, nadir_pose, intrinsics):
        scene = _ground_triangles(nadir_pose, heights=(150.0,), labels=(1,))
        labels, depth = render_labels(scene, nadir_pose, intrinsics)
        assert (labels == UNKNOWN_LABEL).all()
        assert np.isnan(depth).all()

    def test_shared_edge_through_pixel_centers_leaves_no_gap(self, nadir_pose, intrinsics):
        cx, cy, _ = nadir_pose.position
        corners = [
            (cx - 50.0, cy - 50.0, 0.0),
            (cx + 50.0, cy - 50.0, 0.0),
            (cx + 50.0, cy + 50.0, 0.0),
            (cx - 50.0, cy + 50.0, 0.0),
        ]
        scene = SemanticScene.from_triangles(corners, np.array([1, 2, 2, 1], dtype=np.uint8), [[0, 1, 2], [2, 3, 0]])
        triangle, _ = rasterize(scene, nadir_pose, intrinsics)
        assert (triangle >= 0).all()
        assert set(np.unique(triangle)) == {0, 1}


class TestSceneRendering:
    def test_geometric_schedule(self):
        distances = geometric_schedule(5, 1.0, 16.0)
        np.testing.assert_allclose(distances, [1.0, 2.0, 4.0, 8.0, 16.0])
        with pytest.raises(DataError):
            geometric_schedule(5, 0.0, 16.0)

    def test_flat_nadir_render(self, intrinsics):
        lulc, dem = _flat_world()
        pose = CameraPose((ORIGIN[0] + 100.0, ORIGIN[1] - 100.0, 100.0), NADIR_ATTITUDE)
        scene = sample_scene(lulc, dem, pose, extent=(70.0, 140.0), grid=(128, 160), symmetric=True)
        labels, depth = render_labels(scene, pose, intrinsics)
        assert (labels != UNKNOWN_LABEL).all()
        np.testing.assert_allclose(depth, 100.0, rtol=1e-5)
        assert (labels[:, :30] == 0).all()
        assert (labels[:, 34:] == 2).all()

    def test_footprint_outside_raster(self, intrinsics):
        lulc, dem = _flat_world(20)
        pose = CameraPose((ORIGIN[0] + 5000.0, ORIGIN[1], 100.0), NADIR_ATTITUDE)
        with pytest.raises(DataError):
            sample_scene(lulc, dem, pose, extent=(70.0, 140.0), grid=(16, 16))

    def test_misaligned_inputs(self, intrinsics, nadir_pose):
        lulc, _ = _flat_world(20)
        dem = make_raster(np.zeros((10, 10), dtype=np.float32))
        with pytest.raises(DataError):
            sample_scene(lulc, dem, nadir_pose, extent=(70.0, 140.0), grid=(16, 16))


class TestProjectRaster:
    def test_nadir_drape_matches_raster_window(self, intrinsics):
        data = np.arange(200 * 200, dtype=np.uint16).reshape(200, 200)
        raster = make_raster(data)
        pose = CameraPose((ORIGIN[0] + 100.0, ORIGIN[1] - 100.0, 100.0), NADIR_ATTITUDE)
        depth = np.full((48, 64), 100.0)
        projected = project_raster(raster, depth, pose, intrinsics)
        np.testing.assert_array_equal(projected, data[76:124, 68:132])
        assert projected.dtype == np.uint16

    def test_uncovered_pixels_get_fill(self, intrinsics, nadir_pose):
        raster = make_raster(np.ones((200, 200), dtype=np.uint8))
        depth = np.full((48, 64), 100.0)
        depth[0, 0] = np.nan
        projected = project_raster(raster, depth, nadir_pose, intrinsics)
        assert projected[0, 0] == UNKNOWN_LABEL
        assert projected[1, 1] == 1
