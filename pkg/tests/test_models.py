import numpy as np
import pytest

from lulc2label.errors import DataError, RleFormatError
from lulc2label.models import (
    CameraIntrinsics,
    CameraPose,
    ClassMap,
    ConfusionMatrix,
    CrfParams,
    Crs,
    GeoTransform,
    MaskSet,
    RleMask,
    Window,
)

from .conftest import make_raster


class TestCrs:
    def test_epsg_round_trip(self):
        for crs in (Crs.wgs84(), Crs.utm(32), Crs.utm(1, "S"), Crs.utm(60, "S")):
            assert Crs.from_epsg(crs.epsg) == crs

    def test_utm_codes(self):
        assert Crs.utm(32).epsg == 32632
        assert Crs.utm(33, "S").epsg == 32733

    def test_pixel_has_no_epsg(self):
        assert Crs.pixel().epsg is None

    @pytest.mark.parametrize("zone", [0, 61])
    def test_rejects_invalid_zone(self, zone):
        with pytest.raises(DataError):
            Crs.utm(zone)

    def test_rejects_unsupported_epsg(self):
        with pytest.raises(DataError):
            Crs.from_epsg(3857)


class TestGeoTransform:
    def test_pixel_world_inverse(self):
        transform = GeoTransform(500_000.0, 5_300_000.0, 2.0, -2.0, 0.5, 0.25)
        col, row = np.array([0.0, 3.5, 10.0]), np.array([0.0, 7.25, 1.0])
        x, y = transform.pixel_to_world(col, row)
        back_col, back_row = transform.world_to_pixel(x, y)
        np.testing.assert_allclose(back_col, col, atol=1e-9)
        np.testing.assert_allclose(back_row, row, atol=1e-9)

    def test_gdal_order(self):
        transform = GeoTransform.from_gdal((10.0, 1.0, 0.0, 20.0, 0.0, -1.0))
        assert transform.origin_x == 10.0
        assert transform.origin_y == 20.0
        assert transform.pixel_height == -1.0
        assert transform.to_gdal() == (10.0, 1.0, 0.0, 20.0, 0.0, -1.0)

    def test_bounds_north_up(self):
        transform = GeoTransform(100.0, 200.0, 10.0, -10.0)
        assert transform.bounds(height=3, width=4) == (100.0, 170.0, 140.0, 200.0)

    def test_rejects_zero_pixel_size(self):
        with pytest.raises(DataError):
            GeoTransform(0.0, 0.0, 0.0, -1.0)


class TestRaster:
    def test_two_dimensional_data_gets_band_axis(self):
        raster = make_raster(np.zeros((3, 4), dtype=np.uint8))
        assert (raster.bands, raster.height, raster.width) == (1, 3, 4)
        assert raster.is_label

    def test_data_is_read_only_copy(self):
        source = np.zeros((2, 2), dtype=np.float32)
        raster = make_raster(source)
        source[0, 0] = 5.0
        assert raster.band()[0, 0] == 0.0
        with pytest.raises(ValueError):
            raster.data[0, 0, 0] = 1.0

    def test_float_raster_is_not_label(self):
        assert not make_raster(np.zeros((2, 2), dtype=np.float32)).is_label

    def test_nodata_mask(self):
        raster = make_raster(np.array([[1, 255], [255, 2]], dtype=np.uint8), nodata=255)
        np.testing.assert_array_equal(raster.nodata_mask(), [[False, True], [True, False]])

    def test_nan_nodata_mask(self):
        raster = make_raster(np.array([[np.nan, 1.0]], dtype=np.float32), nodata=float("nan"))
        np.testing.assert_array_equal(raster.nodata_mask(), [[True, False]])

    def test_validate_label_range(self):
        raster = make_raster(np.array([[0, 1], [4, 255]], dtype=np.uint8), nodata=255)
        with pytest.raises(DataError):
            raster.validate(num_classes=4)
        assert raster.validate(num_classes=5) is raster

    def test_validate_rejects_nan_without_nodata(self):
        with pytest.raises(DataError):
            make_raster(np.array([[np.nan]], dtype=np.float32)).validate()

    def test_with_data_keeps_georeference(self, label_raster):
        other = label_raster.with_data(np.ones((16, 20), dtype=np.uint8), nodata=0)
        assert other.transform == label_raster.transform
        assert other.crs == label_raster.crs
        assert other.nodata == 0


class TestCrfParams:
    def test_rejects_negative_weight(self):
        with pytest.raises(DataError):
            CrfParams(w1=-1.0, w2=1.0, theta_alpha=1.0, theta_gamma=1.0, theta_beta=(1.0,))

    def test_rejects_zero_bandwidth(self):
        with pytest.raises(DataError):
            CrfParams(w1=1.0, w2=1.0, theta_alpha=0.0, theta_gamma=1.0, theta_beta=(1.0,))

    def test_band_count_check(self):
        params = CrfParams(w1=1.0, w2=1.0, theta_alpha=1.0, theta_gamma=1.0, theta_beta=(1.0, 2.0))
        params.check_bands(2)
        with pytest.raises(DataError):
            params.check_bands(3)


class TestCameraModels:
    def test_principal_point_inside_image(self):
        with pytest.raises(DataError):
            CameraIntrinsics(fx=10.0, fy=10.0, cx=64.0, cy=10.0, width=64, height=48)

    def test_rejects_unnormalized_quaternion(self):
        with pytest.raises(DataError):
            CameraPose((0.0, 0.0, 10.0), (1.0, 1.0, 0.0, 0.0))

    def test_rejects_non_finite_position(self):
        with pytest.raises(DataError):
            CameraPose((np.nan, 0.0, 10.0), (1.0, 0.0, 0.0, 0.0))


class TestRle:
    def test_encode_column_major_starting_with_zeros(self):
        mask = np.array([[1, 0], [1, 1]], dtype=bool)
        rle = RleMask.encode(mask)
        # Spaltenweise: 1, 1, 0, 1
        assert rle.counts == (0, 2, 1, 1)
        np.testing.assert_array_equal(rle.decode(), mask)
        assert rle.area == 3

    def test_rejects_wrong_total(self):
        with pytest.raises(RleFormatError):
            RleMask(2, 2, (1, 2))

    def test_mask_set_from_label_image_partitions(self):
        segments = np.array([[0, 0, 1], [2, 2, 1]])
        masks = MaskSet.from_label_image(segments)
        assert len(masks) == 3
        assert not masks.overlapping
        coverage = sum(m.decode().astype(int) for m in masks.masks)
        np.testing.assert_array_equal(coverage, np.ones((2, 3)))

    def test_mask_set_rejects_empty_mask(self):
        with pytest.raises(RleFormatError):
            MaskSet((RleMask.encode(np.zeros((2, 2), dtype=bool)),), 2, 2)


class TestClassMap:
    def test_targets_must_be_contiguous(self):
        with pytest.raises(DataError):
            ClassMap("bad", {0: 0, 1: 2})

    def test_ignore_and_mapping_disjoint(self):
        with pytest.raises(DataError):
            ClassMap("bad", {0: 0, 1: 1}, ignore=frozenset({1}))

    def test_num_targets(self):
        assert ClassMap("merge", {0: 0, 1: 1, 2: 1, 3: 2}).num_targets == 3


class TestConfusionMatrix:
    def test_addition(self):
        total = ConfusionMatrix(np.eye(2)) + ConfusionMatrix(np.ones((2, 2)))
        np.testing.assert_array_equal(total.counts, [[2, 1], [1, 2]])
        assert total.total == 6

    def test_rejects_mismatched_sizes(self):
        with pytest.raises(DataError):
            ConfusionMatrix.zeros(2) + ConfusionMatrix.zeros(3)


class TestWindow:
    def test_shift_moves_origin(self):
        transform = GeoTransform(100.0, 200.0, 2.0, -2.0)
        shifted = Window(row_off=3, col_off=5, height=2, width=2).shift(transform)
        assert (shifted.origin_x, shifted.origin_y) == (110.0, 194.0)

    def test_check_within(self):
        with pytest.raises(DataError):
            Window(0, 0, 5, 5).check_within(4, 10)
