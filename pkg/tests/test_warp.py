import numpy as np
import pytest

from lulc2label.errors import DataError
from lulc2label.geo import ResampleMethod, align_and_crop, reproject, resample, resample_like
from lulc2label.models import Crs, GeoTransform, Raster

from .conftest import make_raster


def test_nearest_downsample_picks_pixel_under_center():
    data = np.arange(16, dtype=np.uint8).reshape(4, 4)
    result = resample(make_raster(data), 2.0, "nearest")
    assert result.data.shape == (1, 2, 2)
    np.testing.assert_array_equal(result.band(), data[1::2, 1::2])


def test_nearest_upsample_repeats_pixels():
    data = np.arange(9, dtype=np.uint8).reshape(3, 3)
    result = resample(make_raster(data), 0.5, ResampleMethod.NEAREST)
    np.testing.assert_array_equal(result.band(), np.repeat(np.repeat(data, 2, axis=0), 2, axis=1))
    assert result.dtype == np.uint8


def test_same_resolution_is_returned_unchanged(label_raster):
    assert resample(label_raster, 1.0, "nearest") is label_raster


@pytest.mark.parametrize("method", ["bilinear", "bicubic"])
def test_interpolation_rejected_for_labels(label_raster, method):
    with pytest.raises(DataError):
        resample(label_raster, 0.5, method)


def test_bilinear_reproduces_linear_ramp():
    ramp = np.tile(np.arange(4, dtype=np.float32), (4, 1))
    result = resample(make_raster(ramp), 0.5, "bilinear")
    expected = (np.arange(8) + 0.5) / 2.0 - 0.5
    np.testing.assert_allclose(result.band()[:, 1:7], np.tile(expected[1:7], (8, 1)), atol=1e-6)
    assert result.dtype == np.float32


def test_nodata_pixels_poison_their_stencil():
    data = np.ones((4, 4), dtype=np.float32)
    data[1, 1] = -9999.0
    result = resample(make_raster(data, nodata=-9999.0), 0.5, "bilinear")
    mask = result.nodata_mask()
    assert mask[2:4, 2:4].all()
    assert not mask[6:, 6:].any()
    np.testing.assert_allclose(result.band()[~mask], 1.0)


def test_rejects_non_positive_resolution(label_raster):
    with pytest.raises(DataError):
        resample(label_raster, 0.0, "nearest")


def test_rejects_rotated_transform():
    raster = Raster(np.zeros((2, 2), dtype=np.float32), GeoTransform(0.0, 0.0, 1.0, -1.0, 0.1, 0.0), Crs.utm(32))
    with pytest.raises(DataError):
        resample(raster, 2.0, "nearest")


def test_reproject_keeps_constant_field():
    raster = make_raster(np.full((20, 20), 7.0, dtype=np.float32), resolution=10.0)
    result = reproject(raster, Crs.utm(33), 10.0, "bilinear")
    assert result.crs == Crs.utm(33)
    valid = ~result.nodata_mask()
    assert valid.sum() > 100
    np.testing.assert_allclose(result.band()[valid], 7.0, atol=1e-5)


def test_reproject_same_crs_is_resample(label_raster):
    result = reproject(label_raster, label_raster.crs, 2.0, "nearest")
    assert result.data.shape == (1, 8, 10)


def test_align_and_crop_intersects_on_finest_grid():
    fine = Raster(np.arange(100, dtype=np.uint8).reshape(10, 10), GeoTransform(0.0, 10.0, 1.0, -1.0), Crs.utm(32))
    coarse = Raster(np.ones((6, 6), dtype=np.float32), GeoTransform(4.0, 14.0, 2.0, -2.0), Crs.utm(32))
    aligned_fine, aligned_coarse = align_and_crop([fine, coarse])
    assert aligned_fine.data.shape == aligned_coarse.data.shape == (1, 8, 6)
    assert aligned_fine.transform == aligned_coarse.transform == GeoTransform(4.0, 10.0, 1.0, -1.0)
    np.testing.assert_array_equal(aligned_fine.band(), fine.band()[0:8, 4:10])
    assert aligned_coarse.dtype == np.float32


def test_align_rejects_mixed_crs(label_raster):
    other = Raster(label_raster.data, label_raster.transform, Crs.utm(33))
    with pytest.raises(DataError):
        align_and_crop([label_raster, other])


def test_align_rejects_disjoint_extents():
    a = Raster(np.zeros((2, 2), dtype=np.uint8), GeoTransform(0.0, 2.0, 1.0, -1.0), Crs.utm(32))
    b = Raster(np.zeros((2, 2), dtype=np.uint8), GeoTransform(10.0, 2.0, 1.0, -1.0), Crs.utm(32))
    with pytest.raises(DataError):
        align_and_crop([a, b])


def test_resample_like_on_same_grid_is_identity(label_raster):
    assert resample_like(label_raster, label_raster, "nearest") is label_raster
