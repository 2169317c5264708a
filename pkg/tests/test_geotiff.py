import struct

import numpy as np
import pytest

from lulc2label.errors import DataError, TiffFormatError
from lulc2label.models import Crs, GeoTransform, Raster, Window
from lulc2label.repo import GeoTiffRasterRepository, read_geotiff, read_raster, write_geotiff

from .conftest import make_raster


@pytest.mark.parametrize("dtype", ["uint8", "uint16", "int16", "float32"])
@pytest.mark.parametrize("interleave", ["pixel", "band"])
@pytest.mark.parametrize("compress", [True, False])
def test_write_read_preserves_data(tmp_path, rng, dtype, interleave, compress):
    data = (rng.random((3, 17, 23)) * 200).astype(dtype)
    raster = make_raster(data, resolution=10.0)
    path = tmp_path / "raster.tif"
    write_geotiff(raster, path, interleave=interleave, compress=compress)

    loaded = read_geotiff(path)
    assert loaded.dtype == np.dtype(dtype)
    np.testing.assert_array_equal(loaded.data, data)
    assert loaded.transform == raster.transform
    assert loaded.crs == raster.crs


@pytest.mark.parametrize("nodata", [255, 0])
def test_integer_nodata(tmp_path, nodata):
    raster = make_raster(np.array([[1, nodata], [2, 3]], dtype=np.uint8), nodata=nodata)
    write_geotiff(raster, tmp_path / "a.tif")
    assert read_geotiff(tmp_path / "a.tif").nodata == nodata


def test_nan_nodata(tmp_path):
    raster = make_raster(np.array([[np.nan, 1.0]], dtype=np.float32), nodata=float("nan"))
    write_geotiff(raster, tmp_path / "a.tif")
    loaded = read_geotiff(tmp_path / "a.tif")
    assert np.isnan(loaded.nodata)
    np.testing.assert_array_equal(loaded.nodata_mask(), [[True, False]])


def test_southern_and_geographic_crs(tmp_path):
    for crs in (Crs.utm(33, "S"), Crs.wgs84()):
        raster = Raster(np.zeros((2, 2), dtype=np.uint8), GeoTransform(10.0, 50.0, 0.001, -0.001), crs)
        write_geotiff(raster, tmp_path / "a.tif")
        assert read_geotiff(tmp_path / "a.tif").crs == crs


def test_window_read_spans_several_strips(tmp_path, rng):
    data = rng.integers(0, 60000, size=(300, 300)).astype(np.uint16)
    raster = make_raster(data)
    write_geotiff(raster, tmp_path / "big.tif")

    window = Window(row_off=100, col_off=37, height=150, width=80)
    loaded = read_geotiff(tmp_path / "big.tif", window)
    np.testing.assert_array_equal(loaded.band(), data[100:250, 37:117])
    assert loaded.transform == window.shift(raster.transform)


def test_window_outside_raster(tmp_path, label_raster):
    write_geotiff(label_raster, tmp_path / "a.tif")
    with pytest.raises(DataError):
        read_geotiff(tmp_path / "a.tif", Window(10, 10, 10, 10))


def test_pixel_crs_needs_explicit_opt_in(tmp_path):
    raster = Raster(np.ones((4, 4), dtype=np.uint16), GeoTransform.identity(), Crs.pixel())
    write_geotiff(raster, tmp_path / "frame.tif")
    with pytest.raises(TiffFormatError):
        read_geotiff(tmp_path / "frame.tif")
    loaded = read_raster(tmp_path / "frame.tif", require_georef=False)
    assert loaded.crs == Crs.pixel()
    assert loaded.transform == GeoTransform.identity()


def test_rejects_unsupported_dtype(tmp_path):
    with pytest.raises(DataError):
        write_geotiff(make_raster(np.zeros((2, 2), dtype=np.int32)), tmp_path / "a.tif")


@pytest.mark.parametrize(
    "payload",
    [b"", b"XX*\x00\x08\x00\x00\x00", b"II+\x00\x08\x00\x00\x00", b"II*\x00\xff\xff\x00\x00"],
)
def test_corrupt_headers(tmp_path, payload):
    path = tmp_path / "broken.tif"
    path.write_bytes(payload)
    with pytest.raises(TiffFormatError):
        read_geotiff(path)


def test_cyclic_ifd_chain(tmp_path):
    # Ein IFD ohne Einträge, dessen Nachfolger wieder auf sich selbst zeigt
    payload = struct.pack("<2sHI", b"II", 42, 8) + struct.pack("<HI", 0, 8)
    path = tmp_path / "cycle.tif"
    path.write_bytes(payload)
    with pytest.raises(TiffFormatError, match="Zyklische"):
        read_geotiff(path)


def test_truncated_file(tmp_path, label_raster):
    path = tmp_path / "a.tif"
    write_geotiff(label_raster, path, compress=False)
    path.write_bytes(path.read_bytes()[:40])
    with pytest.raises(TiffFormatError):
        read_geotiff(path)


def _read_mutated_headers(tmp_path, raster: Raster, compress: bool, iterations: int, seed: int) -> int:
    """
    Überschreibt 1 bis 4 Bytes in Header, Tag-Werten oder IFD und liest die Datei.

    Erlaubt sind nur ein gelesenes Raster oder ein DataError; jede andere
    Ausnahme lässt den Test scheitern. Gibt die Anzahl gelesener Dateien zurück.
    """
    source = tmp_path / "source.tif"
    write_geotiff(raster, source, compress=compress)
    original = source.read_bytes()
    (ifd_offset,) = struct.unpack_from("<I", original, 4)
    positions = np.r_[0:8, max(8, ifd_offset - 96) : len(original)]
    rng = np.random.default_rng(seed)
    target = tmp_path / "mutated.tif"
    readable = 0
    for _ in range(iterations):
        mutated = bytearray(original)
        for position in rng.choice(positions, size=int(rng.integers(1, 5)), replace=False):
            mutated[position] = int(rng.integers(0, 256))
        target.write_bytes(bytes(mutated))
        try:
            read_geotiff(target, require_georef=bool(rng.integers(0, 2)))
            readable += 1
        except DataError:
            pass
    return readable


@pytest.mark.parametrize("compress", [True, False])
def test_mutated_headers_fail_cleanly(tmp_path, label_raster, compress):
    readable = _read_mutated_headers(tmp_path, label_raster, compress, iterations=300, seed=11)
    assert 0 < readable < 300


@pytest.mark.slow
@pytest.mark.parametrize("compress", [True, False])
def test_mutated_headers_long_run(tmp_path, label_raster, compress):
    _read_mutated_headers(tmp_path, label_raster, compress, iterations=50_000, seed=20_000 + int(compress))


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_geotiff(tmp_path / "missing.tif")


def test_repository_protocol(tmp_path, label_raster):
    repository = GeoTiffRasterRepository(interleave="band", compress=False)
    repository.save(label_raster, tmp_path / "labels.tif")
    np.testing.assert_array_equal(repository.load(tmp_path / "labels.tif").data, label_raster.data)


def test_rasterio_reads_our_files(tmp_path, rng):
    rasterio = pytest.importorskip("rasterio")
    data = rng.random((2, 12, 9)).astype(np.float32)
    raster = make_raster(data, resolution=5.0)
    write_geotiff(raster, tmp_path / "a.tif")
    with rasterio.open(tmp_path / "a.tif") as dataset:
        np.testing.assert_array_equal(dataset.read(), data)
        assert dataset.crs.to_epsg() == 32632
        assert dataset.transform.c == raster.transform.origin_x
        assert dataset.transform.f == raster.transform.origin_y


def test_we_read_rasterio_tiled_files(tmp_path, rng):
    rasterio = pytest.importorskip("rasterio")
    from rasterio.transform import from_origin

    data = rng.integers(0, 1000, size=(3, 40, 50)).astype(np.int16)
    profile = {
        "driver": "GTiff",
        "height": 40,
        "width": 50,
        "count": 3,
        "dtype": "int16",
        "crs": "EPSG:32632",
        "transform": from_origin(500_000.0, 5_300_000.0, 2.0, 2.0),
        "tiled": True,
        "blockxsize": 16,
        "blockysize": 16,
        "compress": "deflate",
        "nodata": -1,
    }
    with rasterio.open(tmp_path / "tiled.tif", "w", **profile) as dataset:
        dataset.write(data)

    loaded = read_geotiff(tmp_path / "tiled.tif")
    np.testing.assert_array_equal(loaded.data, data)
    assert loaded.nodata == -1
    assert loaded.transform == GeoTransform(500_000.0, 5_300_000.0, 2.0, -2.0)
    window = read_geotiff(tmp_path / "tiled.tif", Window(5, 20, 20, 20))
    np.testing.assert_array_equal(window.data, data[:, 5:25, 20:40])
