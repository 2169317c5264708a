"""
Sidecar-Format: rohe bandweise Binärdaten (.bin) plus Textheader (.hdr).

Der Header ist UTF-8, eine Zeile pro Eintrag im Format ``key=value``:

    format=lulc2label-sidecar
    bands=4
    height=256
    width=256
    dtype=float32
    byte_order=little
    transform=500000.0,10.0,0.0,5600000.0,0.0,-10.0
    epsg=32632            (oder: crs=pixel)
    nodata=-9999.0        (optional)

`transform` steht in GDAL-Reihenfolge.
"""

import logging
import math
from pathlib import Path

import numpy as np

from ..config import SIDECAR_DATA_SUFFIX, SIDECAR_HEADER_SUFFIX
from ..errors import DataError
from ..models import Crs, CrsKind, GeoTransform, Raster, Window, validate_raster

logger = logging.getLogger(__name__)

SIDECAR_FORMAT = "lulc2label-sidecar"
_REQUIRED_KEYS = ("bands", "height", "width", "dtype", "transform")


def sidecar_paths(path: Path) -> tuple[Path, Path]:
    """(Header, Daten) zu einem beliebigen der beiden Pfade oder dem Stamm."""
    path = Path(path)
    if path.suffix in (SIDECAR_HEADER_SUFFIX, SIDECAR_DATA_SUFFIX):
        path = path.with_suffix("")
    return path.with_name(path.name + SIDECAR_HEADER_SUFFIX), path.with_name(path.name + SIDECAR_DATA_SUFFIX)


def is_sidecar(path: Path) -> bool:
    header, _ = sidecar_paths(path)
    return Path(path).suffix in (SIDECAR_HEADER_SUFFIX, SIDECAR_DATA_SUFFIX) or header.exists()


def _parse_header(text: str, header_path: Path) -> dict[str, str]:
    entries = {}
    for number, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{header_path}:{number}: Zeile ohne '=': {line!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    missing = [key for key in _REQUIRED_KEYS if key not in entries]
    if missing:
        raise DataError(f"{header_path}: fehlende Header-Einträge {missing}")
    if entries.get("format", SIDECAR_FORMAT) != SIDECAR_FORMAT:
        raise DataError(f"{header_path}: unbekanntes Format {entries['format']!r}")
    return entries


def read_sidecar(path: Path, window: Window | None = None) -> Raster:
    header_path, data_path = sidecar_paths(path)
    if not header_path.exists():
        raise FileNotFoundError(f"Header nicht gefunden: {header_path}")
    if not data_path.exists():
        raise FileNotFoundError(f"Daten nicht gefunden: {data_path}")
    entries = _parse_header(header_path.read_text(encoding="utf-8"), header_path)

    try:
        bands, height, width = int(entries["bands"]), int(entries["height"]), int(entries["width"])
        dtype = np.dtype(entries["dtype"])
        gdal = [float(v) for v in entries["transform"].split(",")]
    except (TypeError, ValueError) as err:
        raise DataError(f"{header_path}: ungültiger Header ({err})") from err
    if len(gdal) != 6:
        raise DataError(f"{header_path}: transform braucht 6 Werte, erhalten {len(gdal)}")
    order = "<" if entries.get("byte_order", "little") == "little" else ">"

    expected = bands * height * width * dtype.itemsize
    actual = data_path.stat().st_size
    if actual != expected:
        raise DataError(f"{data_path}: {actual} Bytes, erwartet {expected} für {bands}x{height}x{width} {dtype}")

    data = np.memmap(data_path, dtype=dtype.newbyteorder(order), mode="r", shape=(bands, height, width))
    transform = GeoTransform.from_gdal(gdal)
    if window is not None:
        window.check_within(height, width)
        data = data[:, window.row_off : window.row_off + window.height, window.col_off : window.col_off + window.width]
        transform = window.shift(transform)
    array = np.array(data, dtype=dtype)

    if "epsg" in entries:
        crs = Crs.from_epsg(int(entries["epsg"]))
    elif entries.get("crs") == "pixel":
        crs = Crs.pixel()
    else:
        raise DataError(f"{header_path}: weder 'epsg' noch 'crs=pixel' angegeben")

    nodata = None
    if "nodata" in entries:
        value = float(entries["nodata"])
        nodata = int(value) if dtype.kind in "ui" else value
    raster = Raster(array, transform, crs, nodata)
    validate_raster(raster)
    return raster


def write_sidecar(raster: Raster, path: Path) -> None:
    validate_raster(raster)
    header_path, data_path = sidecar_paths(path)
    lines = [
        f"format={SIDECAR_FORMAT}",
        f"bands={raster.bands}",
        f"height={raster.height}",
        f"width={raster.width}",
        f"dtype={raster.dtype.name}",
        "byte_order=little",
        "transform=" + ",".join(repr(float(v)) for v in raster.transform.to_gdal()),
    ]
    if raster.crs.kind == CrsKind.PIXEL:
        lines.append("crs=pixel")
    else:
        lines.append(f"epsg={raster.crs.epsg}")
    if raster.nodata is not None:
        if raster.dtype.kind in "ui":
            lines.append(f"nodata={int(raster.nodata)}")
        else:
            value = float(raster.nodata)
            lines.append(f"nodata={'nan' if math.isnan(value) else repr(value)}")

    header_path.parent.mkdir(parents=True, exist_ok=True)
    data_path.write_bytes(raster.data.astype(raster.dtype.newbyteorder("<"), copy=False).tobytes())
    header_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug(f"Sidecar geschrieben: {header_path.name}")


class SidecarRasterRepository:
    """Sidecar-basierte Repository-Implementation für Raster."""

    def save(self, raster: Raster, file_path: Path) -> None:
        write_sidecar(raster, file_path)

    def load(self, file_path: Path, window: Window | None = None) -> Raster:
        return read_sidecar(file_path, window)
