"""
Leser und Schreiber für eine dokumentierte GeoTIFF-Teilmenge.

Unterstützt: klassisches TIFF (II/MM), unkomprimiert oder Deflate, Strips oder
Tiles, uint8/uint16/int16/float32, Pixel- oder Band-Interleave, GeoKeys für
EPSG 4326 und WGS84/UTM. Der Schreiber erzeugt immer Little-Endian, Strips und
Deflate (abschaltbar).
"""

import logging
import math
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..config import (
    COMPRESSION_DEFLATE,
    COMPRESSION_NONE,
    EPSG_WGS84,
    GEOKEY_GEOGRAPHIC_TYPE,
    GEOKEY_MODEL_TYPE,
    GEOKEY_PROJECTED_CS_TYPE,
    GEOKEY_RASTER_TYPE,
    MODEL_TYPE_GEOGRAPHIC,
    MODEL_TYPE_PROJECTED,
    RASTER_PIXEL_IS_AREA,
    RASTER_PIXEL_IS_POINT,
    SUPPORTED_DTYPES,
    TAG_BITS_PER_SAMPLE,
    TAG_COMPRESSION,
    TAG_GDAL_NODATA,
    TAG_GEO_KEY_DIRECTORY,
    TAG_IMAGE_LENGTH,
    TAG_IMAGE_WIDTH,
    TAG_MODEL_PIXEL_SCALE,
    TAG_MODEL_TIEPOINT,
    TAG_PHOTOMETRIC,
    TAG_PLANAR_CONFIG,
    TAG_PREDICTOR,
    TAG_ROWS_PER_STRIP,
    TAG_SAMPLE_FORMAT,
    TAG_SAMPLES_PER_PIXEL,
    TAG_STRIP_BYTE_COUNTS,
    TAG_STRIP_OFFSETS,
    TAG_TILE_BYTE_COUNTS,
    TAG_TILE_LENGTH,
    TAG_TILE_OFFSETS,
    TAG_TILE_WIDTH,
    TIFF_FIELD_TYPES,
)
from ..errors import DataError, TiffFormatError
from ..models import Crs, CrsKind, GeoTransform, Raster, Window, validate_raster

logger = logging.getLogger(__name__)

_MAX_IFDS = 4096
# zlib erreicht höchstens ~1032:1
_MAX_INFLATE_RATIO = 1032
_STRIP_TARGET_BYTES = 64 * 1024

# (SampleFormat, BitsPerSample) -> numpy dtype
_SAMPLE_DTYPES = {
    (1, 8): "u1",
    (1, 16): "u2",
    (2, 16): "i2",
    (3, 32): "f4",
}
_DTYPE_SAMPLES = {
    "uint8": (1, 8),
    "uint16": (1, 16),
    "int16": (2, 16),
    "float32": (3, 32),
}


@dataclass(frozen=True)
class TiffTag:
    tag_id: int
    field_type: int
    count: int
    value: tuple | str


class _TiffParser:
    """Parser für eine TIFF-Datei im Speicher. Alle Zugriffe sind grenzgeprüft."""

    def __init__(self, buffer: bytes):
        self.buffer = buffer
        if len(buffer) < 8:
            raise TiffFormatError(f"Datei zu kurz für einen TIFF-Header ({len(buffer)} Bytes)")
        order = buffer[:2]
        if order == b"II":
            self.order = "<"
        elif order == b"MM":
            self.order = ">"
        else:
            raise TiffFormatError(f"Ungültige Byte-Order-Markierung: {order!r}")
        (magic,) = self._unpack("H", 2)
        if magic == 43:
            raise TiffFormatError("BigTIFF wird nicht unterstützt")
        if magic != 42:
            raise TiffFormatError(f"Ungültige TIFF-Kennung: {magic}")
        (self.first_ifd,) = self._unpack("I", 4)

    def _slice(self, offset: int, size: int) -> bytes:
        if offset < 0 or size < 0 or offset + size > len(self.buffer):
            raise TiffFormatError(
                f"Lesezugriff außerhalb der Datei: Offset {offset}, Länge {size}, Dateigröße {len(self.buffer)}",
            )
        return self.buffer[offset : offset + size]

    def _unpack(self, fmt: str, offset: int) -> tuple:
        size = struct.calcsize(self.order + fmt)
        return struct.unpack(self.order + fmt, self._slice(offset, size))

    def ifd_offsets(self) -> list[int]:
        """Folgt der IFD-Kette und lehnt Zyklen ab."""
        offsets = []
        seen = set()
        offset = self.first_ifd
        while offset != 0:
            if offset in seen:
                raise TiffFormatError(f"Zyklische IFD-Kette bei Offset {offset}")
            if len(offsets) >= _MAX_IFDS:
                raise TiffFormatError(f"Mehr als {_MAX_IFDS} IFDs")
            seen.add(offset)
            offsets.append(offset)
            (count,) = self._unpack("H", offset)
            (offset,) = self._unpack("I", offset + 2 + 12 * count)
        if not offsets:
            raise TiffFormatError("Datei enthält kein IFD")
        return offsets

    def read_ifd(self, offset: int) -> dict[int, TiffTag]:
        (count,) = self._unpack("H", offset)
        tags: dict[int, TiffTag] = {}
        for index in range(count):
            entry = offset + 2 + 12 * index
            tag_id, field_type, value_count = self._unpack("HHI", entry)
            if field_type not in TIFF_FIELD_TYPES or value_count < 1:
                logger.debug(f"Tag {tag_id} mit Typ {field_type}/Anzahl {value_count} übersprungen")
                continue
            fmt, size = TIFF_FIELD_TYPES[field_type]
            total = size * value_count
            if total <= 4:
                raw = self._slice(entry + 8, total)
            else:
                (value_offset,) = self._unpack("I", entry + 8)
                raw = self._slice(value_offset, total)
            tags[tag_id] = TiffTag(tag_id, field_type, value_count, self._decode(field_type, fmt, value_count, raw))
        return tags

    def _decode(self, field_type: int, fmt: str, count: int, raw: bytes) -> tuple | str:
        if field_type == 2:
            return raw.split(b"\x00", 1)[0].decode("latin-1")
        if field_type == 5:
            pairs = struct.unpack(f"{self.order}{2 * count}I", raw)
            return tuple(n / d if d else math.nan for n, d in zip(pairs[0::2], pairs[1::2], strict=True))
        return struct.unpack(f"{self.order}{count}{fmt}", raw)


def _single(tags: dict[int, TiffTag], tag_id: int, default: int | None = None) -> int:
    tag = tags.get(tag_id)
    if tag is None:
        if default is None:
            raise TiffFormatError(f"Pflicht-Tag {tag_id} fehlt")
        return default
    return int(tag.value[0])


def _uniform(tags: dict[int, TiffTag], tag_id: int, default: int, samples: int) -> int:
    tag = tags.get(tag_id)
    if tag is None:
        return default
    values = set(int(v) for v in tag.value)
    if len(values) != 1 or tag.count not in (1, samples):
        raise TiffFormatError(f"Tag {tag_id}: uneinheitliche Werte je Sample werden nicht unterstützt: {tag.value}")
    return values.pop()


@dataclass(frozen=True)
class _Layout:
    height: int
    width: int
    samples: int
    dtype: np.dtype
    planar: bool
    compression: int
    tiled: bool
    chunk_height: int
    chunk_width: int
    offsets: tuple[int, ...]
    byte_counts: tuple[int, ...]

    @property
    def chunks_down(self) -> int:
        return -(-self.height // self.chunk_height)

    @property
    def chunks_across(self) -> int:
        return -(-self.width // self.chunk_width) if self.tiled else 1

    @property
    def chunks_per_plane(self) -> int:
        return self.chunks_down * self.chunks_across


def _layout(tags: dict[int, TiffTag], file_size: int) -> _Layout:
    width = _single(tags, TAG_IMAGE_WIDTH)
    height = _single(tags, TAG_IMAGE_LENGTH)
    if width < 1 or height < 1:
        raise TiffFormatError(f"Leere Bildgröße {width}x{height}")
    samples = _single(tags, TAG_SAMPLES_PER_PIXEL, 1)
    if samples < 1:
        raise TiffFormatError(f"SamplesPerPixel muss >= 1 sein: {samples}")
    bits = _uniform(tags, TAG_BITS_PER_SAMPLE, 1, samples)
    sample_format = _uniform(tags, TAG_SAMPLE_FORMAT, 1, samples)
    dtype_code = _SAMPLE_DTYPES.get((sample_format, bits))
    if dtype_code is None:
        raise TiffFormatError(
            f"Nicht unterstütztes Sampleformat: SampleFormat={sample_format}, BitsPerSample={bits}",
        )
    compression = _single(tags, TAG_COMPRESSION, COMPRESSION_NONE)
    if compression != COMPRESSION_NONE and compression not in COMPRESSION_DEFLATE:
        raise TiffFormatError(f"Nicht unterstützte Kompression: Compression={compression}")
    predictor = _single(tags, TAG_PREDICTOR, 1)
    if predictor != 1:
        raise TiffFormatError(f"Nicht unterstützter Predictor: Predictor={predictor}")
    planar_config = _single(tags, TAG_PLANAR_CONFIG, 1)
    if planar_config not in (1, 2):
        raise TiffFormatError(f"Ungültige PlanarConfiguration: {planar_config}")

    dtype = np.dtype(dtype_code)
    decoded = width * height * samples * dtype.itemsize
    if decoded > _MAX_INFLATE_RATIO * file_size + (1 << 20):
        raise TiffFormatError(f"Bildgröße {width}x{height}x{samples} unplausibel für eine Datei mit {file_size} Bytes")

    tiled = TAG_TILE_OFFSETS in tags
    if tiled:
        chunk_width = _single(tags, TAG_TILE_WIDTH)
        chunk_height = _single(tags, TAG_TILE_LENGTH)
        offsets_tag, counts_tag = TAG_TILE_OFFSETS, TAG_TILE_BYTE_COUNTS
    else:
        chunk_width = width
        chunk_height = min(_single(tags, TAG_ROWS_PER_STRIP, height), height)
        offsets_tag, counts_tag = TAG_STRIP_OFFSETS, TAG_STRIP_BYTE_COUNTS
    if chunk_width < 1 or chunk_height < 1:
        raise TiffFormatError(f"Ungültige Kachel-/Stripgröße {chunk_width}x{chunk_height}")
    if offsets_tag not in tags or counts_tag not in tags:
        raise TiffFormatError(f"Tags {offsets_tag}/{counts_tag} fehlen")

    layout = _Layout(
        height=height,
        width=width,
        samples=samples,
        dtype=dtype,
        planar=planar_config == 2,
        compression=compression,
        tiled=tiled,
        chunk_height=chunk_height,
        chunk_width=chunk_width,
        offsets=tuple(int(v) for v in tags[offsets_tag].value),
        byte_counts=tuple(int(v) for v in tags[counts_tag].value),
    )
    expected = layout.chunks_per_plane * (samples if layout.planar else 1)
    if len(layout.offsets) != expected or len(layout.byte_counts) != expected:
        raise TiffFormatError(
            f"Erwartet {expected} Strips/Tiles, gefunden {len(layout.offsets)} Offsets und "
            f"{len(layout.byte_counts)} Bytezähler",
        )
    return layout


def _decode_chunk(parser: _TiffParser, layout: _Layout, index: int, rows: int, cols: int) -> np.ndarray:
    """Dekodiert Strip/Tile `index` zu (samples_in_chunk, rows, cols)."""
    samples = 1 if layout.planar else layout.samples
    expected = rows * cols * samples * layout.dtype.itemsize
    raw = parser._slice(layout.offsets[index], layout.byte_counts[index])
    if layout.compression in COMPRESSION_DEFLATE:
        try:
            raw = zlib.decompressobj().decompress(raw, expected)
        except zlib.error as err:
            raise TiffFormatError(f"Deflate-Fehler in Strip/Tile {index}: {err}") from err
    if len(raw) < expected:
        raise TiffFormatError(f"Strip/Tile {index} zu kurz: {len(raw)} statt {expected} Bytes")
    chunk = np.frombuffer(raw[:expected], dtype=layout.dtype.newbyteorder(parser.order))
    chunk = chunk.reshape(rows, cols, samples)
    return np.moveaxis(chunk, -1, 0).astype(layout.dtype)


def _read_pixels(parser: _TiffParser, layout: _Layout, window: Window) -> np.ndarray:
    out = np.empty((layout.samples, window.height, window.width), dtype=layout.dtype)
    row_end = window.row_off + window.height
    col_end = window.col_off + window.width
    first_down = window.row_off // layout.chunk_height
    last_down = (row_end - 1) // layout.chunk_height
    first_across = window.col_off // layout.chunk_width
    last_across = (col_end - 1) // layout.chunk_width
    planes = range(layout.samples) if layout.planar else range(1)

    for plane in planes:
        for down in range(first_down, last_down + 1):
            for across in range(first_across, last_across + 1):
                index = plane * layout.chunks_per_plane + down * layout.chunks_across + across
                r0 = down * layout.chunk_height
                c0 = across * layout.chunk_width
                if layout.tiled:
                    rows, cols = layout.chunk_height, layout.chunk_width
                else:
                    rows, cols = min(layout.chunk_height, layout.height - r0), layout.width
                chunk = _decode_chunk(parser, layout, index, rows, cols)
                # Schnitt von Chunk und Fenster in Bildkoordinaten
                ra, rb = max(r0, window.row_off), min(r0 + rows, row_end, layout.height)
                ca, cb = max(c0, window.col_off), min(c0 + cols, col_end, layout.width)
                target = slice(plane, plane + 1) if layout.planar else slice(None)
                out[target, ra - window.row_off : rb - window.row_off, ca - window.col_off : cb - window.col_off] = chunk[
                    :, ra - r0 : rb - r0, ca - c0 : cb - c0
                ]
    return out


def _read_geokeys(tags: dict[int, TiffTag]) -> dict[int, int]:
    tag = tags.get(TAG_GEO_KEY_DIRECTORY)
    if tag is None:
        return {}
    values = tag.value
    if len(values) < 4:
        raise TiffFormatError("GeoKeyDirectory zu kurz")
    count = int(values[3])
    if len(values) < 4 + 4 * count:
        raise TiffFormatError(f"GeoKeyDirectory deklariert {count} Schlüssel, enthält aber nur {len(values)} Werte")
    keys = {}
    for index in range(count):
        key_id, location, _, value = values[4 + 4 * index : 8 + 4 * index]
        if location == 0:
            keys[int(key_id)] = int(value)
    return keys


def _georeference(tags: dict[int, TiffTag], path: Path) -> tuple[GeoTransform, Crs]:
    hint = "für Rohdaten ohne Georeferenz das Sidecar-Format (.hdr/.bin) verwenden"
    keys = _read_geokeys(tags)
    if not keys or TAG_MODEL_PIXEL_SCALE not in tags or TAG_MODEL_TIEPOINT not in tags:
        raise TiffFormatError(f"{path}: GeoKeys, ModelPixelScale oder ModelTiepoint fehlen; {hint}")

    model_type = keys.get(GEOKEY_MODEL_TYPE)
    projected = keys.get(GEOKEY_PROJECTED_CS_TYPE)
    geographic = keys.get(GEOKEY_GEOGRAPHIC_TYPE)
    if model_type is None:
        if (projected is None) == (geographic is None):
            raise TiffFormatError(f"{path}: genau ein projiziertes oder geographisches CS erwartet; {hint}")
        model_type = MODEL_TYPE_PROJECTED if projected is not None else MODEL_TYPE_GEOGRAPHIC
    if model_type == MODEL_TYPE_PROJECTED and projected is not None:
        code = projected
    elif model_type == MODEL_TYPE_GEOGRAPHIC and geographic is not None:
        code = geographic
    else:
        raise TiffFormatError(f"{path}: ModelType {model_type} ohne passenden EPSG-Code; {hint}")
    try:
        crs = Crs.from_epsg(code)
    except DataError as err:
        raise TiffFormatError(f"{path}: {err}; {hint}") from err

    scale = tags[TAG_MODEL_PIXEL_SCALE].value
    tiepoint = tags[TAG_MODEL_TIEPOINT].value
    if len(scale) < 2 or len(tiepoint) < 6:
        raise TiffFormatError(f"{path}: ModelPixelScale/ModelTiepoint unvollständig")
    sx, sy = float(scale[0]), float(scale[1])
    if not (sx > 0 and sy > 0 and math.isfinite(sx) and math.isfinite(sy)):
        raise TiffFormatError(f"{path}: ModelPixelScale muss strikt positiv sein: {scale[:2]}")
    i, j, _, x, y, _ = (float(v) for v in tiepoint[:6])
    origin_x = x - i * sx
    origin_y = y + j * sy
    if keys.get(GEOKEY_RASTER_TYPE, RASTER_PIXEL_IS_AREA) == RASTER_PIXEL_IS_POINT:
        origin_x -= sx / 2.0
        origin_y += sy / 2.0
    return GeoTransform(origin_x, origin_y, sx, -sy), crs


def _parse_nodata(tags: dict[int, TiffTag], dtype: np.dtype) -> float | int | None:
    tag = tags.get(TAG_GDAL_NODATA)
    if tag is None:
        return None
    text = str(tag.value).strip()
    try:
        value = float(text)
    except ValueError as err:
        raise TiffFormatError(f"Ungültiger GDAL_NODATA-Wert: {text!r}") from err
    if dtype.kind in "ui":
        if not value.is_integer():
            logger.warning(f"Nodata {text} passt nicht zum Ganzzahltyp {dtype}; ignoriert")
            return None
        return int(value)
    return value


def read_geotiff(
    path: Path,
    window: Window | None = None,
    require_georef: bool = True,
) -> Raster:
    """
    Liest das erste Bild einer GeoTIFF-Datei.

    Args:
        path: Pfad zur Datei
        window: Optionaler Ausschnitt; nur geschnittene Strips/Tiles werden dekodiert
        require_georef: Bei False werden Dateien ohne GeoKeys als Pixelraster gelesen

    Returns:
        Raster mit Bandreihenfolge wie in der Datei
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Datei nicht gefunden: {path}")
    buffer = path.read_bytes()
    try:
        parser = _TiffParser(buffer)
        offsets = parser.ifd_offsets()
        tags = parser.read_ifd(offsets[0])
        layout = _layout(tags, len(buffer))
        window = window or Window(0, 0, layout.height, layout.width)
        window.check_within(layout.height, layout.width)
        data = _read_pixels(parser, layout, window)
        nodata = _parse_nodata(tags, layout.dtype)
        if require_georef:
            transform, crs = _georeference(tags, path)
        else:
            try:
                transform, crs = _georeference(tags, path)
            except TiffFormatError:
                transform, crs = GeoTransform.identity(), Crs.pixel()
    except DataError:
        raise
    except (struct.error, ValueError, IndexError, OverflowError, MemoryError) as err:
        raise TiffFormatError(f"{path}: beschädigte TIFF-Datei ({err})") from err

    if window.row_off or window.col_off:
        transform = window.shift(transform)
    logger.debug(f"GeoTIFF gelesen: {path.name} {data.shape} {data.dtype} {crs}")
    return Raster(data, transform, crs, nodata)


def _encode_nodata(nodata: float | int, dtype: np.dtype) -> str:
    if dtype.kind in "ui":
        return str(int(nodata))
    value = float(nodata)
    return "nan" if math.isnan(value) else repr(value)


def _geokeys(crs: Crs) -> list[int]:
    if crs.kind == CrsKind.UTM:
        keys = [
            (GEOKEY_MODEL_TYPE, MODEL_TYPE_PROJECTED),
            (GEOKEY_RASTER_TYPE, RASTER_PIXEL_IS_AREA),
            (GEOKEY_PROJECTED_CS_TYPE, crs.epsg),
        ]
    else:
        keys = [
            (GEOKEY_MODEL_TYPE, MODEL_TYPE_GEOGRAPHIC),
            (GEOKEY_RASTER_TYPE, RASTER_PIXEL_IS_AREA),
            (GEOKEY_GEOGRAPHIC_TYPE, EPSG_WGS84),
        ]
    directory = [1, 1, 0, len(keys)]
    for key_id, value in sorted(keys):
        directory.extend([key_id, 0, 1, value])
    return directory


def write_geotiff(raster: Raster, path: Path, interleave: str = "pixel", compress: bool = True) -> None:
    """
    Schreibt ein Raster als Little-Endian-GeoTIFF mit Strips.

    Args:
        raster: Zu schreibendes Raster
        path: Zielpfad
        interleave: "pixel" (chunky) oder "band" (planar)
        compress: Deflate-Kompression der Strips
    """
    validate_raster(raster)
    dtype = raster.dtype
    if dtype.name not in SUPPORTED_DTYPES:
        raise DataError(f"Datentyp {dtype} kann nicht geschrieben werden (unterstützt: {sorted(SUPPORTED_DTYPES)})")
    if interleave not in ("pixel", "band"):
        raise DataError(f"Unbekanntes Interleave: {interleave}")
    georeferenced = raster.crs.kind != CrsKind.PIXEL
    transform = raster.transform
    if georeferenced and not (transform.is_north_up and transform.pixel_width > 0 and transform.pixel_height < 0):
        raise DataError("Nur nordausgerichtete GeoTransforms (pixel_width > 0, pixel_height < 0) sind schreibbar")

    planar = interleave == "band" and raster.bands > 1
    samples = raster.bands
    little = raster.data.astype(dtype.newbyteorder("<"), copy=False)
    row_bytes = raster.width * (1 if planar else samples) * dtype.itemsize
    rows_per_strip = max(1, min(raster.height, _STRIP_TARGET_BYTES // max(row_bytes, 1)))

    strips = []
    planes = [little[b : b + 1] for b in range(samples)] if planar else [little]
    for plane in planes:
        for r0 in range(0, raster.height, rows_per_strip):
            block = np.moveaxis(plane[:, r0 : r0 + rows_per_strip], 0, -1)
            payload = np.ascontiguousarray(block).tobytes()
            strips.append(zlib.compress(payload, 6) if compress else payload)

    sample_format, bits = _DTYPE_SAMPLES[dtype.name]
    entries: list[tuple[int, int, list]] = [
        (TAG_IMAGE_WIDTH, 4, [raster.width]),
        (TAG_IMAGE_LENGTH, 4, [raster.height]),
        (TAG_BITS_PER_SAMPLE, 3, [bits] * samples),
        (TAG_COMPRESSION, 3, [8 if compress else COMPRESSION_NONE]),
        (TAG_PHOTOMETRIC, 3, [1]),
        (TAG_STRIP_OFFSETS, 4, [0] * len(strips)),
        (TAG_SAMPLES_PER_PIXEL, 3, [samples]),
        (TAG_ROWS_PER_STRIP, 4, [rows_per_strip]),
        (TAG_STRIP_BYTE_COUNTS, 4, [len(s) for s in strips]),
        (TAG_PLANAR_CONFIG, 3, [2 if planar else 1]),
        (TAG_SAMPLE_FORMAT, 3, [sample_format] * samples),
    ]
    if georeferenced:
        entries += [
            (TAG_MODEL_PIXEL_SCALE, 12, [transform.pixel_width, -transform.pixel_height, 0.0]),
            (TAG_MODEL_TIEPOINT, 12, [0.0, 0.0, 0.0, transform.origin_x, transform.origin_y, 0.0]),
            (TAG_GEO_KEY_DIRECTORY, 3, _geokeys(raster.crs)),
        ]
    if raster.nodata is not None:
        entries.append((TAG_GDAL_NODATA, 2, list(_encode_nodata(raster.nodata, dtype).encode("ascii") + b"\x00")))
    entries.sort(key=lambda e: e[0])

    # Layout: Header | Strips | Tag-Werte | IFD
    body = bytearray(struct.pack("<2sHI", b"II", 42, 0))
    strip_offsets = []
    for strip in strips:
        strip_offsets.append(len(body))
        body += strip
        if len(body) % 2:
            body += b"\x00"
    entries = [(t, f, strip_offsets if t == TAG_STRIP_OFFSETS else v) for t, f, v in entries]

    packed_entries = []
    for tag_id, field_type, values in entries:
        fmt, _ = TIFF_FIELD_TYPES[field_type]
        payload = bytes(values) if field_type == 2 else struct.pack(f"<{len(values)}{fmt}", *values)
        if len(payload) <= 4:
            packed_entries.append(struct.pack("<HHI", tag_id, field_type, len(values)) + payload.ljust(4, b"\x00"))
        else:
            offset = len(body)
            body += payload
            if len(body) % 2:
                body += b"\x00"
            packed_entries.append(struct.pack("<HHII", tag_id, field_type, len(values), offset))

    ifd_offset = len(body)
    body += struct.pack("<H", len(packed_entries))
    for entry in packed_entries:
        body += entry
    body += struct.pack("<I", 0)
    struct.pack_into("<I", body, 4, ifd_offset)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(bytes(body))
    logger.debug(f"GeoTIFF geschrieben: {path.name} {raster.data.shape} {dtype} ({len(body)} Bytes)")


class GeoTiffRasterRepository:
    """GeoTIFF-basierte Repository-Implementation für Raster."""

    def __init__(self, interleave: str = "pixel", compress: bool = True, require_georef: bool = True):
        self.interleave = interleave
        self.compress = compress
        self.require_georef = require_georef

    def save(self, raster: Raster, file_path: Path) -> None:
        write_geotiff(raster, file_path, self.interleave, self.compress)

    def load(self, file_path: Path, window: Window | None = None) -> Raster:
        return read_geotiff(file_path, window, self.require_georef)
