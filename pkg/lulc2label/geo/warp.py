"""
Resampling, Reprojektion und Ausrichtung von Rastern.

Alle Operationen arbeiten per Inverse-Mapping: jedes Zielpixelzentrum wird
ins Quellraster zurückgerechnet und dort abgetastet. Die Abtastung läuft
zeilenblockweise; das Ergebnis hängt nicht von der Blockgröße ab.
"""

import logging
from enum import StrEnum

import numpy as np

from ..config import DEFAULT_NODATA
from ..errors import DataError
from ..models import Crs, GeoTransform, Raster, validate_raster
from .utm import transform_points

logger = logging.getLogger(__name__)

_ROW_BLOCK = 256
_EDGE_SAMPLES = 33


class ResampleMethod(StrEnum):
    NEAREST = "nearest"
    BILINEAR = "bilinear"
    BICUBIC = "bicubic"


def catmull_rom_weights(t: np.ndarray) -> np.ndarray:
    """Gewichte der Stützstellen -1, 0, 1, 2 für den Bruchteil t (Kern a = -0.5)."""
    t = np.asarray(t, dtype=np.float64)
    t2 = t * t
    t3 = t2 * t
    return np.stack(
        [
            -0.5 * t3 + t2 - 0.5 * t,
            1.5 * t3 - 2.5 * t2 + 1.0,
            -1.5 * t3 + 2.0 * t2 + 0.5 * t,
            0.5 * t3 - 0.5 * t2,
        ],
    )


def _stencil(coord: np.ndarray, size: int, method: ResampleMethod):
    """Indizes (k, ...) und Gewichte (k, ...) entlang einer Achse, randgeklemmt."""
    if method == ResampleMethod.NEAREST:
        index = np.clip(np.floor(coord + 0.5).astype(np.int64), 0, size - 1)
        return index[np.newaxis], np.ones((1, *coord.shape))
    base = np.floor(coord)
    t = coord - base
    base = base.astype(np.int64)
    if method == ResampleMethod.BILINEAR:
        offsets = np.arange(2).reshape(2, *([1] * coord.ndim))
        weights = np.stack([1.0 - t, t])
    else:
        offsets = np.arange(-1, 3).reshape(4, *([1] * coord.ndim))
        weights = catmull_rom_weights(t)
    index = np.clip(base[np.newaxis] + offsets, 0, size - 1)
    return index, weights


def sample_band(
    band: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    method: ResampleMethod,
    invalid: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Tastet ein Band an fraktionalen Pixelzentrums-Koordinaten ab.

    Gibt (Werte, gültig) zurück. Punkte außerhalb des Rasters und Stencils, die
    ein ungültiges Pixel berühren, sind ungültig.
    """
    height, width = band.shape
    inside = (rows >= -0.5) & (rows <= height - 0.5) & (cols >= -0.5) & (cols <= width - 0.5)
    inside &= np.isfinite(rows) & np.isfinite(cols)
    rows = np.where(inside, rows, 0.0)
    cols = np.where(inside, cols, 0.0)

    r_index, r_weight = _stencil(rows, height, method)
    c_index, c_weight = _stencil(cols, width, method)

    if method == ResampleMethod.NEAREST:
        values = band[r_index[0], c_index[0]]
        valid = inside.copy()
        if invalid is not None:
            valid &= ~invalid[r_index[0], c_index[0]]
        return values, valid

    source = band.astype(np.float64, copy=False)
    values = np.zeros(rows.shape, dtype=np.float64)
    valid = inside.copy()
    for i in range(r_index.shape[0]):
        for j in range(c_index.shape[0]):
            ri, cj = r_index[i], c_index[j]
            values += r_weight[i] * c_weight[j] * source[ri, cj]
            if invalid is not None:
                valid &= ~invalid[ri, cj]
    return values, valid


def warp_to_grid(
    raster: Raster,
    transform: GeoTransform,
    height: int,
    width: int,
    method: ResampleMethod,
    crs: Crs | None = None,
) -> Raster:
    """Tastet `raster` auf ein Zielgitter ab (optional in einem anderen CRS)."""
    target_crs = crs or raster.crs
    _require_north_up(raster.transform)
    if method != ResampleMethod.NEAREST and raster.is_label:
        raise DataError(f"{method.value} ist für Labelraster nicht zulässig, nur nearest")

    interpolating = method != ResampleMethod.NEAREST
    out_dtype = raster.dtype
    if interpolating:
        out_dtype = np.dtype(np.float64) if raster.dtype == np.float64 else np.dtype(np.float32)
    invalid = raster.nodata_mask() if raster.nodata is not None else None

    out = np.empty((raster.bands, height, width), dtype=out_dtype)
    valid_out = np.empty((height, width), dtype=bool)
    cols_center = np.arange(width, dtype=np.float64) + 0.5
    for row0 in range(0, height, _ROW_BLOCK):
        row1 = min(height, row0 + _ROW_BLOCK)
        rr, cc = np.meshgrid(np.arange(row0, row1, dtype=np.float64) + 0.5, cols_center, indexing="ij")
        x, y = transform.pixel_to_world(cc, rr)
        if target_crs != raster.crs:
            x, y = transform_points(x, y, target_crs, raster.crs)
        src_col, src_row = raster.transform.world_to_pixel(x, y)
        src_col = src_col - 0.5
        src_row = src_row - 0.5
        block_valid = np.ones(src_row.shape, dtype=bool)
        for b in range(raster.bands):
            values, valid = sample_band(raster.data[b], src_row, src_col, method, invalid)
            out[b, row0:row1] = values.astype(out_dtype, copy=False)
            block_valid &= valid
        valid_out[row0:row1] = block_valid

    nodata = raster.nodata
    if not valid_out.all():
        if nodata is None:
            nodata = DEFAULT_NODATA.get(out_dtype.name, -9999.0)
        out[:, ~valid_out] = nodata
    if nodata is not None and out_dtype.kind == "f":
        nodata = float(nodata)

    result = Raster(out, transform, target_crs, nodata)
    validate_raster(result)
    return result


def resample(raster: Raster, target_res: float, method: ResampleMethod | str) -> Raster:
    """Ändert die Auflösung bei gleichem CRS und gleicher Ausdehnung (±1 Pixel am Rand)."""
    method = ResampleMethod(method)
    if target_res <= 0:
        raise DataError(f"Zielauflösung muss > 0 sein: {target_res}")
    if method != ResampleMethod.NEAREST and raster.is_label:
        raise DataError(f"{method.value} ist für Labelraster nicht zulässig, nur nearest")
    src = raster.transform
    _require_north_up(src)
    if abs(src.pixel_width) == target_res and abs(src.pixel_height) == target_res:
        return raster

    left, bottom, right, top = raster.bounds
    width = max(1, int(round((right - left) / target_res)))
    height = max(1, int(round((top - bottom) / target_res)))
    transform = GeoTransform(
        src.origin_x,
        src.origin_y,
        np.sign(src.pixel_width) * target_res,
        np.sign(src.pixel_height) * target_res,
    )
    logger.debug(f"Resample {raster.height}x{raster.width} -> {height}x{width} ({method.value})")
    return warp_to_grid(raster, transform, height, width, method)


def reproject(
    raster: Raster,
    target_crs: Crs,
    target_res: float,
    method: ResampleMethod | str,
) -> Raster:
    """Reprojektion per Inverse-Mapping; nicht abgedeckte Zielpixel werden Nodata."""
    method = ResampleMethod(method)
    if target_crs == raster.crs:
        return resample(raster, target_res, method)
    if target_res <= 0:
        raise DataError(f"Zielauflösung muss > 0 sein: {target_res}")

    xs, ys = _boundary_points(raster)
    tx, ty = transform_points(xs, ys, raster.crs, target_crs)
    left = np.floor(tx.min() / target_res) * target_res
    right = np.ceil(tx.max() / target_res) * target_res
    bottom = np.floor(ty.min() / target_res) * target_res
    top = np.ceil(ty.max() / target_res) * target_res
    width = max(1, int(round((right - left) / target_res)))
    height = max(1, int(round((top - bottom) / target_res)))
    transform = GeoTransform(left, top, target_res, -target_res)

    result = warp_to_grid(raster, transform, height, width, method, crs=target_crs)
    if result.nodata is not None and result.nodata_mask().all():
        raise DataError(
            f"Keine Überlappung: Quelle {raster.crs} {raster.bounds}, Ziel {target_crs} "
            f"{(left, bottom, right, top)}",
        )
    return result


def align_and_crop(rasters: list[Raster]) -> list[Raster]:
    """
    Bringt alle Raster auf ein gemeinsames Gitter: Schnittmenge der Ausdehnungen,
    feinste Auflösung. Labelraster werden nearest, alle anderen bikubisch abgetastet.
    """
    if not rasters:
        raise DataError("align_and_crop benötigt mindestens ein Raster")
    if len(rasters) == 1:
        return list(rasters)
    crs = rasters[0].crs
    for raster in rasters:
        _require_north_up(raster.transform)
        if raster.crs != crs:
            raise DataError(f"Raster haben verschiedene CRS: {crs} vs {raster.crs}; zuerst reprojizieren")

    extents = np.array([r.bounds for r in rasters])
    left, bottom = extents[:, 0].max(), extents[:, 1].max()
    right, top = extents[:, 2].min(), extents[:, 3].min()
    if right <= left or top <= bottom:
        raise DataError(f"Leere Schnittmenge der Rasterausdehnungen: {extents.tolist()}")
    res = min(r.transform.resolution for r in rasters)
    width = max(1, int(np.floor((right - left) / res + 1e-9)))
    height = max(1, int(np.floor((top - bottom) / res + 1e-9)))
    shared = GeoTransform(float(left), float(top), float(res), float(-res))

    aligned = []
    for raster in rasters:
        if raster.transform == shared and (raster.height, raster.width) == (height, width):
            aligned.append(Raster(raster.data, shared, crs, raster.nodata))
            continue
        method = ResampleMethod.NEAREST if raster.dtype.kind in "ui" else ResampleMethod.BICUBIC
        aligned.append(warp_to_grid(raster, shared, height, width, method))
    return aligned


def resample_like(raster: Raster, reference: Raster, method: ResampleMethod | str) -> Raster:
    """Tastet `raster` auf das Gitter von `reference` ab."""
    method = ResampleMethod(method)
    if raster.transform == reference.transform and raster.data.shape[1:] == reference.data.shape[1:]:
        return raster
    return warp_to_grid(raster, reference.transform, reference.height, reference.width, method, reference.crs)


def _boundary_points(raster: Raster) -> tuple[np.ndarray, np.ndarray]:
    t = np.linspace(0.0, 1.0, _EDGE_SAMPLES)
    cols = np.concatenate([t * raster.width, np.full_like(t, raster.width), t * raster.width, np.zeros_like(t)])
    rows = np.concatenate([np.zeros_like(t), t * raster.height, np.full_like(t, raster.height), t * raster.height])
    return raster.transform.pixel_to_world(cols, rows)


def _require_north_up(transform: GeoTransform) -> None:
    if not transform.is_north_up:
        raise DataError("Rotierte/gescherte GeoTransforms werden nicht unterstützt")
