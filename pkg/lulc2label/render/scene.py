import logging
from dataclasses import dataclass

import numpy as np

from ..config import DEFAULT_D_MIN, DEFAULT_NEAR_PLANE, UNKNOWN_LABEL
from ..errors import DataError
from ..geo.warp import ResampleMethod, sample_band
from ..models import CameraPose, Raster, SemanticScene
from .camera import horizontal_heading

logger = logging.getLogger(__name__)


def geometric_schedule(rows: int, d_min: float, d_max: float) -> np.ndarray:
    """Abstände d_k = d_min * (d_max / d_min) ** (k / (rows - 1)), k = 0..rows-1."""
    if rows < 2:
        raise DataError(f"Mindestens 2 Zeilen erforderlich: {rows}")
    if not 0 < d_min < d_max:
        raise DataError(f"Es muss 0 < d_min < d_max gelten: d_min={d_min}, d_max={d_max}")
    exponent = np.arange(rows) / (rows - 1)
    distances = d_min * (d_max / d_min) ** exponent
    distances[0], distances[-1] = d_min, d_max
    return distances


def sample_at(
    raster: Raster,
    x: np.ndarray,
    y: np.ndarray,
    method: ResampleMethod,
    band: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Werte eines Bandes an Weltkoordinaten (x, y) und deren Gültigkeit."""
    col, row = raster.transform.world_to_pixel(x, y)
    invalid = raster.nodata_mask() if raster.nodata is not None else None
    return sample_band(raster.band(band), row - 0.5, col - 0.5, method, invalid)


def sample_scene(
    lulc: Raster,
    dem: Raster,
    pose: CameraPose,
    extent: tuple[float, float],
    grid: tuple[int, int],
    d_min: float = DEFAULT_D_MIN,
    symmetric: bool = False,
) -> SemanticScene:
    """
    Baut ein Vertexgitter vor der Kamera.

    Zeilen liegen in geometrisch wachsendem Abstand entlang der horizontalen
    Blickrichtung (d_min .. extent[0]), Spalten gleichmäßig über die seitliche
    Ausdehnung extent[1]. Mit `symmetric` wird das Zeilenschema zusätzlich nach
    hinten gespiegelt (Nadirkameras); das Gitter hat dann 2 * rows Zeilen.
    Höhen werden bilinear aus dem DEM, Labels nächstnachbarlich aus dem LULC
    gelesen; Vertices ohne DEM- oder LULC-Wert sind ungültig.
    """
    forward_m, lateral_m = extent
    rows, cols = grid
    if forward_m <= 0 or lateral_m <= 0:
        raise DataError(f"Ausdehnung muss positiv sein: {extent}")
    if rows < 2 or cols < 2:
        raise DataError(f"Gitter muss mindestens 2x2 sein: {grid}")
    if lulc.crs != dem.crs or lulc.transform != dem.transform or lulc.data.shape[1:] != dem.data.shape[1:]:
        raise DataError("LULC und DEM sind nicht ausgerichtet; zuerst align_and_crop anwenden")

    heading = horizontal_heading(pose)
    right = np.array([heading[1], -heading[0], 0.0])
    distances = geometric_schedule(rows, d_min, forward_m)
    if symmetric:
        distances = np.concatenate([-distances[::-1], distances])
    offsets = np.linspace(-lateral_m / 2.0, lateral_m / 2.0, cols)

    dist_grid, off_grid = np.meshgrid(distances, offsets, indexing="ij")
    x = pose.position[0] + dist_grid * heading[0] + off_grid * right[0]
    y = pose.position[1] + dist_grid * heading[1] + off_grid * right[1]

    elevation, dem_valid = sample_at(dem, x.ravel(), y.ravel(), ResampleMethod.BILINEAR)
    labels, lulc_valid = sample_at(lulc, x.ravel(), y.ravel(), ResampleMethod.NEAREST)
    valid = dem_valid & lulc_valid & (labels != UNKNOWN_LABEL)
    if not valid.any():
        raise DataError(
            f"Kamerafußabdruck um ({pose.position[0]:.1f}, {pose.position[1]:.1f}) liegt vollständig "
            f"außerhalb des Rasters {lulc.bounds}",
        )

    vertices = np.column_stack([x.ravel(), y.ravel(), np.where(valid, elevation, 0.0)])
    labels = np.where(valid, labels, 0).astype(lulc.dtype)
    logger.debug(f"Szene: {vertices.shape[0]} Vertices, {int(valid.sum())} gültig")
    return SemanticScene(vertices, labels, grid_shape=(len(distances), cols), valid=valid)


@dataclass(frozen=True)
class RenderSettings:
    """Gitter- und Kameraparameter für das Rendern eines Bildes."""

    extent: tuple[float, float] = (70.0, 140.0)
    grid: tuple[int, int] = (128, 160)
    d_min: float = DEFAULT_D_MIN
    symmetric: bool = True
    near: float = DEFAULT_NEAR_PLANE
    sky_class: int | None = None
