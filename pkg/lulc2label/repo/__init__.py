from pathlib import Path
from typing import Protocol, runtime_checkable

from ..errors import DataError
from ..models import Raster, Window
from .geotiff_repo import GeoTiffRasterRepository, read_geotiff, write_geotiff
from .manifest_repo import ManifestJSONRepository
from .mask_repo import MaskJSONRepository, load_masks, save_masks
from .sidecar_repo import SidecarRasterRepository, is_sidecar, read_sidecar, write_sidecar


@runtime_checkable
class RasterRepository(Protocol):
    """Protokoll für das Speichern und Laden von Rastern."""

    def save(self, raster: Raster, file_path: Path) -> None:
        """
        Speichert ein Raster in eine Datei.

        Args:
            raster: Zu speicherndes Raster
            file_path: Zielpfad für die Datei
        """
        ...

    def load(self, file_path: Path, window: Window | None = None) -> Raster:
        """
        Lädt ein Raster aus einer Datei.

        Args:
            file_path: Pfad zur zu ladenden Datei
            window: Optionaler Pixelausschnitt

        Returns:
            Geladenes Raster
        """
        ...


def repository_for(path: Path, require_georef: bool = True) -> RasterRepository:
    """Wählt das Repository anhand der Dateiendung bzw. eines vorhandenen Headers."""
    if is_sidecar(path):
        return SidecarRasterRepository()
    return GeoTiffRasterRepository(require_georef=require_georef)


def read_raster(path: Path, window: Window | None = None, require_georef: bool = True) -> Raster:
    return repository_for(Path(path), require_georef).load(Path(path), window)


def read_logits(path: Path, num_classes: int | None = None) -> Raster:
    """
    Liest ein Logit-Raster (ein Float-Band je Klasse) ohne jede Normalisierung.

    Akzeptiert GeoTIFF und das Sidecar-Format.
    """
    raster = read_raster(path)
    if raster.dtype.kind != "f":
        raise DataError(f"{path}: Logits müssen Gleitkommawerte sein, erhalten {raster.dtype}")
    if num_classes is not None and raster.bands != num_classes:
        raise DataError(f"{path}: {raster.bands} Logit-Bänder, konfiguriert sind {num_classes} Klassen")
    return raster


__all__ = [
    "GeoTiffRasterRepository",
    "ManifestJSONRepository",
    "MaskJSONRepository",
    "RasterRepository",
    "SidecarRasterRepository",
    "load_masks",
    "read_geotiff",
    "read_logits",
    "read_raster",
    "read_sidecar",
    "repository_for",
    "save_masks",
    "write_geotiff",
    "write_sidecar",
]
