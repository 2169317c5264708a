"""
LULC-to-Label Package

Dieses Package erzeugt semantische Segmentierungslabels für Luftbilder
aus Satelliten-LULC-Karten, einem Höhenmodell und der Kamerapose.
"""

from .analyzer import MetricsAnalyzer
from .config import LABEL_DTYPE, SYNTH_CLASSES, UNKNOWN_LABEL
from .errors import ConfigError, DataError, Lulc2LabelError, NumericalError
from .factory import PipelineConfig, PipelineConfigFactory, load_config
from .models import (
    CameraIntrinsics,
    CameraPose,
    ClassMap,
    ConfusionMatrix,
    CrfParams,
    Crs,
    GeoTransform,
    MaskSet,
    Raster,
    RleMask,
    StageManifest,
)
from .repo import RasterRepository, read_raster, write_geotiff
from .service import LabelPipelineService, StageResult

__all__ = [
    "LABEL_DTYPE",
    "SYNTH_CLASSES",
    "UNKNOWN_LABEL",
    "CameraIntrinsics",
    "CameraPose",
    "ClassMap",
    "ConfigError",
    "ConfusionMatrix",
    "CrfParams",
    "Crs",
    "DataError",
    "GeoTransform",
    "LabelPipelineService",
    "Lulc2LabelError",
    "MaskSet",
    "MetricsAnalyzer",
    "NumericalError",
    "PipelineConfig",
    "PipelineConfigFactory",
    "Raster",
    "RasterRepository",
    "RleMask",
    "StageManifest",
    "StageResult",
    "load_config",
    "read_raster",
    "write_geotiff",
]

__version__ = "0.1.0"
