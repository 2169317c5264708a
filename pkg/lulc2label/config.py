"""
Konstanten für Klassenvokabulare, Dateiformate und Standardparameter.

Diese Datei enthält alle festen Werte, auf die sich die Pipeline-Stufen
beziehen: Sentinel-Werte für Labels, Ellipsoid- und UTM-Parameter, die
unterstützten TIFF-Tags sowie die Standardwerte der Such- und CRF-Parameter.
"""

import numpy as np

# Exit-Codes der CLI
EXIT_CONFIG_ERROR = 2
EXIT_DATA_ERROR = 3
EXIT_NUMERICAL_ERROR = 4

# Label-Sentinels (alle teilen sich denselben Wert, damit uint8 reicht)
UNKNOWN_LABEL = 255  # vom Renderer nicht abgedeckt
UNLABELED = 255  # von keiner Maske abgedeckt (Fallback "unlabeled")
IGNORE_LABEL = 255  # in der Ground Truth übersprungen, in der Vorhersage ein Fehler
LABEL_DTYPE = np.uint8

# WGS84-Ellipsoid und UTM
WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
UTM_K0 = 0.9996
UTM_FALSE_EASTING = 500_000.0
UTM_FALSE_NORTHING_SOUTH = 10_000_000.0
UTM_MIN_LAT = -80.0
UTM_MAX_LAT = 84.0

# EPSG-Codes
EPSG_WGS84 = 4326
EPSG_UTM_NORTH_BASE = 32600
EPSG_UTM_SOUTH_BASE = 32700

# Standard-Nodata je Datentyp, wenn ein Raster keinen eigenen Wert mitbringt
DEFAULT_NODATA = {
    "uint8": 255,
    "uint16": 65535,
    "int16": -32768,
    "float32": -9999.0,
}
SUPPORTED_DTYPES = {"uint8", "uint16", "int16", "float32"}

# TIFF 6.0 Feldtypen: id -> (numpy-Format, Byte-Größe)
TIFF_FIELD_TYPES = {
    1: ("B", 1),  # BYTE
    2: ("c", 1),  # ASCII
    3: ("H", 2),  # SHORT
    4: ("I", 4),  # LONG
    5: ("II", 8),  # RATIONAL
    12: ("d", 8),  # DOUBLE
}

# TIFF-Tags
TAG_IMAGE_WIDTH = 256
TAG_IMAGE_LENGTH = 257
TAG_BITS_PER_SAMPLE = 258
TAG_COMPRESSION = 259
TAG_PHOTOMETRIC = 262
TAG_STRIP_OFFSETS = 273
TAG_SAMPLES_PER_PIXEL = 277
TAG_ROWS_PER_STRIP = 278
TAG_STRIP_BYTE_COUNTS = 279
TAG_PLANAR_CONFIG = 284
TAG_PREDICTOR = 317
TAG_TILE_WIDTH = 322
TAG_TILE_LENGTH = 323
TAG_TILE_OFFSETS = 324
TAG_TILE_BYTE_COUNTS = 325
TAG_SAMPLE_FORMAT = 339
TAG_MODEL_PIXEL_SCALE = 33550
TAG_MODEL_TIEPOINT = 33922
TAG_GEO_KEY_DIRECTORY = 34735
TAG_GDAL_NODATA = 42113

COMPRESSION_NONE = 1
COMPRESSION_DEFLATE = {8, 32946}

# GeoKeys
GEOKEY_MODEL_TYPE = 1024
GEOKEY_RASTER_TYPE = 1025
GEOKEY_GEOGRAPHIC_TYPE = 2048
GEOKEY_PROJECTED_CS_TYPE = 3072
MODEL_TYPE_PROJECTED = 1
MODEL_TYPE_GEOGRAPHIC = 2
RASTER_PIXEL_IS_AREA = 1
RASTER_PIXEL_IS_POINT = 2

# Sidecar-Format
SIDECAR_HEADER_SUFFIX = ".hdr"
SIDECAR_DATA_SUFFIX = ".bin"

# Dense CRF
DEFAULT_CRF_ITERATIONS = 5
BRUTEFORCE_MAX_PIXELS = 64 * 64
LATTICE_MAX_FEATURES = 16
LATTICE_CALIBRATION_SAMPLES = 256

# Such-Standardgrenzen (log/linear), umschließen alle bekannten getunten Werte
DEFAULT_SEARCH_BOUNDS = {
    "w1": (0.01, 100.0, "log"),
    "w2": (0.01, 100.0, "log"),
    "theta_alpha": (1.0, 200.0, "linear"),
    "theta_gamma": (1.0, 200.0, "linear"),
    "theta_beta": (0.1, 130.0, "log"),
}
TPE_GAMMA = 0.25
TPE_CANDIDATES = 24
TPE_STARTUP_TRIALS = 10

# Rendering
DEFAULT_NEAR_PLANE = 0.1
DEFAULT_D_MIN = 1.0

# Thermal-Vorverarbeitung
THERMAL_PERCENTILES = (2.0, 98.0)
CLAHE_CLIP_LIMIT = 0.02
CLAHE_TILES = 8
THERMAL_CONSTANT_VALUE = 128

# Klassenvokabulare
SYNTH_CLASSES = ("water", "trees", "low_vegetation", "ground")
CM6_CLASSES = ("water", "trees", "low_vegetation", "built", "ground", "sky")
# CM-5 und CM-3 sind Platzhalter; per Konfiguration überschreibbar
CM5_CLASSES = ("water", "vegetation", "built", "ground", "sky")
CM3_CLASSES = ("water", "land", "sky")

# Farbtabelle für PNG-Vorschauen (RGB 0..1), Index = Klassen-ID
LABEL_COLORS = (
    (0.12, 0.47, 0.71),
    (0.17, 0.50, 0.17),
    (0.60, 0.80, 0.30),
    (0.55, 0.27, 0.07),
    (0.85, 0.75, 0.55),
    (0.68, 0.85, 0.95),
    (0.80, 0.20, 0.20),
    (0.50, 0.50, 0.50),
)
UNKNOWN_COLOR = (0.0, 0.0, 0.0)
