from collections.abc import Sequence
from dataclasses import dataclass, field
from datetime import datetime
from enum import StrEnum

import numpy as np

from .config import (
    DEFAULT_CRF_ITERATIONS,
    EPSG_UTM_NORTH_BASE,
    EPSG_UTM_SOUTH_BASE,
    EPSG_WGS84,
    SUPPORTED_DTYPES,
)
from .errors import DataError, RleFormatError


class CrsKind(StrEnum):
    GEOGRAPHIC = "wgs84"
    UTM = "utm"
    PIXEL = "pixel"


@dataclass(frozen=True)
class Crs:
    """Koordinatenreferenzsystem: WGS84 geographisch, UTM-Zone oder Bildpixel."""

    kind: CrsKind
    zone: int | None = None
    hemisphere: str = "N"

    def __post_init__(self):
        if self.kind == CrsKind.UTM:
            if self.zone is None or not 1 <= self.zone <= 60:
                raise DataError(f"UTM-Zone muss in [1, 60] liegen, erhalten: {self.zone}")
            if self.hemisphere not in ("N", "S"):
                raise DataError(f"Hemisphäre muss 'N' oder 'S' sein, erhalten: {self.hemisphere}")

    @classmethod
    def wgs84(cls) -> "Crs":
        return cls(CrsKind.GEOGRAPHIC)

    @classmethod
    def utm(cls, zone: int, hemisphere: str = "N") -> "Crs":
        return cls(CrsKind.UTM, zone=zone, hemisphere=hemisphere)

    @classmethod
    def pixel(cls) -> "Crs":
        return cls(CrsKind.PIXEL)

    @classmethod
    def from_epsg(cls, code: int) -> "Crs":
        if code == EPSG_WGS84:
            return cls.wgs84()
        if EPSG_UTM_NORTH_BASE < code <= EPSG_UTM_NORTH_BASE + 60:
            return cls.utm(code - EPSG_UTM_NORTH_BASE, "N")
        if EPSG_UTM_SOUTH_BASE < code <= EPSG_UTM_SOUTH_BASE + 60:
            return cls.utm(code - EPSG_UTM_SOUTH_BASE, "S")
        raise DataError(f"Nicht unterstützter EPSG-Code: {code} (nur 4326 und WGS84/UTM)")

    @property
    def epsg(self) -> int | None:
        if self.kind == CrsKind.GEOGRAPHIC:
            return EPSG_WGS84
        if self.kind == CrsKind.UTM:
            base = EPSG_UTM_NORTH_BASE if self.hemisphere == "N" else EPSG_UTM_SOUTH_BASE
            return base + self.zone
        return None

    @property
    def is_geographic(self) -> bool:
        return self.kind == CrsKind.GEOGRAPHIC

    def __str__(self) -> str:
        if self.kind == CrsKind.UTM:
            return f"UTM {self.zone}{self.hemisphere} (EPSG:{self.epsg})"
        if self.kind == CrsKind.GEOGRAPHIC:
            return "WGS84 (EPSG:4326)"
        return "Pixel"


@dataclass(frozen=True)
class GeoTransform:
    """
    Affine Abbildung Pixel (col, row) -> Welt (x, y).

    x = origin_x + col * pixel_width + row * row_rotation
    y = origin_y + col * col_rotation + row * pixel_height

    (col, row) bezeichnet Pixelecken; Pixelzentren liegen bei +0.5.
    """

    origin_x: float
    origin_y: float
    pixel_width: float
    pixel_height: float
    row_rotation: float = 0.0
    col_rotation: float = 0.0

    def __post_init__(self):
        if self.pixel_width == 0 or self.pixel_height == 0:
            raise DataError(f"Pixelgröße darf nicht 0 sein: {self.pixel_width}, {self.pixel_height}")
        if self.determinant == 0:
            raise DataError("GeoTransform ist nicht invertierbar (Determinante 0)")

    @classmethod
    def identity(cls) -> "GeoTransform":
        return cls(0.0, 0.0, 1.0, 1.0)

    @classmethod
    def from_gdal(cls, gt: Sequence[float]) -> "GeoTransform":
        return cls(gt[0], gt[3], gt[1], gt[5], gt[2], gt[4])

    def to_gdal(self) -> tuple[float, float, float, float, float, float]:
        return (
            self.origin_x,
            self.pixel_width,
            self.row_rotation,
            self.origin_y,
            self.col_rotation,
            self.pixel_height,
        )

    @property
    def determinant(self) -> float:
        return self.pixel_width * self.pixel_height - self.row_rotation * self.col_rotation

    @property
    def is_north_up(self) -> bool:
        return self.row_rotation == 0 and self.col_rotation == 0

    @property
    def resolution(self) -> float:
        """Betrag der Pixelbreite (quadratische Pixel angenommen)."""
        return abs(self.pixel_width)

    def pixel_to_world(self, col, row):
        col = np.asarray(col, dtype=np.float64)
        row = np.asarray(row, dtype=np.float64)
        x = self.origin_x + col * self.pixel_width + row * self.row_rotation
        y = self.origin_y + col * self.col_rotation + row * self.pixel_height
        return x, y

    def world_to_pixel(self, x, y):
        dx = np.asarray(x, dtype=np.float64) - self.origin_x
        dy = np.asarray(y, dtype=np.float64) - self.origin_y
        det = self.determinant
        col = (self.pixel_height * dx - self.row_rotation * dy) / det
        row = (-self.col_rotation * dx + self.pixel_width * dy) / det
        return col, row

    def bounds(self, height: int, width: int) -> tuple[float, float, float, float]:
        """(left, bottom, right, top) für ein nordausgerichtetes Raster."""
        x0, y0 = self.origin_x, self.origin_y
        x1 = x0 + width * self.pixel_width
        y1 = y0 + height * self.pixel_height
        return min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1)


@dataclass(frozen=True, eq=False)
class Raster:
    """
    Georeferenziertes Gitter (bands, height, width).

    Die Daten werden bei der Konstruktion schreibgeschützt, damit ein Raster
    gefahrlos zwischen Workern geteilt werden kann.
    """

    data: np.ndarray
    transform: GeoTransform
    crs: Crs
    nodata: float | int | None = None

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[np.newaxis]
        if data.ndim != 3:
            raise DataError(f"Rasterdaten müssen 2D oder 3D sein, erhalten: {data.ndim}D")
        if data.flags.writeable:
            data = np.ascontiguousarray(data).copy()
            data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_label(self) -> bool:
        """Einbandige Raster mit vorzeichenlosem Ganzzahltyp gelten als Labelraster."""
        return self.bands == 1 and np.issubdtype(self.dtype, np.unsignedinteger)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return self.transform.bounds(self.height, self.width)

    def band(self, index: int = 0) -> np.ndarray:
        return self.data[index]

    def nodata_mask(self) -> np.ndarray:
        """True für Pixel, bei denen mindestens ein Band Nodata ist."""
        if self.nodata is None:
            return np.zeros((self.height, self.width), dtype=bool)
        if isinstance(self.nodata, float) and np.isnan(self.nodata):
            return np.isnan(self.data).any(axis=0)
        return (self.data == self.nodata).any(axis=0)

    def with_data(self, data: np.ndarray, nodata: float | int | None = ...) -> "Raster":
        """Neues Raster mit gleicher Georeferenz."""
        return Raster(
            data=data,
            transform=self.transform,
            crs=self.crs,
            nodata=self.nodata if nodata is ... else nodata,
        )

    def validate(self, num_classes: int | None = None) -> "Raster":
        """Prüft die Raster-Invarianten; gibt sich selbst zurück."""
        validate_raster(self, num_classes)
        return self


def validate_raster(raster: Raster, num_classes: int | None = None) -> None:
    """Gemeinsamer Validator für alle Raster-Operationen."""
    if raster.bands < 1 or raster.height < 1 or raster.width < 1:
        raise DataError(f"Leeres Raster: {raster.data.shape}")
    if raster.dtype.name not in SUPPORTED_DTYPES and raster.dtype.kind != "f":
        raise DataError(f"Nicht unterstützter Datentyp: {raster.dtype}")
    if raster.dtype.kind == "f":
        nan_allowed = isinstance(raster.nodata, float) and np.isnan(raster.nodata)
        if np.isinf(raster.data).any():
            raise DataError("Raster enthält unendliche Werte")
        if not nan_allowed and np.isnan(raster.data).any():
            raise DataError("Raster enthält NaN, aber kein NaN-Nodata")
    if num_classes is not None:
        if raster.bands != 1:
            raise DataError(f"Labelraster muss einbandig sein, erhalten: {raster.bands} Bänder")
        values = raster.data[~raster.nodata_mask()[np.newaxis]]
        if values.size and (values.min() < 0 or values.max() >= num_classes):
            raise DataError(
                f"Labelwerte außerhalb [0, {num_classes}): min={values.min()}, max={values.max()}",
            )


@dataclass(frozen=True)
class CrfParams:
    """Parameter des zweikernigen Pairwise-Potentials."""

    w1: float
    w2: float
    theta_alpha: float
    theta_gamma: float
    theta_beta: tuple[float, ...]
    num_iterations: int = DEFAULT_CRF_ITERATIONS

    def __post_init__(self):
        object.__setattr__(self, "theta_beta", tuple(float(t) for t in self.theta_beta))
        if self.w1 < 0 or self.w2 < 0:
            raise DataError(f"Gewichte müssen >= 0 sein: w1={self.w1}, w2={self.w2}")
        bandwidths = (self.theta_alpha, self.theta_gamma, *self.theta_beta)
        if any(b <= 0 for b in bandwidths):
            raise DataError(f"Bandbreiten müssen > 0 sein: {bandwidths}")
        if self.num_iterations < 1:
            raise DataError(f"num_iterations muss >= 1 sein: {self.num_iterations}")

    def check_bands(self, bands: int) -> None:
        if len(self.theta_beta) != bands:
            raise DataError(
                f"theta_beta hat {len(self.theta_beta)} Einträge, Konditionierungsbild {bands} Bänder",
            )


@dataclass(frozen=True, eq=False)
class CompatibilityMatrix:
    mu: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        if mu.ndim != 2 or mu.shape[0] != mu.shape[1]:
            raise DataError(f"Kompatibilitätsmatrix muss quadratisch sein: {mu.shape}")
        if not np.allclose(mu, mu.T):
            raise DataError("Kompatibilitätsmatrix muss symmetrisch sein")
        object.__setattr__(self, "mu", mu)

    @classmethod
    def potts(cls, num_classes: int) -> "CompatibilityMatrix":
        return cls(1.0 - np.eye(num_classes))

    @property
    def num_classes(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True, eq=False)
class MarginalField:
    """Pro-Pixel-Kategorialverteilung Q mit Form (H, W, L)."""

    q: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.q.shape[-1]

    def argmax(self) -> np.ndarray:
        return np.argmax(self.q, axis=-1)

    def is_normalized(self, tol: float = 1e-6) -> bool:
        sums = self.q.sum(axis=-1)
        return bool(np.all(np.abs(sums - 1.0) <= tol) and np.all(self.q >= 0))


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    k1: float = 0.0
    k2: float = 0.0

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise DataError(f"Brennweiten müssen > 0 sein: fx={self.fx}, fy={self.fy}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise DataError(f"Hauptpunkt ({self.cx}, {self.cy}) liegt außerhalb des Bildes")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @property
    def has_distortion(self) -> bool:
        return self.k1 != 0.0 or self.k2 != 0.0


IDENTITY_QUATERNION = (1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class BodyToCamera:
    """Montage der Kamera im Fahrzeug: Rotation Kamera->Körper (wxyz) und Hebelarm im Körperframe."""

    rotation: tuple[float, float, float, float] = IDENTITY_QUATERNION
    lever_arm: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class CameraPose:
    """
    Weltpose einer Aufnahme.

    position: UTM easting, northing, Höhe (m)
    attitude: Einheitsquaternion (w, x, y, z), Rotation Körper -> Welt (ENU)
    """

    position: tuple[float, float, float]
    attitude: tuple[float, float, float, float]
    timestamp: float = 0.0
    body_to_camera: BodyToCamera = field(default_factory=BodyToCamera)

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(p) for p in self.position))
        object.__setattr__(self, "attitude", tuple(float(q) for q in self.attitude))
        if not all(np.isfinite(self.position)):
            raise DataError(f"Position muss endlich sein: {self.position}")
        norm = float(np.linalg.norm(self.attitude))
        if abs(norm - 1.0) > 1e-9:
            raise DataError(f"Quaternion ist nicht normiert (|q| = {norm:.12f})")


@dataclass(frozen=True, eq=False)
class SemanticScene:
    """
    3D-Vertexfeld mit Klassenlabels.

    vertices: (N, 3) easting, northing, Höhe
    labels:   (N,) Klassen-IDs
    valid:    (N,) False für Vertices ohne DEM-Wert
    grid_shape: (rows, cols) für Gitter-Triangulierung, oder None bei expliziten Dreiecken
    """

    vertices: np.ndarray
    labels: np.ndarray
    grid_shape: tuple[int, int] | None = None
    valid: np.ndarray | None = None
    explicit_triangles: np.ndarray | None = None

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        labels = np.asarray(self.labels).reshape(-1)
        if labels.shape[0] != vertices.shape[0]:
            raise DataError(f"{vertices.shape[0]} Vertices, aber {labels.shape[0]} Labels")
        if self.grid_shape is not None and self.grid_shape[0] * self.grid_shape[1] != vertices.shape[0]:
            raise DataError(f"Vertexanzahl {vertices.shape[0]} passt nicht zu Gitter {self.grid_shape}")
        valid = np.ones(len(vertices), dtype=bool) if self.valid is None else np.asarray(self.valid, bool)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "valid", valid)

    @classmethod
    def from_triangles(cls, vertices, labels, triangles) -> "SemanticScene":
        return cls(vertices, labels, None, None, np.asarray(triangles, dtype=np.int64).reshape(-1, 3))

    @property
    def vertex_count(self) -> int:
        return self.vertices.shape[0]

    @property
    def triangles(self) -> np.ndarray:
        """(T, 3) Vertexindizes; erster Vertex ist der provozierende Vertex."""
        if self.explicit_triangles is not None:
            tris = self.explicit_triangles
        elif self.grid_shape is None:
            return np.empty((0, 3), dtype=np.int64)
        else:
            rows, cols = self.grid_shape
            r, c = np.meshgrid(np.arange(rows - 1), np.arange(cols - 1), indexing="ij")
            a = (r * cols + c).ravel()
            b = a + 1
            d = a + cols
            e = d + 1
            tris = np.empty((2 * a.size, 3), dtype=np.int64)
            tris[0::2] = np.stack([a, b, d], axis=1)
            tris[1::2] = np.stack([b, e, d], axis=1)
        keep = self.valid[tris].all(axis=1)
        return tris[keep]


@dataclass(frozen=True)
class RleMask:
    """
    Binärmaske im unkomprimierten COCO-RLE: spaltenweise (Fortran-Reihenfolge),
    beginnend mit einem Lauf von Nullen.
    """

    height: int
    width: int
    counts: tuple[int, ...]
    score: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if any(c < 0 for c in self.counts):
            raise RleFormatError("RLE-Läufe dürfen nicht negativ sein")
        total = sum(self.counts)
        if total != self.height * self.width:
            raise RleFormatError(
                f"RLE-Läufe summieren sich zu {total}, erwartet {self.height}x{self.width}="
                f"{self.height * self.width}",
            )

    @property
    def area(self) -> int:
        return sum(self.counts[1::2])

    @classmethod
    def encode(cls, mask: np.ndarray, score: float | None = None) -> "RleMask":
        mask = np.asarray(mask, dtype=bool)
        flat = mask.ravel(order="F").astype(np.int8)
        changes = np.flatnonzero(np.diff(flat)) + 1
        bounds = np.concatenate([[0], changes, [flat.size]])
        counts = np.diff(bounds).tolist()
        if flat.size and flat[0] == 1:
            counts = [0, *counts]
        return cls(mask.shape[0], mask.shape[1], tuple(counts), score)

    def decode(self) -> np.ndarray:
        values = np.zeros(len(self.counts), dtype=bool)
        values[1::2] = True
        flat = np.repeat(values, self.counts)
        return flat.reshape((self.height, self.width), order="F")


@dataclass(frozen=True)
class MaskSet:
    """Geordnete Menge binärer Bildmasken."""

    masks: tuple[RleMask, ...]
    height: int
    width: int
    overlapping: bool = True
    source: str = "unknown"

    def __post_init__(self):
        object.__setattr__(self, "masks", tuple(self.masks))
        for index, mask in enumerate(self.masks):
            if (mask.height, mask.width) != (self.height, self.width):
                raise RleFormatError(
                    f"Maske {index} hat Größe {mask.height}x{mask.width}, erwartet {self.height}x{self.width}",
                )
            if mask.area == 0:
                raise RleFormatError(f"Maske {index} ist leer")

    def __len__(self) -> int:
        return len(self.masks)

    @classmethod
    def from_label_image(cls, segments: np.ndarray, source: str = "segments") -> "MaskSet":
        """Eine Maske je Segment-ID; das Ergebnis partitioniert das Bild."""
        segments = np.asarray(segments)
        masks = [RleMask.encode(segments == seg_id) for seg_id in np.unique(segments)]
        return cls(tuple(masks), segments.shape[0], segments.shape[1], overlapping=False, source=source)

    @classmethod
    def from_dense(cls, masks: Sequence[np.ndarray], source: str = "dense") -> "MaskSet":
        if not masks:
            raise RleFormatError("Aus einer leeren Liste kann keine Größe abgeleitet werden")
        height, width = np.asarray(masks[0]).shape
        return cls(tuple(RleMask.encode(m) for m in masks), height, width, source=source)

    def areas(self) -> np.ndarray:
        return np.array([m.area for m in self.masks], dtype=np.int64)


@dataclass(frozen=True)
class ClassMap:
    """Abbildung Quellklassen -> Zielklassen (surjektiv) plus ignorierte IDs."""

    name: str
    mapping: dict[int, int]
    ignore: frozenset[int] = frozenset()
    target_names: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "mapping", {int(k): int(v) for k, v in self.mapping.items()})
        object.__setattr__(self, "ignore", frozenset(int(i) for i in self.ignore))
        targets = sorted(set(self.mapping.values()))
        if targets != list(range(len(targets))):
            raise DataError(f"Klassenabbildung '{self.name}': Ziel-IDs nicht lückenlos ab 0: {targets}")
        if self.target_names and len(self.target_names) != len(targets):
            raise DataError(
                f"Klassenabbildung '{self.name}': {len(self.target_names)} Namen für {len(targets)} Ziele",
            )
        overlap = self.ignore & set(self.mapping)
        if overlap:
            raise DataError(f"Klassenabbildung '{self.name}': IDs sowohl abgebildet als auch ignoriert: {overlap}")

    @classmethod
    def identity(cls, num_classes: int, name: str = "identity", names: Sequence[str] = ()) -> "ClassMap":
        return cls(name, {i: i for i in range(num_classes)}, frozenset(), tuple(names))

    @property
    def num_targets(self) -> int:
        return len(set(self.mapping.values()))


@dataclass
class ConfusionMatrix:
    """
    L x L Zählmatrix, Zeilen = Ground Truth, Spalten = Vorhersage.

    ``unlabeled`` zählt je Ground-Truth-Klasse die Pixel ohne Vorhersage
    (IGNORE_LABEL). Sie erhöhen Zeilensumme und Vereinigung, nie die Treffer.
    """

    counts: np.ndarray
    unlabeled: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise DataError(f"Konfusionsmatrix muss quadratisch sein: {self.counts.shape}")
        if np.size(self.unlabeled) == 0:
            self.unlabeled = np.zeros(self.counts.shape[0], dtype=np.int64)
        self.unlabeled = np.asarray(self.unlabeled, dtype=np.int64)
        if self.unlabeled.shape != (self.counts.shape[0],):
            raise DataError(f"Unlabeled-Zähler passt nicht zur Matrix: {self.unlabeled.shape}")
        if (self.counts < 0).any() or (self.unlabeled < 0).any():
            raise DataError("Konfusionsmatrix enthält negative Einträge")

    @classmethod
    def zeros(cls, num_classes: int) -> "ConfusionMatrix":
        return cls(np.zeros((num_classes, num_classes), dtype=np.int64))

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum() + self.unlabeled.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.num_classes != self.num_classes:
            raise DataError(f"Klassenanzahl verschieden: {self.num_classes} vs {other.num_classes}")
        return ConfusionMatrix(self.counts + other.counts, self.unlabeled + other.unlabeled)


@dataclass(frozen=True)
class Window:
    """Pixelausschnitt eines Rasters (Zeilen-/Spaltenversatz und Größe)."""

    row_off: int
    col_off: int
    height: int
    width: int

    def __post_init__(self):
        if self.row_off < 0 or self.col_off < 0 or self.height < 1 or self.width < 1:
            raise DataError(f"Ungültiges Fenster: {self}")

    def check_within(self, height: int, width: int) -> None:
        if self.row_off + self.height > height or self.col_off + self.width > width:
            raise DataError(f"Fenster {self} liegt nicht innerhalb des Rasters {height}x{width}")

    def shift(self, transform: GeoTransform) -> GeoTransform:
        """GeoTransform des Ausschnitts."""
        x, y = transform.pixel_to_world(self.col_off, self.row_off)
        return GeoTransform(
            float(x),
            float(y),
            transform.pixel_width,
            transform.pixel_height,
            transform.row_rotation,
            transform.col_rotation,
        )


@dataclass
class StageManifest:
    """
    Provenienz einer Pipelinestufe.

    `key` hängt nur von Eingabe-Hashes, Parametern und Versionen ab; der
    Zeitstempel `created` steht ausschließlich hier und nie in den Ausgaben.
    """

    stage: str
    key: str
    inputs: dict[str, str]
    params: dict
    versions: dict[str, str]
    outputs: list[str] = field(default_factory=list)
    created: datetime | None = None
