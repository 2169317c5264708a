"""
Synthetische Welten als Ersatz für echte LULC-, DEM- und Thermaldaten.

Alle Raster einer Szene sind ko-registriert (gleiches UTM-Gitter in der
feinen Auflösung, grobe LULC in einem ganzzahligen Vielfachen davon) und
bitgenau aus (Konfiguration, Seed) reproduzierbar.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage
from skimage.transform import resize

from ..config import LABEL_DTYPE, SYNTH_CLASSES
from ..errors import DataError
from ..models import CameraIntrinsics, CameraPose, Crs, GeoTransform, Raster
from ..render.camera import look_attitude
from ..render.poses import PoseLog, write_pose_log
from ..repo import write_geotiff

logger = logging.getLogger(__name__)

# Mittlere Reflektanz (3 Bänder, 0..255) und Temperatur-Rohwert je synthetischer Klasse
CLASS_IMAGERY_MEANS = ((40.0, 60.0, 110.0), (35.0, 95.0, 40.0), (110.0, 160.0, 70.0), (170.0, 150.0, 120.0))
CLASS_THERMAL_MEANS = (27_500.0, 29_500.0, 31_000.0, 33_500.0)
_PRIOR_ITERATIONS = 60


@dataclass(frozen=True)
class SynthConfig:
    """Parameter einer synthetischen Szene."""

    size: int = 512
    fine_resolution: float = 1.0
    coarse_resolution: float = 10.0
    class_priors: tuple[float, ...] = (0.15, 0.30, 0.30, 0.25)
    class_scale: float = 12.0
    terrain_amplitude: float = 20.0
    terrain_octaves: int = 4
    terrain_base_cells: int = 4
    canopy_height: float = 15.0
    imagery_noise: float = 8.0
    illumination_amplitude: float = 0.1
    thermal_noise: float = 150.0
    thermal_blur: float = 1.0
    logit_smoothing: float = 0.05
    origin: tuple[float, float] = (500_000.0, 5_300_000.0)
    zone: int = 32

    def __post_init__(self):
        if self.size < 8:
            raise DataError(f"Szenengröße muss >= 8 sein: {self.size}")
        if self.fine_resolution <= 0:
            raise DataError(f"Feine Auflösung muss > 0 sein: {self.fine_resolution}")
        if len(self.class_priors) != len(SYNTH_CLASSES):
            raise DataError(f"{len(self.class_priors)} Prioren für {len(SYNTH_CLASSES)} Klassen")
        if min(self.class_priors) <= 0 or abs(sum(self.class_priors) - 1.0) > 1e-6:
            raise DataError(f"Prioren müssen positiv sein und sich zu 1 summieren: {self.class_priors}")
        self.pool_factor(self.coarse_resolution)

    @property
    def num_classes(self) -> int:
        return len(self.class_priors)

    @property
    def extent(self) -> float:
        return self.size * self.fine_resolution

    def pool_factor(self, resolution: float) -> int:
        """Ganzzahliges Verhältnis grobe/feine Auflösung."""
        factor = resolution / self.fine_resolution
        if factor < 1 or abs(factor - round(factor)) > 1e-9:
            raise DataError(
                f"Auflösung {resolution} m ist kein ganzzahliges Vielfaches von {self.fine_resolution} m",
            )
        return int(round(factor))


@dataclass(frozen=True, eq=False)
class SynthScene:
    config: SynthConfig
    seed: int
    dem: Raster
    dsm: Raster
    lulc_fine: Raster
    lulc_coarse: Raster
    coarse_logits: Raster
    imagery: Raster
    thermal: Raster

    @property
    def crs(self) -> Crs:
        return self.dem.crs

    def coarse_labels(self, resolution: float) -> Raster:
        """Grobe LULC in beliebiger (ganzzahlig teilender) Auflösung durch Mehrheitspooling."""
        return majority_pool(self.lulc_fine, self.config.pool_factor(resolution), self.config.num_classes)

    def coarse_logits_at(self, resolution: float) -> Raster:
        factor = self.config.pool_factor(resolution)
        return coarse_logits(self.lulc_fine, self.config.num_classes, factor, self.config.logit_smoothing)


@dataclass(frozen=True)
class Trajectory:
    """Posenlog einer Befliegung plus die Aufnahmezeitpunkte der Bilder."""

    name: str
    log: PoseLog
    frame_times: tuple[float, ...]
    intrinsics: CameraIntrinsics

    @property
    def frame_ids(self) -> list[str]:
        return [f"{self.name}_{i:04d}" for i in range(len(self.frame_times))]

    def true_poses(self) -> list[CameraPose]:
        return [self.log.at(t) for t in self.frame_times]


@dataclass(frozen=True)
class TrajectoryConfig:
    frames: int = 20
    altitude: tuple[float, float] = (60.0, 100.0)
    heading_deg: float = 90.0
    pitch_deg: float = 0.0
    track_fraction: float = 0.45
    frame_interval: float = 1.0
    log_rate: float = 10.0
    margin: float = 2.0
    intrinsics: CameraIntrinsics = field(
        default_factory=lambda: CameraIntrinsics(
            fx=320.0,
            fy=320.0,
            cx=160.0,
            cy=128.0,
            width=320,
            height=256,
        ),
    )


def value_noise(rng: np.random.Generator, size: int, base_cells: int, octaves: int) -> np.ndarray:
    """Summe bikubisch interpolierter Zufallsgitter, Amplitude halbiert je Oktave, auf [-1, 1] skaliert."""
    total = np.zeros((size, size))
    amplitude = 1.0
    for octave in range(octaves):
        cells = base_cells * 2**octave + 1
        grid = rng.uniform(-1.0, 1.0, (cells, cells))
        total += amplitude * resize(grid, (size, size), order=3, mode="edge", anti_aliasing=False)
        amplitude /= 2.0
    peak = np.abs(total).max()
    return total / peak if peak > 0 else total


def smooth_field(rng: np.random.Generator, size: int, scale: float) -> np.ndarray:
    field_ = ndimage.gaussian_filter(rng.standard_normal((size, size)), sigma=scale, mode="wrap")
    std = field_.std()
    return field_ / std if std > 0 else field_


def class_field(rng: np.random.Generator, size: int, priors: tuple[float, ...], scale: float) -> np.ndarray:
    """
    Klassenbild aus k glatten Feldern (argmax), dessen Offsets auf die Prioren kalibriert werden.
    """
    fields = np.stack([smooth_field(rng, size, scale) for _ in priors], axis=-1)
    bias = np.log(np.asarray(priors))
    for _ in range(_PRIOR_ITERATIONS):
        labels = np.argmax(fields + bias, axis=-1)
        fractions = np.bincount(labels.ravel(), minlength=len(priors)) / labels.size
        bias += 0.5 * (np.log(priors) - np.log(np.maximum(fractions, 1e-6)))
    return np.argmax(fields + bias, axis=-1).astype(LABEL_DTYPE)


def class_fractions(labels: Raster, num_classes: int, factor: int) -> np.ndarray:
    """
    Klassenanteile je grober Zelle, Form (num_classes, ceil(H/factor), ceil(W/factor)).

    Randzellen, die über das Raster hinausragen, zählen nur ihre vorhandenen Pixel.
    """
    band = labels.band(0)
    height, width = band.shape
    rows, cols = -(-height // factor), -(-width // factor)
    pad = ((0, 0), (0, rows * factor - height), (0, cols * factor - width))
    one_hot = (band[np.newaxis] == np.arange(num_classes)[:, np.newaxis, np.newaxis]).astype(np.float64)
    counts = np.pad(one_hot, pad).reshape(num_classes, rows, factor, cols, factor).sum(axis=(2, 4))
    pixels = np.pad(np.ones((1, height, width)), pad).reshape(1, rows, factor, cols, factor).sum(axis=(2, 4))
    return counts / pixels


def _pooled_transform(transform: GeoTransform, factor: int) -> GeoTransform:
    return GeoTransform(
        transform.origin_x,
        transform.origin_y,
        transform.pixel_width * factor,
        transform.pixel_height * factor,
    )


def coarse_logits(labels: Raster, num_classes: int, factor: int, smoothing: float) -> Raster:
    """Logarithmierte, geglättete Klassenanteile je grober Zelle (ein Band je Klasse)."""
    logits = np.log(class_fractions(labels, num_classes, factor) + smoothing).astype(np.float32)
    return Raster(logits, _pooled_transform(labels.transform, factor), labels.crs)


def majority_pool(labels: Raster, factor: int, num_classes: int) -> Raster:
    """Mehrheitsklasse je factor x factor Block; Gleichstand -> kleinste ID."""
    if factor == 1:
        return labels
    fractions = class_fractions(labels, num_classes, factor)
    pooled = np.argmax(fractions, axis=0).astype(LABEL_DTYPE)
    return Raster(pooled, _pooled_transform(labels.transform, factor), labels.crs)


def generate_scene(config: SynthConfig | None = None, seed: int = 0) -> SynthScene:
    """
    Erzeugt eine synthetische Szene.

    Feine Labels sind die Ground Truth, grobe Labels ihr Mehrheitspooling,
    grobe Logits die logarithmierten (geglätteten) Blockanteile. Bildbänder
    sind Klassenmittel mit Rauschen und glattem Beleuchtungsfeld, das
    Thermalbild Klassenmittel mit Weichzeichnung und Rauschen.
    """
    config = config or SynthConfig()
    rng = np.random.default_rng(seed)
    size = config.size
    crs = Crs.utm(config.zone, "N")
    transform = GeoTransform(
        config.origin[0],
        config.origin[1] + config.extent,
        config.fine_resolution,
        -config.fine_resolution,
    )

    terrain = value_noise(rng, size, config.terrain_base_cells, config.terrain_octaves)
    terrain = config.terrain_amplitude * terrain
    labels = class_field(rng, size, config.class_priors, config.class_scale / config.fine_resolution)

    trees = SYNTH_CLASSES.index("trees")
    canopy = np.where(labels == trees, config.canopy_height, 0.0)
    canopy = ndimage.gaussian_filter(canopy, sigma=1.0)

    means = np.asarray(CLASS_IMAGERY_MEANS)[labels].transpose(2, 0, 1)
    illumination = 1.0 + config.illumination_amplitude * value_noise(rng, size, 2, 2)
    imagery = means * illumination + rng.normal(0.0, config.imagery_noise, means.shape)

    thermal = ndimage.gaussian_filter(np.asarray(CLASS_THERMAL_MEANS)[labels], sigma=config.thermal_blur)
    thermal = np.clip(np.rint(thermal + rng.normal(0.0, config.thermal_noise, thermal.shape)), 0, 65535)

    lulc_fine = Raster(labels, transform, crs)
    factor = config.pool_factor(config.coarse_resolution)

    scene = SynthScene(
        config=config,
        seed=seed,
        dem=Raster(terrain.astype(np.float32), transform, crs),
        dsm=Raster((terrain + canopy).astype(np.float32), transform, crs),
        lulc_fine=lulc_fine,
        lulc_coarse=majority_pool(lulc_fine, factor, config.num_classes),
        coarse_logits=coarse_logits(lulc_fine, config.num_classes, factor, config.logit_smoothing),
        imagery=Raster(np.clip(imagery, 0.0, 255.0).astype(np.float32), transform, crs),
        thermal=Raster(thermal.astype(np.uint16), transform, crs),
    )
    logger.info(f"Synthetische Szene {size}x{size} (Seed {seed}) erzeugt")
    return scene


def make_trajectory(
    scene: SynthScene,
    config: TrajectoryConfig | None = None,
    name: str = "traj",
) -> Trajectory:
    """
    Gerade Befliegung durch die Szenenmitte.

    Die Höhe über dem mittleren Gelände steigt linear über den Bildern an;
    das Posenlog reicht `margin` Sekunden über den ersten und letzten
    Aufnahmezeitpunkt hinaus.
    """
    config = config or TrajectoryConfig()
    if config.frames < 1:
        raise DataError(f"Mindestens ein Bild erforderlich: {config.frames}")
    left, bottom, right, top = scene.dem.bounds
    center = np.array([(left + right) / 2.0, (bottom + top) / 2.0])
    heading = np.radians(config.heading_deg)
    direction = np.array([np.sin(heading), np.cos(heading)])
    half_track = config.track_fraction * (right - left) / 2.0
    ground = float(np.mean(scene.dem.data))

    duration = max(config.frames - 1, 1) * config.frame_interval
    frame_times = tuple(float(i * config.frame_interval) for i in range(config.frames))
    samples = int(round((duration + 2.0 * config.margin) * config.log_rate)) + 1
    log_times = np.round(np.arange(samples) / config.log_rate - config.margin, 9)
    attitude = look_attitude(config.heading_deg, config.pitch_deg)

    poses = []
    for t in log_times:
        s = float(np.clip(t / duration, 0.0, 1.0)) if duration > 0 else 0.0
        xy = center + direction * half_track * (2.0 * t / duration - 1.0 if duration > 0 else 0.0)
        altitude = config.altitude[0] + s * (config.altitude[1] - config.altitude[0])
        poses.append(CameraPose((xy[0], xy[1], ground + altitude), attitude, timestamp=float(t)))
    return Trajectory(name, PoseLog(tuple(poses), scene.crs), frame_times, config.intrinsics)


def write_scene(scene: SynthScene, trajectories: list[Trajectory], output_dir: Path) -> dict[str, Path]:
    """Schreibt alle Raster und Posenlogs einer Szene als Datensatz."""
    output_dir.mkdir(parents=True, exist_ok=True)
    rasters = {
        "dem": scene.dem,
        "dsm": scene.dsm,
        "lulc_fine": scene.lulc_fine,
        "lulc_coarse": scene.lulc_coarse,
        "logits": scene.coarse_logits,
        "imagery": scene.imagery,
        "thermal": scene.thermal,
    }
    paths: dict[str, Path] = {}
    for name, raster in rasters.items():
        paths[name] = output_dir / f"{name}.tif"
        write_geotiff(raster, paths[name])
    for trajectory in trajectories:
        paths[f"poses_{trajectory.name}"] = output_dir / f"poses_{trajectory.name}.csv"
        write_pose_log(trajectory.log, paths[f"poses_{trajectory.name}"])
    logger.info(f"Datensatz mit {len(paths)} Dateien nach {output_dir} geschrieben")
    return paths
