"""
Ablationen auf synthetischen Szenen: Posenrauschen, LULC-Auflösung,
Zeitversatz zwischen Bild und Posenlog sowie DEM gegen DSM.

Alle Tabellen sind pandas-DataFrames mit einer Zeile je (Stufe, Klassensatz)
und den Spalten ``miou_mean``, ``miou_low`` (2.5 %-Perzentil) und
``miou_high`` (97.5 %-Perzentil) über die Versuche. Zufallszahlen werden je
(Seed, Stufe, Versuch, Bild) abgeleitet, die Ergebnisse hängen daher nicht
von der Ausführungsreihenfolge oder der Workerzahl ab.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy.spatial.transform import Rotation

from ..crf import refine_lulc
from ..errors import DataError
from ..frames import FrameOutcome, FrameProcessor, map_frames, process_frame
from ..metrics import accumulate, apply_class_map, default_class_maps, miou
from ..models import CameraPose, ClassMap, ConfusionMatrix, CrfParams, Raster
from ..refine import Fallback, MaskProvider, SlicProvider
from ..render.camera import rotation_from_wxyz, wxyz_from_rotation
from ..render.scene import RenderSettings
from .capture import CapturedFrame, capture_frames, surface_raster
from .scene import SynthScene, Trajectory

logger = logging.getLogger(__name__)

NOISE_AXES = ("position", "altitude", "attitude", "joint")
PERCENTILES = (2.5, 97.5)


@dataclass(frozen=True)
class NoiseSpec:
    """Standardabweichungen einer Rauschstufe (Meter bzw. Grad je Achse)."""

    sigma_pos_xy: float = 0.0
    sigma_alt: float = 0.0
    sigma_att: float = 0.0
    trials: int = 1
    seed: int = 0
    axis: str = "joint"

    def __post_init__(self):
        if min(self.sigma_pos_xy, self.sigma_alt, self.sigma_att) < 0:
            raise DataError(f"Standardabweichungen müssen >= 0 sein: {self}")
        if self.trials < 1:
            raise DataError(f"Mindestens ein Versuch je Stufe erforderlich: {self.trials}")

    @property
    def is_zero(self) -> bool:
        return self.sigma_pos_xy == 0 and self.sigma_alt == 0 and self.sigma_att == 0

    @property
    def sigma(self) -> float:
        """Kennwert der Stufe für Tabellen und Diagramme."""
        return {
            "position": self.sigma_pos_xy,
            "altitude": self.sigma_alt,
            "attitude": self.sigma_att,
        }.get(self.axis, max(self.sigma_pos_xy, self.sigma_alt, self.sigma_att))


def noise_grid(axis: str, sigmas: Sequence[float], trials: int = 5, seed: int = 0) -> list[NoiseSpec]:
    """Rauschstufen entlang einer Achse; ``joint`` verwendet sigma für Position, Höhe und Lage."""
    if axis not in NOISE_AXES:
        raise DataError(f"Unbekannte Rauschachse '{axis}', erlaubt: {NOISE_AXES}")
    specs = []
    for sigma in sigmas:
        values = {
            "position": dict(sigma_pos_xy=sigma),
            "altitude": dict(sigma_alt=sigma),
            "attitude": dict(sigma_att=sigma),
            "joint": dict(sigma_pos_xy=sigma, sigma_alt=sigma, sigma_att=sigma),
        }[axis]
        specs.append(NoiseSpec(trials=trials, seed=seed, axis=axis, **values))
    return specs


def noise_rng(seed: int, level: int, trial: int, frame: int) -> np.random.Generator:
    """Zählerbasierter Zufallsstrom je (Seed, Stufe, Versuch, Bild)."""
    return np.random.default_rng([seed, level, trial, frame])


def sample_noise(noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Ein Rauschvektor (dx, dy, dz, roll, pitch, yaw) in Metern und Grad."""
    draws = rng.standard_normal(6)
    scale = np.array([noise.sigma_pos_xy] * 2 + [noise.sigma_alt] + [noise.sigma_att] * 3)
    return draws * scale


def perturb_pose(pose: CameraPose, noise: NoiseSpec, rng: np.random.Generator) -> CameraPose:
    """
    Verrauscht Position und Lage; die Lage wird um drei unabhängige
    Kleinwinkeldrehungen um die Körperachsen gedreht.
    """
    if noise.is_zero:
        return pose
    delta = sample_noise(noise, rng)
    position = tuple(np.asarray(pose.position) + delta[:3])
    attitude = pose.attitude
    if noise.sigma_att > 0:
        body = Rotation.from_euler("xyz", delta[3:], degrees=True)
        attitude = wxyz_from_rotation(rotation_from_wxyz(pose.attitude) * body)
    return replace(pose, position=position, attitude=attitude)


@dataclass(frozen=True)
class AblationConfig:
    """Pipelineeinstellungen der synthetischen Harness."""

    settings: RenderSettings = field(default_factory=RenderSettings)
    provider: MaskProvider | None = field(default_factory=SlicProvider)
    fallback: Fallback = Fallback.KEEP_PROJECTED
    class_sets: tuple[str, ...] = ("synth4", "synth3")
    resolution: float | None = None
    surface: str = "dem"
    crf: CrfParams | None = None
    workers: int = 1

    def class_maps(self) -> dict[str, ClassMap]:
        maps = default_class_maps()
        unknown = [name for name in self.class_sets if name not in maps]
        if unknown:
            raise DataError(f"Unbekannte Klassensätze: {unknown}")
        return {name: maps[name] for name in self.class_sets}


def scene_lulc(scene: SynthScene, resolution: float | None = None, crf: CrfParams | None = None) -> Raster:
    """
    Grobe LULC der Szene in der gewünschten Auflösung, optional CRF-verfeinert
    auf dem Bildraster.
    """
    resolution = resolution or scene.config.coarse_resolution
    if crf is None:
        return scene.coarse_labels(resolution)
    return refine_lulc(scene.coarse_logits_at(resolution), scene.imagery, crf)


def _processor(
    trajectory: Trajectory,
    lulc: Raster,
    elevation: Raster,
    cfg: AblationConfig,
) -> FrameProcessor:
    return FrameProcessor(lulc, elevation, trajectory.intrinsics, cfg.settings, cfg.provider, cfg.fallback)


def _confusions(
    outcomes: Sequence[FrameOutcome],
    frames: Sequence[CapturedFrame],
    class_maps: dict[str, ClassMap],
    stage: str = "refined",
) -> dict[str, ConfusionMatrix]:
    cms = {name: ConfusionMatrix.zeros(cmap.num_targets) for name, cmap in class_maps.items()}
    for outcome, frame in zip(outcomes, frames, strict=True):
        if not outcome.ok:
            raise DataError(f"Bild {outcome.frame_id} fehlgeschlagen: {outcome.error}")
        pred = outcome.refined if stage == "refined" else outcome.projected
        for name, cmap in class_maps.items():
            cms[name] = accumulate(cms[name], apply_class_map(pred, cmap), apply_class_map(frame.truth, cmap))
    return cms


def _summary_rows(level: dict, per_trial: dict[str, list[float]]) -> list[dict]:
    rows = []
    for class_set, values in per_trial.items():
        values = np.asarray(values)
        low, high = np.percentile(values, PERCENTILES)
        rows.append(
            {
                **level,
                "class_set": class_set,
                "miou_mean": float(values.mean()),
                "miou_low": float(low),
                "miou_high": float(high),
                "trials": int(values.size),
            },
        )
    return rows


def run_frames(
    processor: FrameProcessor,
    frames: Sequence[CapturedFrame],
    poses: Sequence[CameraPose],
    workers: int = 1,
) -> list[FrameOutcome]:
    tasks = [(f.frame_id, pose, f.image) for f, pose in zip(frames, poses, strict=True)]
    return map_frames(process_frame, processor, tasks, workers)


def run_baseline(
    scene: SynthScene,
    trajectory: Trajectory,
    cfg: AblationConfig | None = None,
) -> pd.DataFrame:
    """mIoU der projizierten und der verfeinerten Labels bei wahrer Pose."""
    cfg = cfg or AblationConfig()
    class_maps = cfg.class_maps()
    frames = capture_frames(scene, trajectory, cfg.settings, cfg.surface)
    lulc = scene_lulc(scene, cfg.resolution, cfg.crf)
    processor = _processor(trajectory, lulc, surface_raster(scene, cfg.surface), cfg)
    outcomes = run_frames(processor, frames, [f.pose for f in frames], cfg.workers)
    rows = []
    for stage in ("projected", "refined"):
        for class_set, cm in _confusions(outcomes, frames, class_maps, stage).items():
            rows.append({"stage": stage, "class_set": class_set, "miou": miou(cm)[1]})
    return pd.DataFrame(rows)


def run_pose_ablation(
    scene: SynthScene,
    trajectory: Trajectory,
    noise_levels: Sequence[NoiseSpec],
    cfg: AblationConfig | None = None,
) -> pd.DataFrame:
    """
    mIoU bei verrauschten Posen.

    Die Aufnahmen (Thermalbild, Ground Truth) stammen immer von der wahren
    Pose; nur die zum Rendern verwendete Pose wird verrauscht.
    """
    cfg = cfg or AblationConfig()
    if not noise_levels:
        raise DataError("Mindestens eine Rauschstufe erforderlich")
    class_maps = cfg.class_maps()
    frames = capture_frames(scene, trajectory, cfg.settings, cfg.surface)
    lulc = scene_lulc(scene, cfg.resolution, cfg.crf)
    processor = _processor(trajectory, lulc, surface_raster(scene, cfg.surface), cfg)

    rows = []
    for level, noise in enumerate(noise_levels):
        per_trial: dict[str, list[float]] = {name: [] for name in class_maps}
        for trial in range(noise.trials):
            poses = [
                perturb_pose(f.pose, noise, noise_rng(noise.seed, level, trial, index))
                for index, f in enumerate(frames)
            ]
            outcomes = run_frames(processor, frames, poses, cfg.workers)
            for name, cm in _confusions(outcomes, frames, class_maps).items():
                per_trial[name].append(miou(cm)[1])
        logger.info(f"Posenrauschen {noise.axis} sigma={noise.sigma}: {noise.trials} Versuche")
        rows.extend(_summary_rows({"axis": noise.axis, "sigma": noise.sigma}, per_trial))
    return pd.DataFrame(rows)


def run_resolution_ablation(
    scene: SynthScene,
    trajectory: Trajectory,
    resolutions: Sequence[float],
    cfg: AblationConfig | None = None,
) -> pd.DataFrame:
    """mIoU je LULC-Auflösung (Mehrheitspooling der feinen Labels) und Klassensatz."""
    cfg = cfg or AblationConfig()
    class_maps = cfg.class_maps()
    frames = capture_frames(scene, trajectory, cfg.settings, cfg.surface)
    elevation = surface_raster(scene, cfg.surface)

    rows = []
    for resolution in resolutions:
        processor = _processor(trajectory, scene_lulc(scene, resolution, cfg.crf), elevation, cfg)
        outcomes = run_frames(processor, frames, [f.pose for f in frames], cfg.workers)
        per_trial = {name: [miou(cm)[1]] for name, cm in _confusions(outcomes, frames, class_maps).items()}
        rows.extend(_summary_rows({"resolution": float(resolution)}, per_trial))
    return pd.DataFrame(rows)


def run_timing_ablation(
    scene: SynthScene,
    trajectory: Trajectory,
    offsets: Sequence[float],
    cfg: AblationConfig | None = None,
) -> pd.DataFrame:
    """mIoU, wenn die Pose zum Zeitpunkt t + offset statt t interpoliert wird."""
    cfg = cfg or AblationConfig()
    class_maps = cfg.class_maps()
    frames = capture_frames(scene, trajectory, cfg.settings, cfg.surface)
    lulc = scene_lulc(scene, cfg.resolution, cfg.crf)
    processor = _processor(trajectory, lulc, surface_raster(scene, cfg.surface), cfg)

    rows = []
    for offset in offsets:
        uncovered = [f.frame_id for f in frames if not trajectory.log.covers(f.timestamp + offset)]
        if uncovered:
            raise DataError(f"Versatz {offset} s liegt für {len(uncovered)} Bilder außerhalb des Posenlogs")
        poses = [trajectory.log.at(f.timestamp + offset) for f in frames]
        outcomes = run_frames(processor, frames, poses, cfg.workers)
        per_trial = {name: [miou(cm)[1]] for name, cm in _confusions(outcomes, frames, class_maps).items()}
        rows.extend(_summary_rows({"offset_s": float(offset)}, per_trial))
    return pd.DataFrame(rows)


def run_elevation_ablation(
    scene: SynthScene,
    trajectory: Trajectory,
    sources: Sequence[str] = ("dem", "dsm"),
    cfg: AblationConfig | None = None,
) -> pd.DataFrame:
    """
    mIoU je Höhenquelle beim Rendern.

    Die Aufnahmen sehen die Oberfläche inklusive Vegetation (DSM).
    """
    cfg = cfg or AblationConfig()
    class_maps = cfg.class_maps()
    frames = capture_frames(scene, trajectory, cfg.settings, "dsm")
    lulc = scene_lulc(scene, cfg.resolution, cfg.crf)

    rows = []
    for source in sources:
        processor = _processor(trajectory, lulc, surface_raster(scene, source), cfg)
        outcomes = run_frames(processor, frames, [f.pose for f in frames], cfg.workers)
        per_trial = {name: [miou(cm)[1]] for name, cm in _confusions(outcomes, frames, class_maps).items()}
        rows.extend(_summary_rows({"elevation": source}, per_trial))
    return pd.DataFrame(rows)
