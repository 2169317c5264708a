"""
Simulierte Aufnahmen: Thermalbild und Ground-Truth-Labels je Bild einer
synthetischen Befliegung, gerendert mit der wahren Pose.
"""

import logging
from dataclasses import dataclass

import numpy as np
from skimage import measure

from ..config import UNKNOWN_LABEL
from ..errors import DataError
from ..geo.warp import ResampleMethod
from ..models import CameraPose, MaskSet, Raster
from ..refine import StaticMaskProvider
from ..render import rasterize, sample_scene
from ..render.rasterizer import project_raster
from ..render.scene import RenderSettings
from .scene import SynthScene, Trajectory

logger = logging.getLogger(__name__)

SURFACES = ("dem", "dsm")


@dataclass(frozen=True, eq=False)
class CapturedFrame:
    frame_id: str
    timestamp: float
    pose: CameraPose
    image: np.ndarray
    truth: np.ndarray


def surface_raster(scene: SynthScene, surface: str) -> Raster:
    if surface not in SURFACES:
        raise DataError(f"Unbekannte Oberfläche '{surface}', erlaubt: {SURFACES}")
    return scene.dem if surface == "dem" else scene.dsm


def capture_frame(
    scene: SynthScene,
    frame_id: str,
    pose: CameraPose,
    trajectory: Trajectory,
    settings: RenderSettings,
    surface: str = "dem",
) -> CapturedFrame:
    """Rendert die Geländetiefe und drapiert Thermal- und Labelraster ins Bild."""
    elevation = surface_raster(scene, surface)
    mesh = sample_scene(
        scene.lulc_fine,
        elevation,
        pose,
        settings.extent,
        settings.grid,
        settings.d_min,
        settings.symmetric,
    )
    _, depth = rasterize(mesh, pose, trajectory.intrinsics, settings.near)

    intrinsics = trajectory.intrinsics
    thermal = project_raster(scene.thermal, depth, pose, intrinsics, ResampleMethod.BILINEAR, fill=np.nan)
    background = float(np.nanmedian(thermal)) if np.isfinite(thermal).any() else 0.0
    image = np.rint(np.where(np.isfinite(thermal), thermal, background)).clip(0, 65535).astype(np.uint16)
    truth = project_raster(
        scene.lulc_fine, depth, pose, intrinsics, ResampleMethod.NEAREST, fill=UNKNOWN_LABEL
    )
    return CapturedFrame(frame_id, pose.timestamp, pose, image, truth.astype(np.uint8))


def capture_frames(
    scene: SynthScene,
    trajectory: Trajectory,
    settings: RenderSettings | None = None,
    surface: str = "dem",
) -> list[CapturedFrame]:
    settings = settings or RenderSettings()
    frames = [
        capture_frame(scene, frame_id, pose, trajectory, settings, surface)
        for frame_id, pose in zip(trajectory.frame_ids, trajectory.true_poses(), strict=True)
    ]
    logger.info(f"{len(frames)} Aufnahmen für Trajektorie {trajectory.name} simuliert ({surface})")
    return frames


def truth_segments(truth: np.ndarray) -> MaskSet:
    """Zusammenhängende Gebiete gleicher wahrer Klasse als Maskensatz (Ersatz für externe Masken)."""
    segments = measure.label(truth.astype(np.int32) + 1, background=0, connectivity=1)
    return MaskSet.from_label_image(segments - 1, source="truth_segments")


def truth_mask_provider(frames: list[CapturedFrame]) -> StaticMaskProvider:
    return StaticMaskProvider({f.frame_id: truth_segments(f.truth) for f in frames}, source="truth_segments")
