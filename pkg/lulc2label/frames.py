"""
Bildweise Stufen der Pipeline: Rendern der projizierten Labels und
Verfeinerung mit Masken.

Jede Stufe schreibt pro Bild eine strukturierte Zeitmessung ins Log::

    frame=<id> stage=<name> seconds=<t> pixels=<n>

Bilder sind voneinander unabhängig und werden optional in einem
Prozesspool verarbeitet; die Ergebnisreihenfolge entspricht immer der
Eingabereihenfolge.
"""

import logging
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DataError, Lulc2LabelError
from .geo.warp import ResampleMethod, resample_like
from .models import CameraIntrinsics, CameraPose, Raster
from .refine import Fallback, MaskProvider, preprocess_thermal, refine, to_intensity
from .render import fill_sky, render_labels, sample_scene
from .render.scene import RenderSettings

logger = logging.getLogger(__name__)


def log_stage(frame_id: str, stage: str, seconds: float, pixels: int) -> None:
    logger.info(f"frame={frame_id} stage={stage} seconds={seconds:.4f} pixels={pixels}")


@dataclass
class FrameOutcome:
    """Ergebnis eines Bildes; `error` ist gesetzt, wenn das Bild fehlgeschlagen ist."""

    frame_id: str
    projected: np.ndarray | None = None
    refined: np.ndarray | None = None
    depth: np.ndarray | None = None
    error: str | None = None
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.error is None


class FrameRefiner:
    """Verfeinert projizierte Labels eines Bildes mit den Masken eines Providers."""

    def __init__(
        self,
        provider: MaskProvider | None = None,
        fallback: Fallback | str = Fallback.KEEP_PROJECTED,
        preprocess: bool = True,
    ):
        self.provider = provider
        self.fallback = Fallback(fallback)
        self.preprocess = preprocess

    def refine(self, frame_id: str, projected: np.ndarray, image: np.ndarray | None) -> np.ndarray:
        """Ohne Provider werden die projizierten Labels unverändert übernommen."""
        if self.provider is None:
            return np.array(projected, copy=True)
        if image is None:
            raise DataError(f"Bild {frame_id}: kein Kamerabild für die Maskenbildung vorhanden")
        start = time.perf_counter()
        intensity = preprocess_thermal(image) if self.preprocess else to_intensity(image)
        masks = self.provider.masks_for(intensity, frame_id)
        refined = refine(projected, masks, self.fallback)
        log_stage(frame_id, "refine", time.perf_counter() - start, refined.size)
        return refined


class FrameProcessor:
    """Rendert und verfeinert einzelne Bilder auf einer festen LULC/Höhen-Grundlage."""

    def __init__(
        self,
        lulc: Raster,
        elevation: Raster,
        intrinsics: CameraIntrinsics,
        settings: RenderSettings | None = None,
        provider: MaskProvider | None = None,
        fallback: Fallback | str = Fallback.KEEP_PROJECTED,
        preprocess: bool = True,
    ):
        if not lulc.is_label:
            raise DataError(
                f"LULC muss ein einbandiges Labelraster sein, erhalten {lulc.bands} Bänder {lulc.dtype}",
            )
        self.elevation = elevation
        self.lulc = resample_like(lulc, elevation, ResampleMethod.NEAREST)
        self.intrinsics = intrinsics
        self.settings = settings or RenderSettings()
        self.refiner = FrameRefiner(provider, fallback, preprocess)

    def render(self, frame_id: str, pose: CameraPose) -> tuple[np.ndarray, np.ndarray]:
        """Projizierte Labels und Tiefe eines Bildes."""
        start = time.perf_counter()
        s = self.settings
        scene = sample_scene(self.lulc, self.elevation, pose, s.extent, s.grid, s.d_min, s.symmetric)
        labels, depth = render_labels(scene, pose, self.intrinsics, s.near)
        labels = fill_sky(labels, pose, self.intrinsics, s.sky_class)
        log_stage(frame_id, "render", time.perf_counter() - start, labels.size)
        return labels, depth

    def refine(self, frame_id: str, projected: np.ndarray, image: np.ndarray | None) -> np.ndarray:
        return self.refiner.refine(frame_id, projected, image)

    def process(self, frame_id: str, pose: CameraPose, image: np.ndarray | None) -> FrameOutcome:
        try:
            projected, depth = self.render(frame_id, pose)
            refined = self.refine(frame_id, projected, image)
        except Lulc2LabelError as err:
            logger.warning(f"Bild {frame_id} fehlgeschlagen: {err}")
            return FrameOutcome(frame_id, error=str(err))
        return FrameOutcome(frame_id, projected, refined, depth)


_WORKER: dict[str, Any] = {}


def _init_worker(state: Any) -> None:
    _WORKER["state"] = state


def _call(task: tuple[Callable, tuple]) -> Any:
    function, args = task
    return function(_WORKER["state"], *args)


def map_frames(
    function: Callable[..., Any],
    state: Any,
    tasks: Iterable[tuple],
    workers: int = 1,
) -> list[Any]:
    """
    Wendet ``function(state, *task)`` auf alle Aufgaben an.

    `state` (z.B. ein FrameProcessor) wird jedem Worker einmal übergeben.
    `function` muss auf Modulebene definiert sein, damit sie serialisierbar ist.
    """
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [function(state, *args) for args in tasks]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(state,)) as executor:
        return list(executor.map(_call, [(function, args) for args in tasks]))


def process_frame(
    processor: FrameProcessor,
    frame_id: str,
    pose: CameraPose,
    image: np.ndarray | None,
) -> FrameOutcome:
    return processor.process(frame_id, pose, image)


def render_frame(processor: FrameProcessor, frame_id: str, pose: CameraPose) -> FrameOutcome:
    try:
        projected, depth = processor.render(frame_id, pose)
    except Lulc2LabelError as err:
        logger.warning(f"Bild {frame_id} nicht renderbar: {err}")
        return FrameOutcome(frame_id, error=str(err))
    return FrameOutcome(frame_id, projected=projected, depth=depth)


def refine_frame(
    processor: FrameProcessor | FrameRefiner,
    frame_id: str,
    projected: np.ndarray,
    image: np.ndarray | None,
) -> FrameOutcome:
    try:
        refined = processor.refine(frame_id, projected, image)
    except Lulc2LabelError as err:
        logger.warning(f"Bild {frame_id} nicht verfeinerbar: {err}")
        return FrameOutcome(frame_id, projected=projected, error=str(err))
    return FrameOutcome(frame_id, projected=projected, refined=refined)


def process_all(
    processor: FrameProcessor,
    frames: Sequence[tuple[str, CameraPose, np.ndarray | None]],
    workers: int = 1,
) -> list[FrameOutcome]:
    return map_frames(process_frame, processor, frames, workers)
