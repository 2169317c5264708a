"""
Pipeline-Konfiguration: pydantic-Schema und Factory für Domänenobjekte.

Eine Konfiguration ist eine JSON-Datei. Unbekannte Schlüssel werden auf jeder
Ebene abgelehnt. Relative Pfade gelten relativ zum Verzeichnis der Datei;
Datenpfade lassen sich per Umgebungsvariable ``LULC2LABEL_<SCHLÜSSEL>``
überschreiben (z.B. ``LULC2LABEL_DEM``, ``LULC2LABEL_OUTPUT_DIR``).
"""

import json
import logging
import os
from collections.abc import Mapping
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .config import DEFAULT_CRF_ITERATIONS, DEFAULT_D_MIN, DEFAULT_NEAR_PLANE, DEFAULT_SEARCH_BOUNDS
from .crf import InferenceMode
from .errors import ConfigError
from .metrics import TrajectoryMode, class_map_from_dict, default_class_maps
from .models import BodyToCamera, CameraIntrinsics, ClassMap, CrfParams
from .refine import (
    ExternalMaskProvider,
    Fallback,
    FelzenszwalbProvider,
    MaskProvider,
    ProviderKind,
    SlicProvider,
)
from .render.scene import RenderSettings
from .tuning import BoundaryLossConfig, ParamScale, SearchSpace, SearchStrategy

logger = logging.getLogger(__name__)

ENV_PREFIX = "LULC2LABEL_"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PathsConfig(_Strict):
    lulc: Path | None = None
    logits: Path | None = None
    dem: Path | None = None
    dsm: Path | None = None
    imagery: Path | None = None
    reference: Path | None = None
    poses: Path | None = None
    frames: Path | None = None
    masks: Path | None = None
    ground_truth: Path | None = None
    output_dir: Path = Path("output")


class CrsConfig(_Strict):
    zone: int | None = Field(default=None, ge=1, le=60)
    hemisphere: Literal["N", "S"] = "N"


class CrfConfig(_Strict):
    enabled: bool = True
    w1: float = Field(default=10.0, ge=0)
    w2: float = Field(default=3.0, ge=0)
    theta_alpha: float = Field(default=80.0, gt=0)
    theta_gamma: float = Field(default=3.0, gt=0)
    theta_beta: list[float] = Field(default_factory=lambda: [13.0])
    num_iterations: int = Field(default=DEFAULT_CRF_ITERATIONS, ge=1)
    mode: InferenceMode = InferenceMode.LATTICE
    standardize: bool = True
    use_elevation: bool = False

    @field_validator("theta_beta")
    @classmethod
    def theta_beta_positive(cls, v):
        if not v or any(t <= 0 for t in v):
            raise ValueError("theta_beta muss mindestens einen Wert > 0 enthalten")
        return v


class CameraConfig(_Strict):
    fx: float = Field(gt=0)
    fy: float = Field(gt=0)
    cx: float
    cy: float
    width: int = Field(gt=0)
    height: int = Field(gt=0)
    k1: float = 0.0
    k2: float = 0.0
    body_to_camera_rotation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    lever_arm: tuple[float, float, float] = (0.0, 0.0, 0.0)


class RenderConfig(_Strict):
    extent: tuple[float, float] = (70.0, 140.0)
    grid: tuple[int, int] = (128, 160)
    d_min: float = Field(default=DEFAULT_D_MIN, gt=0)
    symmetric: bool = True
    near: float = Field(default=DEFAULT_NEAR_PLANE, gt=0)
    sky_class: int | None = Field(default=None, ge=0, le=254)
    lulc_source: Literal["refined", "input"] = "refined"
    elevation: Literal["dem", "dsm"] = "dem"


class SlicConfig(_Strict):
    n_segments: int = Field(default=100, ge=1)
    compactness: float = Field(default=10.0, gt=0)


class FelzenszwalbConfig(_Strict):
    scale: float = Field(default=1e4, gt=0)
    sigma: float = Field(default=0.8, ge=0)
    min_size: int = Field(default=20, ge=1)


class MaskConfig(_Strict):
    provider: ProviderKind = ProviderKind.SLIC
    fallback: Fallback = Fallback.KEEP_PROJECTED
    preprocess_thermal: bool = True
    slic: SlicConfig = Field(default_factory=SlicConfig)
    felzenszwalb: FelzenszwalbConfig = Field(default_factory=FelzenszwalbConfig)


class ClassMapConfig(_Strict):
    mapping: dict[int, int]
    ignore: list[int] = Field(default_factory=list)
    target_names: list[str] = Field(default_factory=list)


class EvaluationConfig(_Strict):
    class_sets: list[str] = Field(default_factory=lambda: ["cm6"])
    class_maps: dict[str, ClassMapConfig] = Field(default_factory=dict)
    stage: Literal["labels", "projected"] = "labels"
    trajectory_mode: TrajectoryMode = TrajectoryMode.SUMMED


class BoundConfig(_Strict):
    low: float
    high: float
    scale: ParamScale = ParamScale.LINEAR


class TuneConfig(_Strict):
    budget: int = Field(default=50, ge=1)
    strategy: SearchStrategy = SearchStrategy.TPE
    width: int = Field(default=1, ge=1)
    objective: Literal["boundary", "cross_entropy"] = "boundary"
    theta0: int = Field(default=3, ge=1)
    theta: int = Field(default=5, ge=1)
    bounds: dict[str, BoundConfig] = Field(default_factory=dict)


class SynthSceneConfig(_Strict):
    size: int = Field(default=512, ge=8)
    coarse_resolution: float = Field(default=10.0, gt=0)
    frames: int = Field(default=20, ge=1)
    altitude: tuple[float, float] = (60.0, 100.0)
    pitch_deg: float = Field(default=0.0, ge=0, lt=90)


class AblateConfig(_Strict):
    kind: Literal["pose", "resolution", "timing", "elevation"] = "pose"
    axes: list[Literal["position", "altitude", "attitude", "joint"]] = Field(
        default_factory=lambda: ["position", "altitude", "attitude"],
    )
    position_sigmas: list[float] = Field(default_factory=lambda: [0.0, 1.0, 2.0, 4.0, 8.0])
    attitude_sigmas: list[float] = Field(default_factory=lambda: [0.0, 1.0, 2.0, 3.5, 7.0])
    trials: int = Field(default=5, ge=1)
    resolutions: list[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0, 16.0])
    offsets_s: list[float] = Field(default_factory=lambda: [0.0, 0.1, 0.25, 0.5, 1.0])
    sources: list[Literal["dem", "dsm"]] = Field(default_factory=lambda: ["dem", "dsm"])
    class_sets: list[str] = Field(default_factory=lambda: ["synth4", "synth3"])


class PipelineConfig(_Strict):
    """Gesamte Konfiguration eines Pipeline-Laufs."""

    paths: PathsConfig = Field(default_factory=PathsConfig)
    crs: CrsConfig = Field(default_factory=CrsConfig)
    crf: CrfConfig = Field(default_factory=CrfConfig)
    camera: CameraConfig | None = None
    render: RenderConfig = Field(default_factory=RenderConfig)
    masks: MaskConfig = Field(default_factory=MaskConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    tune: TuneConfig = Field(default_factory=TuneConfig)
    synth: SynthSceneConfig = Field(default_factory=SynthSceneConfig)
    ablate: AblateConfig = Field(default_factory=AblateConfig)
    seed: int = 0
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def check_consistency(self):
        if self.masks.provider == ProviderKind.MASKS and self.paths.masks is None:
            raise ValueError("masks.provider = 'masks' erfordert paths.masks")
        if self.tune.theta < self.tune.theta0:
            raise ValueError(f"tune.theta ({self.tune.theta}) muss >= tune.theta0 ({self.tune.theta0}) sein")
        return self


class PipelineConfigFactory:
    """
    Lädt, validiert und übersetzt Pipeline-Konfigurationen.

    Die Factory ist die einzige Stelle, an der pydantic-Modelle in
    Domänenobjekte (CrfParams, CameraIntrinsics, ClassMap, ...) übersetzt werden.
    """

    def __init__(self, config: PipelineConfig, base_dir: Path | None = None):
        self.config = config
        self.base_dir = base_dir or Path.cwd()

    @classmethod
    def from_dict(
        cls,
        data: Mapping[str, Any],
        base_dir: Path | None = None,
        environ: Mapping[str, str] | None = None,
    ) -> "PipelineConfigFactory":
        """
        Validiert ein Konfigurations-Dictionary.

        Raises:
            ConfigError: Wenn die Validierung fehlschlägt
        """
        data = _apply_env_overrides(dict(data), os.environ if environ is None else environ)
        try:
            config = PipelineConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"Validierung fehlgeschlagen: {e}") from e
        base_dir = Path(base_dir) if base_dir else Path.cwd()
        return cls(_resolve_paths(config, base_dir), base_dir)

    @classmethod
    def from_file(cls, path: Path, environ: Mapping[str, str] | None = None) -> "PipelineConfigFactory":
        if not path.exists():
            raise ConfigError(f"Konfigurationsdatei nicht gefunden: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: kein gültiges JSON ({e})") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: Konfiguration muss ein JSON-Objekt sein")
        return cls.from_dict(data, path.parent.resolve(), environ)

    def with_overrides(
        self,
        output_dir: Path | None = None,
        workers: int | None = None,
        seed: int | None = None,
    ) -> "PipelineConfigFactory":
        """Überschreibt Werte per Kommandozeile."""
        update: dict[str, Any] = {}
        if output_dir is not None:
            update["paths"] = self.config.paths.model_copy(update={"output_dir": output_dir.resolve()})
        if workers is not None:
            if workers < 1:
                raise ConfigError(f"workers muss >= 1 sein: {workers}")
            update["workers"] = workers
        if seed is not None:
            update["seed"] = seed
        return PipelineConfigFactory(self.config.model_copy(update=update), self.base_dir)

    # Prüfungen

    def require_paths(self, *names: str) -> dict[str, Path]:
        """Prüft, dass die genannten Datenpfade gesetzt sind und existieren."""
        paths = {}
        for name in names:
            path = getattr(self.config.paths, name)
            if path is None:
                raise ConfigError(f"paths.{name} ist nicht gesetzt")
            if not path.exists():
                raise ConfigError(f"paths.{name} existiert nicht: {path}")
            paths[name] = path
        return paths

    def missing_paths(self) -> list[str]:
        """Alle gesetzten Datenpfade, die nicht existieren."""
        return [
            f"{name}: {path}"
            for name, path in self.config.paths
            if name != "output_dir" and path is not None and not path.exists()
        ]

    # Domänenobjekte

    @property
    def output_dir(self) -> Path:
        return self.config.paths.output_dir

    def crf_params(self) -> CrfParams:
        crf = self.config.crf
        return CrfParams(
            w1=crf.w1,
            w2=crf.w2,
            theta_alpha=crf.theta_alpha,
            theta_gamma=crf.theta_gamma,
            theta_beta=tuple(crf.theta_beta),
            num_iterations=crf.num_iterations,
        )

    def intrinsics(self) -> CameraIntrinsics:
        camera = self.config.camera
        if camera is None:
            raise ConfigError("Abschnitt 'camera' fehlt in der Konfiguration")
        return CameraIntrinsics(
            camera.fx,
            camera.fy,
            camera.cx,
            camera.cy,
            camera.width,
            camera.height,
            camera.k1,
            camera.k2,
        )

    def body_to_camera(self) -> BodyToCamera:
        camera = self.config.camera
        if camera is None:
            return BodyToCamera()
        return BodyToCamera(tuple(camera.body_to_camera_rotation), tuple(camera.lever_arm))

    def render_settings(self) -> RenderSettings:
        r = self.config.render
        return RenderSettings(tuple(r.extent), tuple(r.grid), r.d_min, r.symmetric, r.near, r.sky_class)

    def mask_provider(self) -> MaskProvider | None:
        masks = self.config.masks
        if masks.provider == ProviderKind.NONE:
            return None
        if masks.provider == ProviderKind.SLIC:
            return SlicProvider(masks.slic.n_segments, masks.slic.compactness)
        if masks.provider == ProviderKind.FELZENSZWALB:
            f = masks.felzenszwalb
            return FelzenszwalbProvider(f.scale, f.sigma, f.min_size)
        return ExternalMaskProvider(self.config.paths.masks)

    def class_maps(self) -> dict[str, ClassMap]:
        """Konfigurierte Klassensätze; eigene Abbildungen überschreiben mitgelieferte gleichen Namens."""
        available = default_class_maps()
        for name, custom in self.config.evaluation.class_maps.items():
            available[name] = class_map_from_dict(custom.model_dump(), name)
        unknown = [name for name in self.config.evaluation.class_sets if name not in available]
        if unknown:
            raise ConfigError(f"Unbekannte Klassensätze {unknown}, verfügbar: {sorted(available)}")
        return {name: available[name] for name in self.config.evaluation.class_sets}

    def search_space(self, num_bands: int) -> SearchSpace:
        bounds = dict(DEFAULT_SEARCH_BOUNDS)
        for name, bound in self.config.tune.bounds.items():
            if name not in bounds:
                raise ConfigError(f"Unbekannter Suchparameter '{name}', erlaubt: {sorted(bounds)}")
            bounds[name] = (bound.low, bound.high, bound.scale.value)
        tune = self.config.tune
        return SearchSpace.for_crf(num_bands, tune.budget, self.config.seed, bounds)

    def boundary_config(self) -> BoundaryLossConfig:
        return BoundaryLossConfig(self.config.tune.theta0, self.config.tune.theta)

    def dump(self) -> dict[str, Any]:
        return self.config.model_dump(mode="json")


def _apply_env_overrides(data: dict[str, Any], environ: Mapping[str, str]) -> dict[str, Any]:
    paths = dict(data.get("paths") or {})
    for name in PathsConfig.model_fields:
        value = environ.get(f"{ENV_PREFIX}{name.upper()}")
        if value:
            logger.debug(f"paths.{name} aus Umgebung: {value}")
            paths[name] = value
    if paths:
        data["paths"] = paths
    return data


def _resolve_paths(config: PipelineConfig, base_dir: Path) -> PipelineConfig:
    resolved = {
        name: (path if path is None or path.is_absolute() else (base_dir / path).resolve())
        for name, path in config.paths
    }
    return config.model_copy(update={"paths": PathsConfig(**resolved)})


def load_config(path: Path, environ: Mapping[str, str] | None = None) -> PipelineConfigFactory:
    return PipelineConfigFactory.from_file(Path(path), environ)


__all__ = [
    "ENV_PREFIX",
    "PipelineConfig",
    "PipelineConfigFactory",
    "load_config",
]
