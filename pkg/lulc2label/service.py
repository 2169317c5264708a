"""
Pipelinestufen als Service: LULC-Verfeinerung, Rendern, Maskenverfeinerung,
Auswertung sowie Tuning, Ablation und synthetische Datensätze.

Jede Stufe schreibt ein Manifest nach ``<output>/manifests/<stufe>.json`` mit
SHA-256 der Eingaben, Parametern und Paketversionen. Stimmt der daraus
gebildete Schlüssel mit dem vorhandenen Manifest überein und existieren alle
Ausgaben, wird die Stufe übersprungen (außer mit ``force``).
"""

import hashlib
import json
import logging
import shutil
from collections import defaultdict
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from datetime import datetime
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from scipy.special import log_softmax

from .analyzer import plot_ablation, save_label_png
from .config import UNKNOWN_LABEL
from .crf import argmax_labels, refine_lulc_with_marginals
from .errors import DataError
from .factory import PipelineConfigFactory
from .frames import FrameOutcome, FrameProcessor, FrameRefiner, map_frames, refine_frame, render_frame
from .geo.warp import ResampleMethod, resample_like
from .metrics import apply_class_map, confusion, per_class_iou, trajectory_average
from .models import CameraIntrinsics, Crs, GeoTransform, MarginalField, Raster, StageManifest
from .repo import (
    GeoTiffRasterRepository,
    ManifestJSONRepository,
    MaskJSONRepository,
    RasterRepository,
    read_logits,
    read_raster,
)
from .refine import ProviderKind
from .render import read_pose_log
from .synth import (
    AblationConfig,
    SynthConfig,
    TrajectoryConfig,
    capture_frames,
    generate_scene,
    make_trajectory,
    noise_grid,
    run_elevation_ablation,
    run_pose_ablation,
    run_resolution_ablation,
    run_timing_ablation,
    truth_mask_provider,
    truth_segments,
    write_scene,
)
from .tuning import boundary_loss, crf_params_from_trial, tune, weighted_cross_entropy

logger = logging.getLogger(__name__)

REFINED_LULC = "lulc_refined.tif"
LOG_MARGINALS = "lulc_logmarginals.tif"
FRAME_INDEX = "frames.csv"
VERSIONED_PACKAGES = ("lulc2label", "numpy", "scipy", "scikit-image", "pandas")


@dataclass(frozen=True)
class FrameRecord:
    """Eine Zeile des Bildindex."""

    frame_id: str
    timestamp: float
    trajectory: str = "default"
    image: Path | None = None


def frame_index_path(path: Path) -> Path:
    """Ein Verzeichnis steht für seine ``frames.csv``."""
    return path / FRAME_INDEX if path.is_dir() else path


def read_frame_index(path: Path) -> list[FrameRecord]:
    """
    Liest den Bildindex (CSV mit ``frame_id``, ``timestamp`` und optional
    ``trajectory`` und ``image``); Bildpfade sind relativ zum Index.
    """
    index = frame_index_path(Path(path))
    if not index.exists():
        raise DataError(f"Bildindex nicht gefunden: {index}")
    frame = pd.read_csv(index, dtype={"frame_id": str, "trajectory": str, "image": str})
    missing = {"frame_id", "timestamp"} - set(frame.columns)
    if missing:
        raise DataError(f"{index}: fehlende Spalten im Bildindex: {sorted(missing)}")
    duplicated = frame["frame_id"][frame["frame_id"].duplicated()].tolist()
    if duplicated:
        raise DataError(f"{index}: doppelte frame_id: {duplicated}")

    records = []
    for row in frame.to_dict("records"):
        image = row.get("image")
        trajectory = row.get("trajectory")
        records.append(
            FrameRecord(
                frame_id=row["frame_id"],
                timestamp=float(row["timestamp"]),
                trajectory=trajectory if isinstance(trajectory, str) and trajectory else "default",
                image=index.parent / image if isinstance(image, str) and image else None,
            ),
        )
    return records


def write_frame_index(records: list[FrameRecord], path: Path) -> None:
    rows = [
        {
            "frame_id": r.frame_id,
            "timestamp": r.timestamp,
            "trajectory": r.trajectory,
            "image": r.image.relative_to(path.parent).as_posix() if r.image else "",
        }
        for r in records
    ]
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=["frame_id", "timestamp", "trajectory", "image"]).to_csv(path, index=False)


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as file:
        for chunk in iter(lambda: file.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def package_versions() -> dict[str, str]:
    versions = {}
    for package in VERSIONED_PACKAGES:
        try:
            versions[package] = version(package)
        except PackageNotFoundError:
            versions[package] = "unbekannt"
    return versions


def _pixel_raster(data: np.ndarray, nodata: float | int | None = None) -> Raster:
    return Raster(data, GeoTransform.identity(), Crs.pixel(), nodata)


@dataclass
class StageResult:
    """Ergebnis einer Stufe für die Statistik der CLI."""

    stage: str
    manifest: StageManifest
    cached: bool = False
    succeeded: list[str] = field(default_factory=list)
    failed: list[tuple[str, str]] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    table: pd.DataFrame | None = None


class LabelPipelineService:
    """Service für die Stufen der Label-Pipeline."""

    def __init__(
        self,
        factory: PipelineConfigFactory,
        raster_repository: RasterRepository | None = None,
        mask_repository: MaskJSONRepository | None = None,
        manifest_repository: ManifestJSONRepository | None = None,
        force: bool = False,
    ):
        self.factory = factory
        self.config = factory.config
        self.raster_repository = raster_repository or GeoTiffRasterRepository()
        self.mask_repository = mask_repository or MaskJSONRepository()
        self.manifest_repository = manifest_repository or ManifestJSONRepository()
        self.force = force

    @property
    def output_dir(self) -> Path:
        return self.factory.output_dir

    # Manifeste und Cache

    def manifest_path(self, stage: str) -> Path:
        return self.output_dir / "manifests" / f"{stage}.json"

    def _hash_inputs(self, files: Mapping[str, Path]) -> dict[str, str]:
        return {name: sha256_file(path) for name, path in sorted(files.items())}

    def _cache_key(self, stage: str, inputs: dict[str, str], params: dict[str, Any]) -> str:
        payload = {"stage": stage, "inputs": inputs, "params": params, "versions": package_versions()}
        return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode("utf-8")).hexdigest()

    def _cached(self, stage: str, key: str) -> StageManifest | None:
        path = self.manifest_path(stage)
        if self.force or not path.exists():
            return None
        try:
            manifest = self.manifest_repository.load(path)
        except DataError as err:
            logger.warning(f"Manifest {path} unlesbar, Stufe wird neu berechnet: {err}")
            return None
        if manifest.key != key or not all((self.output_dir / name).exists() for name in manifest.outputs):
            return None
        logger.info(f"Stufe {stage}: Eingaben unverändert, Ausgaben aus dem Cache ({key[:12]})")
        return manifest

    def _finish(
        self,
        stage: str,
        key: str,
        inputs: dict[str, str],
        params: dict[str, Any],
        outputs: list[Path],
    ) -> StageManifest:
        manifest = StageManifest(
            stage=stage,
            key=key,
            inputs=inputs,
            params=params,
            versions=package_versions(),
            outputs=sorted(p.relative_to(self.output_dir).as_posix() for p in outputs),
            created=datetime.now(),
        )
        self.manifest_repository.save(manifest, self.manifest_path(stage))
        logger.info(f"Stufe {stage}: {len(outputs)} Ausgaben, Manifest {self.manifest_path(stage)}")
        return manifest

    def _fresh_dir(self, name: str) -> Path:
        directory = self.output_dir / name
        if directory.exists():
            shutil.rmtree(directory)
        directory.mkdir(parents=True)
        return directory

    def _run_stage(
        self,
        stage: str,
        files: Mapping[str, Path],
        params: dict[str, Any],
        body: Callable[[StageResult], list[Path]],
    ) -> StageResult:
        inputs = self._hash_inputs(files)
        key = self._cache_key(stage, inputs, params)
        cached = self._cached(stage, key)
        if cached is not None:
            return StageResult(stage, cached, cached=True)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        result = StageResult(stage, StageManifest(stage, key, inputs, params, {}))
        outputs = body(result)
        result.manifest = self._finish(stage, key, inputs, params, outputs)
        return result

    def _write_labels(self, labels: np.ndarray, path: Path) -> list[Path]:
        self.raster_repository.save(_pixel_raster(labels, UNKNOWN_LABEL), path)
        save_label_png(labels, path.with_suffix(".png"))
        return [path, path.with_suffix(".png")]

    def _collect(self, result: StageResult, outcomes: list[FrameOutcome]) -> list[FrameOutcome]:
        ok = []
        for outcome in outcomes:
            if outcome.ok:
                result.succeeded.append(outcome.frame_id)
                ok.append(outcome)
            else:
                result.failed.append((outcome.frame_id, outcome.error or ""))
        return ok

    # Stufe 1: LULC-Verfeinerung

    def refine_lulc(self) -> StageResult:
        """
        Verfeinert die groben LULC-Logits mit dem Dense CRF am Luftbild.

        Ohne CRF (``crf.enabled = false``) wird der Argmax der Logits
        übernommen und die Log-Softmax als Log-Randverteilung geschrieben.
        """
        crf = self.config.crf
        names = ["logits"]
        if crf.enabled:
            names.append("imagery")
            if crf.use_elevation:
                names.append("dem")
        files = self.factory.require_paths(*names)
        params = {"crf": crf.model_dump(mode="json")}

        def body(result: StageResult) -> list[Path]:
            logits = read_logits(files["logits"])
            if crf.enabled:
                elevation = read_raster(files["dem"]) if crf.use_elevation else None
                labels, log_marginals = refine_lulc_with_marginals(
                    logits,
                    read_raster(files["imagery"]),
                    self.factory.crf_params(),
                    mode=crf.mode,
                    elevation=elevation,
                    standardize=crf.standardize,
                )
            else:
                labels = argmax_labels(logits)
                log_q = log_softmax(logits.data.astype(np.float64), axis=0).astype(np.float32)
                log_marginals = logits.with_data(log_q, nodata=None)
            refined_path = self.output_dir / REFINED_LULC
            marginals_path = self.output_dir / LOG_MARGINALS
            self.raster_repository.save(labels, refined_path)
            self.raster_repository.save(log_marginals, marginals_path)
            save_label_png(labels.band(0), refined_path.with_suffix(".png"))
            result.succeeded.append("lulc")
            return [refined_path, marginals_path, refined_path.with_suffix(".png")]

        return self._run_stage("refine_lulc", files, params, body)

    # Stufe 2: Rendern

    def _lulc_source(self) -> Path:
        if self.config.render.lulc_source == "input":
            return self.factory.require_paths("lulc")["lulc"]
        path = self.output_dir / REFINED_LULC
        if not path.exists():
            raise DataError(
                f"{path} fehlt; zuerst 'refine-lulc' ausführen oder render.lulc_source = 'input' setzen",
            )
        return path

    def _pose_crs(self) -> Crs | None:
        crs = self.config.crs
        return Crs.utm(crs.zone, crs.hemisphere) if crs.zone else None

    def render(self) -> StageResult:
        """Rendert projizierte Labels für jedes Bild, dessen Zeitstempel im Posenlog liegt."""
        elevation_name = self.config.render.elevation
        files = self.factory.require_paths(elevation_name, "poses", "frames")
        files = {
            elevation_name: files[elevation_name],
            "poses": files["poses"],
            "frames": frame_index_path(files["frames"]),
            "lulc": self._lulc_source(),
        }
        params = {
            "render": self.config.render.model_dump(mode="json"),
            "camera": self.config.camera.model_dump(mode="json") if self.config.camera else None,
            "crs": self.config.crs.model_dump(mode="json"),
        }

        def body(result: StageResult) -> list[Path]:
            intrinsics = self.factory.intrinsics()
            log = read_pose_log(files["poses"], self._pose_crs(), self.factory.body_to_camera())
            processor = FrameProcessor(
                read_raster(files["lulc"]),
                read_raster(files[elevation_name]),
                intrinsics,
                self.factory.render_settings(),
            )
            tasks = []
            for record in read_frame_index(files["frames"]):
                if not log.covers(record.timestamp):
                    logger.warning(
                        f"Bild {record.frame_id}: Zeitstempel {record.timestamp} außerhalb des Posenlogs "
                        f"{log.span}, übersprungen",
                    )
                    result.skipped.append(record.frame_id)
                    continue
                tasks.append((record.frame_id, log.at(record.timestamp)))

            outcomes = self._collect(result, map_frames(render_frame, processor, tasks, self.config.workers))
            if not outcomes:
                raise DataError("Keine renderbaren Bilder")
            directory = self._fresh_dir("projected")
            outputs = []
            for outcome in outcomes:
                outputs += self._write_labels(outcome.projected, directory / f"{outcome.frame_id}.tif")
            return outputs

        return self._run_stage("render", files, params, body)

    # Stufe 3: Maskenverfeinerung

    def refine_labels(self) -> StageResult:
        """Verfeinert die projizierten Labels mit dem konfigurierten Masken-Provider."""
        index = frame_index_path(self.factory.require_paths("frames")["frames"])
        records = read_frame_index(index)
        projected_dir = self.output_dir / "projected"
        records = [r for r in records if (projected_dir / f"{r.frame_id}.tif").exists()]
        if not records:
            raise DataError(f"Keine projizierten Labels in {projected_dir}; zuerst 'render' ausführen")

        provider = self.factory.mask_provider()
        masks = self.config.masks
        files: dict[str, Path] = {"frames": index}
        for record in records:
            files[f"projected/{record.frame_id}"] = projected_dir / f"{record.frame_id}.tif"
            if provider is not None:
                if record.image is None or not record.image.exists():
                    raise DataError(f"Bild {record.frame_id}: Kamerabild fehlt ({record.image})")
                files[f"image/{record.frame_id}"] = record.image
        if masks.provider == ProviderKind.MASKS:
            for record in records:
                mask_file = self.config.paths.masks / f"{record.frame_id}.json"
                if mask_file.exists():
                    files[f"masks/{record.frame_id}"] = mask_file
        params = {
            "provider": provider.describe() if provider else {"kind": "none"},
            "fallback": str(masks.fallback),
            "preprocess_thermal": masks.preprocess_thermal,
        }

        def body(result: StageResult) -> list[Path]:
            refiner = FrameRefiner(provider, masks.fallback, masks.preprocess_thermal)
            tasks = []
            for record in records:
                projected_path = projected_dir / f"{record.frame_id}.tif"
                projected = read_raster(projected_path, require_georef=False).band(0)
                image = None
                if provider is not None:
                    image = read_raster(record.image, require_georef=False).band(0)
                tasks.append((record.frame_id, projected, image))
            outcomes = self._collect(result, map_frames(refine_frame, refiner, tasks, self.config.workers))
            if not outcomes:
                raise DataError("Kein Bild konnte verfeinert werden")
            directory = self._fresh_dir("labels")
            outputs = []
            for outcome in outcomes:
                outputs += self._write_labels(outcome.refined, directory / f"{outcome.frame_id}.tif")
            return outputs

        return self._run_stage("refine_labels", files, params, body)

    # Stufe 4: Auswertung

    def evaluate(self) -> StageResult:
        """
        Vergleicht Labels mit der Ground Truth je Klassensatz.

        Schreibt ``metrics/per_class_iou.csv`` (IoU je Klasse und Trajektorie,
        Trajektorie ``dataset`` für die Gesamtsumme) und ``metrics/summary.csv``
        mit Dataset- und Trajektorien-mIoU.
        """
        paths = self.factory.require_paths("ground_truth", "frames")
        evaluation = self.config.evaluation
        pred_dir = self.output_dir / evaluation.stage
        index = frame_index_path(paths["frames"])
        files: dict[str, Path] = {"frames": index}
        records = []
        for record in read_frame_index(index):
            pred = pred_dir / f"{record.frame_id}.tif"
            gt = paths["ground_truth"] / f"{record.frame_id}.tif"
            if not pred.exists() or not gt.exists():
                logger.warning(f"Bild {record.frame_id}: Vorhersage oder Ground Truth fehlt, übersprungen")
                continue
            files[f"pred/{record.frame_id}"] = pred
            files[f"gt/{record.frame_id}"] = gt
            records.append(record)
        if not records:
            raise DataError(f"Keine auswertbaren Bilder in {pred_dir}")
        class_maps = self.factory.class_maps()
        params = {
            "stage": evaluation.stage,
            "trajectory_mode": str(evaluation.trajectory_mode),
            "class_maps": {
                name: {
                    "mapping": cm.mapping,
                    "ignore": sorted(cm.ignore),
                    "target_names": list(cm.target_names),
                }
                for name, cm in class_maps.items()
            },
        }

        def body(result: StageResult) -> list[Path]:
            cms: dict[str, dict[str, list]] = {name: defaultdict(list) for name in class_maps}
            for record in records:
                pred = read_raster(files[f"pred/{record.frame_id}"], require_georef=False).band(0)
                gt = read_raster(files[f"gt/{record.frame_id}"], require_georef=False).band(0)
                for name, class_map in class_maps.items():
                    mapped_pred, mapped_gt = apply_class_map(pred, class_map), apply_class_map(gt, class_map)
                    cm = confusion(mapped_pred, mapped_gt, class_map.num_targets)
                    cms[name][record.trajectory].append(cm)
                result.succeeded.append(record.frame_id)

            per_class_rows, summary_rows = [], []
            for name, class_map in class_maps.items():
                groups = dict(cms[name])
                dataset_miou, trajectory_miou = trajectory_average(groups, evaluation.trajectory_mode)
                summed = {traj: sum(group[1:], group[0]) for traj, group in sorted(groups.items())}
                totals = list(summed.values())
                summed["dataset"] = sum(totals[1:], totals[0])
                names = class_map.target_names or tuple(str(i) for i in range(class_map.num_targets))
                for trajectory, cm in summed.items():
                    for class_id, iou in enumerate(per_class_iou(cm)):
                        per_class_rows.append(
                            {
                                "class_set": name,
                                "trajectory": trajectory,
                                "class_id": class_id,
                                "class_name": names[class_id],
                                "iou": iou,
                            },
                        )
                summary_rows.append(
                    {
                        "class_set": name,
                        "frames": sum(len(group) for group in groups.values()),
                        "trajectories": len(groups),
                        "dataset_miou": dataset_miou,
                        "trajectory_avg_miou": trajectory_miou,
                    },
                )

            directory = self._fresh_dir("metrics")
            per_class_path, summary_path = directory / "per_class_iou.csv", directory / "summary.csv"
            pd.DataFrame(per_class_rows).to_csv(per_class_path, index=False)
            result.table = pd.DataFrame(summary_rows)
            result.table.to_csv(summary_path, index=False)
            return [per_class_path, summary_path]

        return self._run_stage("evaluate", files, params, body)

    # Tuning

    def tune(self) -> StageResult:
        """Sucht CRF-Parameter, die den Abstand zur Referenz-LULC minimieren."""
        files = self.factory.require_paths("logits", "imagery", "reference")
        tune_cfg = self.config.tune
        crf = self.config.crf
        params = {
            "tune": tune_cfg.model_dump(mode="json"),
            "seed": self.config.seed,
            "num_iterations": crf.num_iterations,
            "mode": str(crf.mode),
            "standardize": crf.standardize,
        }

        def body(result: StageResult) -> list[Path]:
            logits = read_logits(files["logits"])
            image = read_raster(files["imagery"])
            reference = resample_like(read_raster(files["reference"]), image, ResampleMethod.NEAREST)
            boundary = self.factory.boundary_config()

            def objective(values: dict[str, float]) -> float:
                crf_params = crf_params_from_trial(values, crf.num_iterations)
                labels, log_q = refine_lulc_with_marginals(
                    logits, image, crf_params, mode=crf.mode, standardize=crf.standardize,
                )
                if tune_cfg.objective == "boundary":
                    return boundary_loss(labels, reference, boundary)
                q = np.exp(np.moveaxis(log_q.data.astype(np.float64), 0, -1))
                return weighted_cross_entropy(MarginalField(q), reference)

            directory = self._fresh_dir("tune")
            log_path = directory / "trials.jsonl"
            outcome = tune(
                self.factory.search_space(image.bands),
                objective,
                tune_cfg.strategy,
                tune_cfg.width,
                log_path,
            )
            best_path, csv_path = directory / "best_params.json", directory / "trials.csv"
            best = crf_params_from_trial(outcome.best_params, crf.num_iterations)
            with open(best_path, "w", encoding="utf-8") as file:
                json.dump(
                    {
                        "score": outcome.best_score,
                        "params": outcome.best_params,
                        "crf": {
                            "w1": best.w1,
                            "w2": best.w2,
                            "theta_alpha": best.theta_alpha,
                            "theta_gamma": best.theta_gamma,
                            "theta_beta": list(best.theta_beta),
                            "num_iterations": best.num_iterations,
                        },
                    },
                    file,
                    indent=2,
                    sort_keys=True,
                )
            result.table = outcome.to_frame()
            result.table.to_csv(csv_path, index=False)
            result.succeeded = [str(t.trial_id) for t in outcome.trials if t.score is not None]
            result.failed = [(str(t.trial_id), t.error or "") for t in outcome.trials if t.score is None]
            return [log_path, best_path, csv_path]

        return self._run_stage("tune", files, params, body)

    # Synthetische Szenen

    def _synth_inputs(self):
        s = self.config.synth
        synth_config = SynthConfig(size=s.size, coarse_resolution=s.coarse_resolution)
        scene = generate_scene(synth_config, self.config.seed)
        options: dict[str, Any] = {
            "frames": s.frames,
            "altitude": tuple(s.altitude),
            "pitch_deg": s.pitch_deg,
        }
        if self.config.camera is not None:
            options["intrinsics"] = self.factory.intrinsics()
        return scene, make_trajectory(scene, TrajectoryConfig(**options), name="traj")

    def ablate(self) -> StageResult:
        """Führt die konfigurierte Ablation auf einer synthetischen Szene aus."""
        ablate = self.config.ablate
        params = {
            "ablate": ablate.model_dump(mode="json"),
            "synth": self.config.synth.model_dump(mode="json"),
            "render": self.config.render.model_dump(mode="json"),
            "masks": self.config.masks.model_dump(mode="json"),
            "crf": self.config.crf.model_dump(mode="json"),
            "camera": self.config.camera.model_dump(mode="json") if self.config.camera else None,
            "seed": self.config.seed,
        }

        def body(result: StageResult) -> list[Path]:
            scene, trajectory = self._synth_inputs()
            settings = self.factory.render_settings()
            surface = self.config.render.elevation
            if self.config.masks.provider == ProviderKind.MASKS:
                capture_surface = "dsm" if ablate.kind == "elevation" else surface
                provider = truth_mask_provider(capture_frames(scene, trajectory, settings, capture_surface))
            else:
                provider = self.factory.mask_provider()
            cfg = AblationConfig(
                settings=settings,
                provider=provider,
                fallback=self.config.masks.fallback,
                class_sets=tuple(ablate.class_sets),
                surface=surface,
                crf=self.factory.crf_params() if self.config.crf.enabled else None,
                workers=self.config.workers,
            )
            if ablate.kind == "pose":
                levels = []
                for axis in ablate.axes:
                    sigmas = ablate.attitude_sigmas if axis == "attitude" else ablate.position_sigmas
                    levels += noise_grid(axis, sigmas, ablate.trials, self.config.seed)
                table = run_pose_ablation(scene, trajectory, levels, cfg)
            elif ablate.kind == "resolution":
                table = run_resolution_ablation(scene, trajectory, ablate.resolutions, cfg)
            elif ablate.kind == "timing":
                table = run_timing_ablation(scene, trajectory, ablate.offsets_s, cfg)
            else:
                table = run_elevation_ablation(scene, trajectory, ablate.sources, cfg)

            directory = self.output_dir / "ablation"
            directory.mkdir(parents=True, exist_ok=True)
            csv_path, plot_path = directory / f"{ablate.kind}.csv", directory / f"{ablate.kind}.png"
            table.to_csv(csv_path, index=False)
            plot_ablation(table, plot_path)
            result.table = table
            result.succeeded = [f"{len(table)} Zeilen"]
            return [csv_path, plot_path]

        return self._run_stage(f"ablate_{ablate.kind}", {}, params, body)

    def synth(self) -> StageResult:
        """
        Schreibt einen vollständigen synthetischen Datensatz samt Konfiguration.

        Inhalt: Raster der Szene, Posenlog, Thermalbilder mit Bildindex,
        Ground-Truth-Labels je Bild, Maskensätze der wahren Segmente und
        ``config.json``, die direkt mit allen Stufen verwendbar ist.
        """
        params = {
            "synth": self.config.synth.model_dump(mode="json"),
            "render": self.config.render.model_dump(mode="json"),
            "camera": self.config.camera.model_dump(mode="json") if self.config.camera else None,
            "seed": self.config.seed,
        }

        def body(result: StageResult) -> list[Path]:
            scene, trajectory = self._synth_inputs()
            settings = self.factory.render_settings()
            frames = capture_frames(scene, trajectory, settings, self.config.render.elevation)
            outputs = list(write_scene(scene, [trajectory], self.output_dir).values())

            frames_dir = self._fresh_dir("frames")
            truth_dir = self._fresh_dir("ground_truth")
            masks_dir = self._fresh_dir("masks")
            records = []
            for frame in frames:
                image_path = frames_dir / f"{frame.frame_id}.tif"
                truth_path = truth_dir / f"{frame.frame_id}.tif"
                mask_path = masks_dir / f"{frame.frame_id}.json"
                self.raster_repository.save(_pixel_raster(frame.image), image_path)
                self.raster_repository.save(_pixel_raster(frame.truth, UNKNOWN_LABEL), truth_path)
                self.mask_repository.save(truth_segments(frame.truth), mask_path)
                records.append(FrameRecord(frame.frame_id, frame.timestamp, trajectory.name, image_path))
                result.succeeded.append(frame.frame_id)
                outputs += [image_path, truth_path, mask_path]
            write_frame_index(records, frames_dir / FRAME_INDEX)

            config_path = self.output_dir / "config.json"
            with open(config_path, "w", encoding="utf-8") as file:
                dataset_config = self._synth_config(scene.crs, trajectory.intrinsics)
                json.dump(dataset_config, file, indent=2, sort_keys=True)
            return [*outputs, frames_dir / FRAME_INDEX, config_path]

        return self._run_stage("synth", {}, params, body)

    def _synth_config(self, crs: Crs, intrinsics: CameraIntrinsics) -> dict[str, Any]:
        """Pipelinekonfiguration für einen synthetischen Datensatz (Pfade relativ)."""
        return {
            "paths": {
                "lulc": "lulc_coarse.tif",
                "logits": "logits.tif",
                "dem": "dem.tif",
                "dsm": "dsm.tif",
                "imagery": "imagery.tif",
                "reference": "lulc_fine.tif",
                "poses": "poses_traj.csv",
                "frames": f"frames/{FRAME_INDEX}",
                "masks": "masks",
                "ground_truth": "ground_truth",
                "output_dir": "output",
            },
            "crs": {"zone": crs.zone, "hemisphere": crs.hemisphere},
            "camera": {
                "fx": intrinsics.fx,
                "fy": intrinsics.fy,
                "cx": intrinsics.cx,
                "cy": intrinsics.cy,
                "width": intrinsics.width,
                "height": intrinsics.height,
            },
            "render": self.config.render.model_dump(mode="json"),
            "evaluation": {"class_sets": ["synth4", "synth3"]},
            "seed": self.config.seed,
        }
