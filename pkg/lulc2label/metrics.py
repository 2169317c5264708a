"""
Auswertung: Konfusionsmatrizen, IoU je Klasse, mIoU über Datensatz und Trajektorien.

Pixel mit IGNORE_LABEL in der Ground Truth werden nicht gezählt. Fehlt nur die
Vorhersage, zählt das Pixel als Fehler der Ground-Truth-Klasse. Klassen ohne
Vereinigungsmenge (weder in Ground Truth noch in der Vorhersage vorhanden)
gehen nicht in den Mittelwert ein.
"""

import logging
from collections.abc import Mapping, Sequence
from enum import StrEnum

import numpy as np

from .config import CM3_CLASSES, CM5_CLASSES, CM6_CLASSES, IGNORE_LABEL, LABEL_DTYPE, SYNTH_CLASSES
from .errors import DataError, NumericalError
from .models import ClassMap, ConfusionMatrix

logger = logging.getLogger(__name__)


class TrajectoryMode(StrEnum):
    """Wie die mIoU einer einzelnen Trajektorie gebildet wird."""

    SUMMED = "summed"  # mIoU der summierten Konfusionsmatrix
    PER_IMAGE = "per_image"  # Mittel der mIoU je Bild


def apply_class_map(labels: np.ndarray, class_map: ClassMap) -> np.ndarray:
    """
    Bildet Quell-IDs auf Ziel-IDs ab; ignorierte IDs und IGNORE_LABEL werden zu IGNORE_LABEL.

    Raises:
        DataError: Wenn das Bild eine weder abgebildete noch ignorierte ID enthält
    """
    labels = np.asarray(labels)
    if labels.dtype.kind not in "ui":
        raise DataError(f"Labelbild muss ganzzahlig sein, erhalten: {labels.dtype}")
    lut = np.full(256, -1, dtype=np.int16)
    for source, target in class_map.mapping.items():
        if 0 <= source < 256:
            lut[source] = target
    for ignored in class_map.ignore:
        if 0 <= ignored < 256:
            lut[ignored] = IGNORE_LABEL
    lut[IGNORE_LABEL] = IGNORE_LABEL

    out_of_range = (labels < 0) | (labels > 255)
    if out_of_range.any():
        raise DataError(f"Klassenabbildung '{class_map.name}': IDs außerhalb 0..255: {np.unique(labels[out_of_range])}")
    mapped = lut[labels.astype(np.int64)]
    unmapped = mapped < 0
    if unmapped.any():
        ids = sorted(int(i) for i in np.unique(labels[unmapped]))
        raise DataError(f"Klassenabbildung '{class_map.name}': nicht abgebildete IDs {ids}")
    return mapped.astype(LABEL_DTYPE)


def accumulate(cm: ConfusionMatrix, pred: np.ndarray, gt: np.ndarray) -> ConfusionMatrix:
    """
    Addiert die Pixelpaare (gt, pred) eines Bildes zur Konfusionsmatrix.

    Pixel mit gültiger Ground Truth, aber ohne Vorhersage (IGNORE_LABEL),
    zählen als Fehlklassifikation der Ground-Truth-Klasse.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise DataError(f"Vorhersage {pred.shape} und Ground Truth {gt.shape} haben verschiedene Formen")
    num_classes = cm.num_classes
    labeled_gt = gt != IGNORE_LABEL
    valid = labeled_gt & (pred != IGNORE_LABEL)
    missing = gt[labeled_gt & (pred == IGNORE_LABEL)].astype(np.int64)
    g = gt[valid].astype(np.int64)
    p = pred[valid].astype(np.int64)
    if g.size and (g.max() >= num_classes or p.max() >= num_classes or min(g.min(), p.min()) < 0):
        raise DataError(f"Label außerhalb 0..{num_classes - 1} (oder {IGNORE_LABEL})")
    if missing.size and (missing.max() >= num_classes or missing.min() < 0):
        raise DataError(f"Label außerhalb 0..{num_classes - 1} (oder {IGNORE_LABEL})")
    counts = np.bincount(g * num_classes + p, minlength=num_classes * num_classes)
    unlabeled = np.bincount(missing, minlength=num_classes)
    return cm + ConfusionMatrix(counts.reshape(num_classes, num_classes), unlabeled)


def confusion(pred: np.ndarray, gt: np.ndarray, num_classes: int) -> ConfusionMatrix:
    return accumulate(ConfusionMatrix.zeros(num_classes), pred, gt)


def per_class_iou(cm: ConfusionMatrix) -> np.ndarray:
    """IoU je Klasse; NaN für Klassen ohne Vereinigungsmenge."""
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    union = counts.sum(axis=1) + cm.unlabeled + counts.sum(axis=0) - tp
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(union > 0, tp / np.where(union > 0, union, 1.0), np.nan)


def miou(cm: ConfusionMatrix) -> tuple[list[float], float]:
    """
    IoU je Klasse und deren Mittel.

    Returns:
        (IoU je Klasse mit NaN für ausgeschlossene Klassen, mIoU)

    Raises:
        NumericalError: Wenn die Konfusionsmatrix leer ist
    """
    if cm.total == 0:
        raise NumericalError("mIoU einer leeren Konfusionsmatrix ist undefiniert")
    iou = per_class_iou(cm)
    return [float(v) for v in iou], float(np.nanmean(iou))


def trajectory_average(
    trajectories: Mapping[str, Sequence[ConfusionMatrix]],
    mode: TrajectoryMode | str = TrajectoryMode.SUMMED,
) -> tuple[float, float]:
    """
    Datensatz-mIoU und über Trajektorien gemittelte mIoU.

    Args:
        trajectories: Konfusionsmatrizen je Bild, gruppiert nach Trajektorie
        mode: Bildung der mIoU einer Trajektorie

    Returns:
        (mIoU der Gesamtsumme, ungewichtetes Mittel der Trajektorien-mIoU)
    """
    mode = TrajectoryMode(mode)
    if not trajectories:
        raise DataError("Mindestens eine Trajektorie erforderlich")

    per_trajectory: list[float] = []
    total: ConfusionMatrix | None = None
    for name in sorted(trajectories):
        cms = list(trajectories[name])
        if not cms:
            raise DataError(f"Trajektorie '{name}' enthält keine Bilder")
        summed = sum(cms[1:], cms[0])
        total = summed if total is None else total + summed
        if mode == TrajectoryMode.SUMMED:
            per_trajectory.append(miou(summed)[1])
        else:
            per_trajectory.append(float(np.mean([miou(cm)[1] for cm in cms if cm.total > 0])))
        logger.debug(f"Trajektorie {name}: mIoU {per_trajectory[-1]:.4f} aus {len(cms)} Bildern")

    return miou(total)[1], float(np.mean(per_trajectory))


def _collapse(name: str, source: Sequence[str], target: Sequence[str], groups: Mapping[str, str]) -> ClassMap:
    mapping = {i: target.index(groups.get(cls, cls)) for i, cls in enumerate(source)}
    return ClassMap(name, mapping, frozenset(), tuple(target))


def default_class_maps() -> dict[str, ClassMap]:
    """
    Mitgelieferte Klassenabbildungen.

    ``cm6``/``cm5``/``cm3`` bilden das 6-Klassen-Vokabular ab, ``synth4``/``synth3``
    das Vokabular der synthetischen Szenen. CM-5 und CM-3 sind Platzhalter
    und lassen sich über die Konfiguration ersetzen.
    """
    vegetation = {"trees": "vegetation", "low_vegetation": "vegetation"}
    land = {"trees": "land", "low_vegetation": "land", "built": "land", "ground": "land"}
    return {
        "cm6": ClassMap.identity(len(CM6_CLASSES), "cm6", CM6_CLASSES),
        "cm5": _collapse("cm5", CM6_CLASSES, CM5_CLASSES, vegetation),
        "cm3": _collapse("cm3", CM6_CLASSES, CM3_CLASSES, land),
        "synth4": ClassMap.identity(len(SYNTH_CLASSES), "synth4", SYNTH_CLASSES),
        "synth3": _collapse("synth3", SYNTH_CLASSES, ("water", "vegetation", "ground"), vegetation),
    }


def class_map_from_dict(data: Mapping, name: str | None = None) -> ClassMap:
    """Baut eine ClassMap aus ``{"name", "mapping", "ignore", "target_names"}``."""
    try:
        mapping = {int(k): int(v) for k, v in dict(data["mapping"]).items()}
    except (KeyError, TypeError, ValueError) as err:
        raise DataError(f"Klassenabbildung ohne gültiges 'mapping': {err}") from err
    return ClassMap(
        name or str(data.get("name", "custom")),
        mapping,
        frozenset(int(i) for i in data.get("ignore", ())),
        tuple(data.get("target_names", ())),
    )
