"""
Zielfunktionen für die CRF-Parametersuche.

`boundary_loss` vergleicht Klassengrenzen mit Toleranzradius (1 - Boundary-F1),
`weighted_cross_entropy` bewertet weiche Randverteilungen gegen Ground Truth.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from skimage.morphology import disk

from ..config import IGNORE_LABEL
from ..errors import DataError
from ..models import MarginalField, Raster

logger = logging.getLogger(__name__)

_LOG_CLAMP = 1e-12


@dataclass(frozen=True)
class BoundaryLossConfig:
    theta0: int = 3
    theta: int = 5

    def __post_init__(self):
        if not self.theta >= self.theta0 >= 1:
            raise DataError(f"Es muss theta >= theta0 >= 1 gelten: theta0={self.theta0}, theta={self.theta}")


def label_array(labels: Raster | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(Labels 2D, Maske gültiger Pixel) aus Raster oder Array."""
    if isinstance(labels, Raster):
        if labels.bands != 1:
            raise DataError(f"Labelraster muss einbandig sein, erhalten: {labels.bands} Bänder")
        valid = ~labels.nodata_mask() & (labels.band(0) != IGNORE_LABEL)
        return labels.band(0), valid
    labels = np.asarray(labels)
    if labels.ndim == 3 and labels.shape[0] == 1:
        labels = labels[0]
    if labels.ndim != 2:
        raise DataError(f"Labelbild muss 2D sein, erhalten: {labels.shape}")
    return labels, labels != IGNORE_LABEL


def class_boundary(mask: np.ndarray, radius: int) -> np.ndarray:
    """Morphologischer Gradient (Dilatation ohne Erosion) mit Scheibe vom Radius `radius`."""
    footprint = disk(radius).astype(bool)
    dilated = ndimage.binary_dilation(mask, structure=footprint)
    eroded = ndimage.binary_erosion(mask, structure=footprint, border_value=1)
    return dilated & ~eroded


def _matched_fraction(source: np.ndarray, target: np.ndarray, theta: float) -> float:
    distance = ndimage.distance_transform_edt(~target)
    return float((distance[source] <= theta).sum() / source.sum())


def boundary_f1_per_class(
    pred_labels: Raster | np.ndarray,
    gt_labels: Raster | np.ndarray,
    cfg: BoundaryLossConfig | None = None,
) -> dict[int, float]:
    """Boundary-F1 je Klasse; Klassen ohne Grenze in beiden Eingaben fehlen im Ergebnis."""
    cfg = cfg or BoundaryLossConfig()
    pred, pred_valid = label_array(pred_labels)
    gt, gt_valid = label_array(gt_labels)
    if pred.shape != gt.shape:
        raise DataError(f"Formen verschieden: Vorhersage {pred.shape}, Ground Truth {gt.shape}")

    classes = np.union1d(np.unique(pred[pred_valid]), np.unique(gt[gt_valid]))
    scores = {}
    for cls in classes:
        pred_boundary = class_boundary((pred == cls) & pred_valid, cfg.theta0)
        gt_boundary = class_boundary((gt == cls) & gt_valid, cfg.theta0)
        has_pred, has_gt = pred_boundary.any(), gt_boundary.any()
        if not has_pred and not has_gt:
            continue
        if not has_pred or not has_gt:
            scores[int(cls)] = 0.0
            continue
        precision = _matched_fraction(pred_boundary, gt_boundary, cfg.theta)
        recall = _matched_fraction(gt_boundary, pred_boundary, cfg.theta)
        total = precision + recall
        scores[int(cls)] = 0.0 if total == 0 else 2.0 * precision * recall / total
    return scores


def boundary_loss(
    pred_labels: Raster | np.ndarray,
    gt_labels: Raster | np.ndarray,
    cfg: BoundaryLossConfig | None = None,
) -> float:
    """
    1 - mittlerer Boundary-F1 über alle Klassen mit Grenzpixeln.

    Ohne jede Klassengrenze (z.B. zwei identische einfarbige Bilder) ist der Verlust 0.
    """
    scores = boundary_f1_per_class(pred_labels, gt_labels, cfg)
    if not scores:
        return 0.0
    return float(1.0 - np.mean(list(scores.values())))


def weighted_cross_entropy(
    pred_marginals: MarginalField,
    gt_labels: Raster | np.ndarray,
    class_weights: np.ndarray | list[float] | None = None,
) -> float:
    """Mittelwert von w_y * (-log Q(y)) über alle gelabelten Pixel."""
    q = pred_marginals.q
    gt, valid = label_array(gt_labels)
    if gt.shape != q.shape[:2]:
        raise DataError(f"Formen verschieden: Randverteilungen {q.shape[:2]}, Ground Truth {gt.shape}")
    num_classes = q.shape[-1]
    weights = np.ones(num_classes) if class_weights is None else np.asarray(class_weights, dtype=np.float64)
    if weights.shape != (num_classes,):
        raise DataError(f"{weights.size} Klassengewichte für {num_classes} Klassen")
    if (weights < 0).any():
        raise DataError(f"Klassengewichte müssen >= 0 sein: {weights}")
    if not valid.any():
        raise DataError("Ground Truth enthält keine gelabelten Pixel")
    targets = gt[valid].astype(np.int64)
    if targets.max() >= num_classes:
        raise DataError(f"Ground-Truth-Label {targets.max()} außerhalb [0, {num_classes})")

    probabilities = q[valid][np.arange(targets.size), targets]
    losses = weights[targets] * -np.log(np.maximum(probabilities, _LOG_CLAMP))
    return float(losses.mean())
