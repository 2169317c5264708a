import logging
from enum import StrEnum

import numpy as np

from ..config import LABEL_DTYPE, UNLABELED
from ..errors import DataError
from ..models import MaskSet

logger = logging.getLogger(__name__)


class Fallback(StrEnum):
    """Behandlung von Pixeln, die keine Maske abdeckt."""

    KEEP_PROJECTED = "keep"
    UNLABELED = "unlabeled"


def mask_mode(values: np.ndarray) -> int:
    """Häufigste Klasse; bei Gleichstand die kleinste ID."""
    return int(np.argmax(np.bincount(values.astype(np.int64).ravel())))


def refine(
    projected: np.ndarray,
    masks: MaskSet,
    fallback: Fallback | str = Fallback.KEEP_PROJECTED,
) -> np.ndarray:
    """
    Mehrheitsentscheid je Maske über das projizierte Labelbild.

    Masken werden nach absteigender Fläche angewandt (gleich große in
    Eingabereihenfolge), spätere und damit kleinere Masken überschreiben
    größere. Der Modus wird immer auf dem projizierten Bild bestimmt.
    """
    fallback = Fallback(fallback)
    projected = np.asarray(projected)
    if projected.ndim != 2:
        raise DataError(f"Projiziertes Labelbild muss 2D sein, erhalten: {projected.shape}")
    if (masks.height, masks.width) != projected.shape:
        raise DataError(f"Masken {masks.height}x{masks.width} passen nicht zum Labelbild {projected.shape}")

    if fallback == Fallback.KEEP_PROJECTED:
        refined = projected.astype(LABEL_DTYPE, copy=True)
    else:
        refined = np.full(projected.shape, UNLABELED, dtype=LABEL_DTYPE)
    if len(masks) == 0:
        return refined

    order = np.argsort(-masks.areas(), kind="stable")
    for index in order:
        mask = masks.masks[index].decode()
        refined[mask] = mask_mode(projected[mask])
    logger.debug(f"{len(masks)} Masken angewandt ({fallback.value})")
    return refined
