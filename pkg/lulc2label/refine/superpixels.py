"""
Klassische Maskenquellen: SLIC-Superpixel und Felzenszwalb-Segmente.

Beide Verfahren arbeiten auf einem einkanaligen 8-Bit-Bild und liefern eine
Partition des Bildes als MaskSet.
"""

import logging

import numpy as np
from skimage import segmentation

from ..errors import DataError
from ..models import MaskSet

logger = logging.getLogger(__name__)

SLIC_ITERATIONS = 10
FELZENSZWALB_SIGMA = 0.8
FELZENSZWALB_MIN_SIZE = 20


def _intensity(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2 or img.size == 0:
        raise DataError(f"Superpixel erwarten ein einkanaliges 2D-Bild, erhalten: {img.shape}")
    return img


def slic(img: np.ndarray, n_segments: int = 100, compactness: float = 10.0) -> MaskSet:
    """
    SLIC-Superpixel auf Intensitäten im Bereich 0..255.

    Das Bild wird als Gleitkomma im Originalbereich übergeben, damit die
    Kompaktheit im selben Maßstab wie die Intensitätsdifferenzen wirkt.
    """
    img = _intensity(img)
    if n_segments < 1:
        raise DataError(f"n_segments muss >= 1 sein: {n_segments}")
    if n_segments > img.size:
        raise DataError(f"n_segments ({n_segments}) größer als Pixelanzahl ({img.size})")
    if compactness <= 0:
        raise DataError(f"compactness muss > 0 sein: {compactness}")
    if n_segments == 1:
        return MaskSet.from_label_image(np.zeros(img.shape, dtype=np.int64), source="slic")

    segments = segmentation.slic(
        img.astype(np.float64),
        n_segments=n_segments,
        compactness=compactness,
        max_num_iter=SLIC_ITERATIONS,
        channel_axis=None,
        start_label=0,
        enforce_connectivity=True,
    )
    logger.debug(f"SLIC: {segments.max() + 1} Segmente (angefordert {n_segments})")
    return MaskSet.from_label_image(segments, source="slic")


def felzenszwalb(
    img: np.ndarray,
    scale: float = 1e4,
    sigma: float = FELZENSZWALB_SIGMA,
    min_size: int = FELZENSZWALB_MIN_SIZE,
) -> MaskSet:
    """Graphbasierte Segmentierung (8er-Nachbarschaft, Schwelle scale/|C|)."""
    img = _intensity(img)
    if scale <= 0:
        raise DataError(f"scale muss > 0 sein: {scale}")
    segments = segmentation.felzenszwalb(img, scale=scale, sigma=sigma, min_size=min_size, channel_axis=None)
    logger.debug(f"Felzenszwalb: {segments.max() + 1} Segmente")
    return MaskSet.from_label_image(segments, source="felzenszwalb")
