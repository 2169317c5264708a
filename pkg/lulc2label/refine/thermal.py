"""
Vorverarbeitung von 16-Bit-Thermalbildern zu 8-Bit-Bildern für die Maskenbildung.
"""

import logging

import numpy as np
from skimage import exposure
from skimage.util import img_as_ubyte

from ..config import CLAHE_CLIP_LIMIT, CLAHE_TILES, THERMAL_CONSTANT_VALUE, THERMAL_PERCENTILES
from ..errors import DataError

logger = logging.getLogger(__name__)


def _check_image(raw: np.ndarray) -> np.ndarray:
    raw = np.asarray(raw)
    if raw.ndim == 3 and raw.shape[0] == 1:
        raw = raw[0]
    if raw.ndim != 2 or raw.size == 0:
        raise DataError(f"Thermalbild muss ein nicht leeres 2D-Bild sein, erhalten: {raw.shape}")
    if raw.dtype.kind == "f" and not np.isfinite(raw).all():
        raise DataError("Thermalbild enthält NaN oder Unendlich")
    return raw


def rescale_percentiles(raw: np.ndarray, percentiles: tuple[float, float] = THERMAL_PERCENTILES) -> np.ndarray:
    """
    Schneidet auf [p_low, p_high] ab und skaliert linear auf 0..255 (uint8).

    Bei p_low == p_high (z.B. konstantes Bild) ist das Ergebnis überall 128.
    """
    raw = _check_image(raw)
    low, high = np.percentile(raw.astype(np.float64), percentiles)
    if high <= low:
        return np.full(raw.shape, THERMAL_CONSTANT_VALUE, dtype=np.uint8)
    scaled = exposure.rescale_intensity(raw.astype(np.float64), in_range=(low, high), out_range=(0.0, 255.0))
    return np.clip(np.rint(scaled), 0, 255).astype(np.uint8)


def clahe(image: np.ndarray, clip_limit: float = CLAHE_CLIP_LIMIT, tiles: int = CLAHE_TILES) -> np.ndarray:
    """Kontrastbegrenzte adaptive Histogrammequalisierung mit tiles x tiles Kacheln."""
    image = _check_image(image)
    kernel_size = (max(1, image.shape[0] // tiles), max(1, image.shape[1] // tiles))
    equalized = exposure.equalize_adapthist(image, kernel_size=kernel_size, clip_limit=clip_limit, nbins=256)
    return img_as_ubyte(np.clip(equalized, 0.0, 1.0))


def preprocess_thermal(
    raw: np.ndarray,
    percentiles: tuple[float, float] = THERMAL_PERCENTILES,
    clip_limit: float = CLAHE_CLIP_LIMIT,
    tiles: int = CLAHE_TILES,
) -> np.ndarray:
    """Perzentil-Reskalierung (2 %/98 %) gefolgt von CLAHE; Ergebnis uint8 (H, W)."""
    rescaled = rescale_percentiles(raw, percentiles)
    if (rescaled == rescaled.flat[0]).all():
        logger.debug("Thermalbild ohne Kontrast, CLAHE übersprungen")
        return rescaled
    return clahe(rescaled, clip_limit, tiles)


def to_intensity(image: np.ndarray) -> np.ndarray:
    """Einkanaliges uint8-Bild für die Superpixel-Verfahren (Mehrkanalbilder werden gemittelt)."""
    image = np.asarray(image)
    if image.ndim == 3:
        image = image.mean(axis=0) if image.shape[0] <= 4 else image.mean(axis=-1)
    if image.dtype == np.uint8:
        return image
    return rescale_percentiles(image, (0.0, 100.0))
