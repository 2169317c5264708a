"""
Maskenquellen für die Labelverfeinerung.

Jeder Provider erfüllt das Protokoll ``MaskProvider`` und liefert zu einem
einkanaligen 8-Bit-Bild einen MaskSet.
"""

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..models import MaskSet
from ..repo.mask_repo import load_masks
from .superpixels import FELZENSZWALB_MIN_SIZE, FELZENSZWALB_SIGMA, felzenszwalb, slic

logger = logging.getLogger(__name__)


class ProviderKind(StrEnum):
    NONE = "none"
    MASKS = "masks"
    SLIC = "slic"
    FELZENSZWALB = "felzenszwalb"


@dataclass(frozen=True)
class SlicProvider:
    n_segments: int = 100
    compactness: float = 10.0

    kind = ProviderKind.SLIC

    def masks_for(self, image: np.ndarray, frame_id: str) -> MaskSet:
        return slic(image, self.n_segments, self.compactness)

    def describe(self) -> dict:
        return {"provider": self.kind.value, "n_segments": self.n_segments, "compactness": self.compactness}


@dataclass(frozen=True)
class FelzenszwalbProvider:
    scale: float = 1e4
    sigma: float = FELZENSZWALB_SIGMA
    min_size: int = FELZENSZWALB_MIN_SIZE

    kind = ProviderKind.FELZENSZWALB

    def masks_for(self, image: np.ndarray, frame_id: str) -> MaskSet:
        return felzenszwalb(image, self.scale, self.sigma, self.min_size)

    def describe(self) -> dict:
        return {"provider": self.kind.value, "scale": self.scale, "sigma": self.sigma, "min_size": self.min_size}


@dataclass(frozen=True)
class ExternalMaskProvider:
    """Liest extern erzeugte Masken ``<directory>/<frame_id>.json``."""

    directory: Path

    kind = ProviderKind.MASKS

    def masks_for(self, image: np.ndarray, frame_id: str) -> MaskSet:
        path = Path(self.directory) / f"{frame_id}.json"
        if not path.exists():
            raise DataError(f"Keine Masken für Bild {frame_id}: {path}")
        masks = load_masks(path)
        if (masks.height, masks.width) != np.asarray(image).shape[:2]:
            raise DataError(f"{path}: Maskengröße {masks.height}x{masks.width} passt nicht zum Bild")
        return masks

    def describe(self) -> dict:
        return {"provider": self.kind.value, "directory": str(self.directory)}


@dataclass(frozen=True)
class StaticMaskProvider:
    """Vorab berechnete Masken je Bild-ID (z.B. aus Ground-Truth-Segmenten)."""

    masks: Mapping[str, MaskSet] = field(default_factory=dict)
    source: str = "static"

    kind = ProviderKind.MASKS

    def masks_for(self, image: np.ndarray, frame_id: str) -> MaskSet:
        if frame_id not in self.masks:
            raise DataError(f"Keine Masken für Bild {frame_id}")
        return self.masks[frame_id]

    def describe(self) -> dict:
        return {"provider": self.kind.value, "source": self.source}
