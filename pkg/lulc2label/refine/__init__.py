from typing import Protocol

import numpy as np

from ..models import MaskSet
from .masks import Fallback, mask_mode, refine
from .providers import ExternalMaskProvider, FelzenszwalbProvider, ProviderKind, SlicProvider, StaticMaskProvider
from .superpixels import felzenszwalb, slic
from .thermal import clahe, preprocess_thermal, rescale_percentiles, to_intensity


class MaskProvider(Protocol):
    """Liefert Masken zu einem einkanaligen 8-Bit-Bild."""

    def masks_for(self, image: np.ndarray, frame_id: str) -> MaskSet: ...

    def describe(self) -> dict: ...


__all__ = [
    "ExternalMaskProvider",
    "Fallback",
    "FelzenszwalbProvider",
    "MaskProvider",
    "ProviderKind",
    "SlicProvider",
    "StaticMaskProvider",
    "clahe",
    "felzenszwalb",
    "mask_mode",
    "preprocess_thermal",
    "refine",
    "rescale_percentiles",
    "slic",
    "to_intensity",
]
