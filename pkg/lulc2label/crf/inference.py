"""
Mean-Field-Inferenz für das vollverbundene CRF mit zwei Kernen.

Erscheinungskern:  w1 * exp(-|p_i - p_j|^2 / 2θα^2 - Σ_c (I_ic - I_jc)^2 / 2θβ_c^2)
Glättungskern:     w2 * exp(-|p_i - p_j|^2 / 2θγ^2)

p sind Pixelkoordinaten (Spalte, Zeile), optional ergänzt um die Höhe in
Pixeleinheiten. Die Konditionierungsbänder werden standardmäßig je Band auf
Mittelwert 0 und Varianz 1 gebracht, bevor durch θβ geteilt wird.
"""

import logging
from enum import StrEnum

import numpy as np
from scipy.special import log_softmax, softmax

from ..config import LABEL_DTYPE
from ..errors import DataError, NumericalError
from ..geo.warp import ResampleMethod, resample_like
from ..models import CompatibilityMatrix, CrfParams, MarginalField, Raster
from .bruteforce import gaussian_filter_bruteforce
from .permutohedral import PermutohedralLattice

logger = logging.getLogger(__name__)

_NORMALIZATION_TOL = 1e-6
_Q_FLOOR = np.finfo(np.float64).tiny


class InferenceMode(StrEnum):
    EXACT = "exact"
    LATTICE = "lattice"


def softmax_bands(raster: Raster) -> Raster:
    """Softmax über die Bänder; jedes Pixel summiert danach zu 1."""
    data = softmax(raster.data.astype(np.float64), axis=0)
    return raster.with_data(data.astype(raster.dtype if raster.dtype.kind == "f" else np.float64), nodata=None)


def _floored_softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Softmax, deren Einträge nie exakt 0 werden; log(Q) bleibt dadurch endlich."""
    q = softmax(x, axis=axis)
    np.maximum(q, _Q_FLOOR, out=q)
    return q / q.sum(axis=axis, keepdims=True)


def argmax_labels(logits: Raster) -> Raster:
    """Labelraster aus dem Argmax der Bänder (ohne CRF)."""
    labels = np.argmax(logits.data, axis=0).astype(LABEL_DTYPE)
    return Raster(labels, logits.transform, logits.crs, None)


def _standardize(image: np.ndarray) -> np.ndarray:
    mean = image.mean(axis=(1, 2), keepdims=True)
    std = image.std(axis=(1, 2), keepdims=True)
    return np.where(std > 0, (image - mean) / np.where(std > 0, std, 1.0), 0.0)


def crf_features(
    cond_image: Raster,
    params: CrfParams,
    elevation: Raster | None = None,
    standardize: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Merkmale in Einheitsbandbreite für beide Kerne.

    Returns:
        (appearance (H, W, 2[+1]+C), smoothness (H, W, 2[+1]))
    """
    params.check_bands(cond_image.bands)
    height, width = cond_image.height, cond_image.width
    rows, cols = np.meshgrid(np.arange(height, dtype=np.float64), np.arange(width, dtype=np.float64), indexing="ij")
    spatial = [cols, rows]
    if elevation is not None:
        if elevation.data.shape[1:] != (height, width):
            raise DataError(f"Höhenraster {elevation.data.shape[1:]} passt nicht zum Bild {(height, width)}")
        if elevation.nodata is not None and elevation.nodata_mask().any():
            raise DataError("Höhenraster enthält Nodata im Konditionierungsbereich")
        spatial.append(elevation.band(0).astype(np.float64) / cond_image.transform.resolution)
    spatial = np.stack(spatial, axis=-1)

    image = cond_image.data.astype(np.float64)
    if standardize:
        image = _standardize(image)
    intensities = np.moveaxis(image, 0, -1) / np.asarray(params.theta_beta)

    appearance = np.concatenate([spatial / params.theta_alpha, intensities], axis=-1)
    smoothness = spatial / params.theta_gamma
    return appearance, smoothness


class _Kernel:
    """Filter ohne Selbstterm für eine feste Merkmalsmenge."""

    def __init__(self, features: np.ndarray, mode: InferenceMode):
        self.shape = features.shape[:-1]
        self.mode = mode
        if mode == InferenceMode.EXACT:
            self.features = features
            self.lattice = None
        else:
            self.features = None
            self.lattice = PermutohedralLattice(features.reshape(-1, features.shape[-1]))

    def __call__(self, q: np.ndarray) -> np.ndarray:
        if self.lattice is None:
            return gaussian_filter_bruteforce(q, self.features)
        flat = q.reshape(-1, q.shape[-1])
        return (self.lattice.filter(flat) - flat).reshape(q.shape)


def mean_field_infer(
    unary_logits: Raster,
    cond_image: Raster,
    params: CrfParams,
    mu: CompatibilityMatrix | None = None,
    mode: InferenceMode | str = InferenceMode.LATTICE,
    elevation: Raster | None = None,
    standardize: bool = True,
) -> MarginalField:
    """
    Mean-Field-Inferenz; liefert die Randverteilungen Q (H, W, L).

    Q0 = softmax(logits); danach je Iteration
    Q(l) ∝ exp(logits(l) - Σ_l' mu(l, l') * (w1 * K_app Q(l') + w2 * K_smooth Q(l'))).
    """
    mode = InferenceMode(mode)
    if unary_logits.data.shape[1:] != cond_image.data.shape[1:]:
        raise DataError(
            f"Logits {unary_logits.data.shape[1:]} und Konditionierungsbild {cond_image.data.shape[1:]} "
            f"sind nicht ausgerichtet",
        )
    if unary_logits.transform != cond_image.transform or unary_logits.crs != cond_image.crs:
        raise DataError("Logits und Konditionierungsbild haben verschiedene Georeferenz")
    logits = np.moveaxis(unary_logits.data.astype(np.float64), 0, -1)
    if not np.isfinite(logits).all():
        raise DataError("Logits enthalten NaN oder Unendlich")
    if not np.isfinite(cond_image.data.astype(np.float64)).all():
        raise DataError("Konditionierungsbild enthält NaN oder Unendlich")
    num_classes = logits.shape[-1]
    mu = mu or CompatibilityMatrix.potts(num_classes)
    if mu.num_classes != num_classes:
        raise DataError(f"Kompatibilitätsmatrix {mu.num_classes}x{mu.num_classes} für {num_classes} Klassen")

    q = _floored_softmax(logits)
    if logits.shape[0] * logits.shape[1] == 1 or (params.w1 == 0 and params.w2 == 0):
        return MarginalField(q)

    appearance, smoothness = crf_features(cond_image, params, elevation, standardize)
    kernels = []
    if params.w1 > 0:
        kernels.append((params.w1, _Kernel(appearance, mode)))
    if params.w2 > 0:
        kernels.append((params.w2, _Kernel(smoothness, mode)))

    for iteration in range(params.num_iterations):
        message = np.zeros_like(q)
        for weight, kernel in kernels:
            message += weight * kernel(q)
        q = _floored_softmax(logits - message @ mu.mu.T)
        sums = q.sum(axis=-1)
        if not np.isfinite(sums).all() or np.abs(sums - 1.0).max() > _NORMALIZATION_TOL:
            raise NumericalError(f"Randverteilungen nach Iteration {iteration + 1} nicht normiert")
        logger.debug(f"Mean-Field Iteration {iteration + 1}/{params.num_iterations} ({mode.value})")
    return MarginalField(q)


def _upsampled_logits(lulc_logits: Raster, cond_image: Raster) -> Raster:
    if lulc_logits.crs != cond_image.crs:
        raise DataError(f"Logits ({lulc_logits.crs}) und Bild ({cond_image.crs}) in verschiedenen CRS; zuerst reprojizieren")
    upsampled = resample_like(lulc_logits, cond_image, ResampleMethod.BILINEAR)
    if upsampled.nodata is not None and upsampled.nodata_mask().any():
        raise DataError("Logits decken das Konditionierungsbild nicht vollständig ab")
    return Raster(upsampled.data, cond_image.transform, cond_image.crs, None)


def refine_lulc_with_marginals(
    lulc_logits: Raster,
    cond_image: Raster,
    params: CrfParams,
    mu: CompatibilityMatrix | None = None,
    mode: InferenceMode | str = InferenceMode.LATTICE,
    elevation: Raster | None = None,
    standardize: bool = True,
) -> tuple[Raster, Raster]:
    """
    Verfeinert grobe LULC-Logits am hochaufgelösten Bild.

    Returns:
        (Labelraster, Log-Randverteilungen als float32-Raster mit L Bändern),
        beide auf dem Gitter von `cond_image`
    """
    logits = _upsampled_logits(lulc_logits, cond_image)
    if elevation is not None:
        elevation = resample_like(elevation, cond_image, ResampleMethod.BILINEAR)
    marginals = mean_field_infer(logits, cond_image, params, mu, mode, elevation, standardize)
    labels = Raster(marginals.argmax().astype(LABEL_DTYPE), cond_image.transform, cond_image.crs, None)
    log_q = log_softmax(np.log(np.maximum(marginals.q, _Q_FLOOR)), axis=-1)
    log_marginals = Raster(np.moveaxis(log_q, -1, 0).astype(np.float32), cond_image.transform, cond_image.crs, None)
    return labels, log_marginals


def refine_lulc(
    lulc_logits: Raster,
    cond_image: Raster,
    params: CrfParams,
    mu: CompatibilityMatrix | None = None,
    mode: InferenceMode | str = InferenceMode.LATTICE,
    elevation: Raster | None = None,
    standardize: bool = True,
) -> Raster:
    """Labelraster = Argmax der Mean-Field-Randverteilungen auf dem Bildgitter."""
    labels, _ = refine_lulc_with_marginals(lulc_logits, cond_image, params, mu, mode, elevation, standardize)
    return labels
