import numpy as np
from scipy.spatial.distance import cdist

from ..config import BRUTEFORCE_MAX_PIXELS
from ..errors import DataError


def gaussian_filter_bruteforce(values: np.ndarray, features: np.ndarray) -> np.ndarray:
    """
    Exakte Gauß-Filterung ohne Selbstterm.

    out_i = sum_{j != i} exp(-0.5 * |f_i - f_j|^2) * values_j

    Args:
        values: (..., L) Werte je Punkt, z.B. (H, W, L)
        features: (..., D) bereits durch die Bandbreiten geteilte Merkmale

    Returns:
        Gefilterte Werte in der Form von `values`
    """
    values = np.asarray(values, dtype=np.float64)
    features = np.asarray(features, dtype=np.float64)
    if values.shape[:-1] != features.shape[:-1]:
        raise DataError(f"Werte {values.shape} und Merkmale {features.shape} passen nicht zusammen")
    count = int(np.prod(values.shape[:-1]))
    if count > BRUTEFORCE_MAX_PIXELS:
        raise DataError(
            f"Exakte Filterung ist auf {BRUTEFORCE_MAX_PIXELS} Pixel begrenzt (64x64), erhalten {count}; "
            f"Lattice-Modus verwenden",
        )
    flat_features = features.reshape(count, -1)
    flat_values = values.reshape(count, -1)

    kernel = np.exp(-0.5 * cdist(flat_features, flat_features, "sqeuclidean"))
    np.fill_diagonal(kernel, 0.0)
    return (kernel @ flat_values).reshape(values.shape)
