"""
Gauß-Filterung hochdimensionaler Merkmale auf dem permutoedrischen Gitter.

Splat -> Blur -> Slice: Jeder Punkt wird in die d+1 Ecken seines umgebenden
Simplex verteilt (baryzentrische Gewichte), entlang der d+1 Gitterachsen mit
dem Kern (0.5, 1, 0.5) geglättet und wieder interpoliert.

Das Gitter approximiert den Gauß-Kern nur bis auf einen Faktor. Beim Aufbau
wird dieser Faktor an gleichmäßig verteilten Stützpunkten gegen die exakte
Summe (inklusive Selbstterm) kalibriert; `filter` liefert daher Werte in der
Skala der exakten Filterung, einschließlich des Selbstterms 1 * value_i.
"""

import logging
import math

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist

from ..config import LATTICE_CALIBRATION_SAMPLES, LATTICE_MAX_FEATURES
from ..errors import DataError, NumericalError

logger = logging.getLogger(__name__)

_EXACT_CHUNK = 16384
_MAX_ENCODED = 2**62


class _KeyIndex:
    """Sortierter Index ganzzahliger Gitterschlüssel; fehlende Schlüssel ergeben 0."""

    def __init__(self, keys: np.ndarray, margin: int):
        self.low = keys.min(axis=0) - margin
        spans = keys.max(axis=0) - self.low + margin + 1
        if math.prod(int(s) for s in spans) < _MAX_ENCODED:
            self.strides = np.cumprod(np.concatenate([[1], spans[:-1]])).astype(np.int64)
            codes = self._encode(keys)
            self.codes, self.inverse = np.unique(codes, return_inverse=True)
            self.rows = None
        else:
            self.strides = None
            self.rows, self.inverse = np.unique(keys, axis=0, return_inverse=True)
        self.inverse = self.inverse.reshape(-1) + 1

    @property
    def size(self) -> int:
        return len(self.codes) if self.rows is None else len(self.rows)

    def _encode(self, keys: np.ndarray) -> np.ndarray:
        return ((keys - self.low) * self.strides).sum(axis=1)

    def lookup(self, keys: np.ndarray) -> np.ndarray:
        if self.rows is None:
            codes = self._encode(keys)
            position = np.clip(np.searchsorted(self.codes, codes), 0, len(self.codes) - 1)
            return np.where(self.codes[position] == codes, position + 1, 0)
        stacked = np.concatenate([self.rows, keys])
        _, inverse = np.unique(stacked, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        vertex_of = np.zeros(inverse.max() + 1, dtype=np.int64)
        vertex_of[inverse[: len(self.rows)]] = np.arange(1, len(self.rows) + 1)
        return vertex_of[inverse[len(self.rows) :]]

    def vertex_keys(self) -> np.ndarray:
        if self.rows is not None:
            return self.rows
        keys = np.empty((len(self.codes), len(self.strides)), dtype=np.int64)
        rest = self.codes.copy()
        for axis in range(len(self.strides) - 1, -1, -1):
            keys[:, axis], rest = np.divmod(rest, self.strides[axis])
        return keys + self.low


class PermutohedralLattice:
    """
    Gitter für eine feste Merkmalsmenge; `filter` kann beliebig oft aufgerufen werden.

    Args:
        features: (N, D) Merkmale in Einheitsbandbreite, D <= 16
    """

    def __init__(self, features: np.ndarray):
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] < 1:
            raise DataError(f"Merkmale müssen die Form (N, D) mit D >= 1 haben: {features.shape}")
        if features.shape[1] > LATTICE_MAX_FEATURES:
            raise DataError(f"Höchstens {LATTICE_MAX_FEATURES} Merkmale, erhalten {features.shape[1]}")
        if not np.isfinite(features).all():
            raise DataError("Merkmale enthalten NaN oder Unendlich")
        self.features = features
        self.num_points, self.dim = features.shape
        d = self.dim

        keys, weights = self._embed(features)
        index = _KeyIndex(keys.reshape(-1, d), margin=d + 1)
        self.num_vertices = index.size
        point_ids = np.repeat(np.arange(self.num_points), d + 1)
        self.splat = sparse.csr_matrix(
            (weights.reshape(-1), (index.inverse, point_ids)),
            shape=(self.num_vertices + 1, self.num_points),
        )
        self.slice = self.splat.T.tocsr()

        vertex_keys = index.vertex_keys()
        self.neighbors = []
        for axis in range(d + 1):
            lower = vertex_keys - 1
            upper = vertex_keys + 1
            if axis < d:
                lower[:, axis] += d + 1
                upper[:, axis] -= d + 1
            n1 = np.concatenate([[0], index.lookup(lower)])
            n2 = np.concatenate([[0], index.lookup(upper)])
            self.neighbors.append((n1, n2))
        self.alpha = 1.0 / (1.0 + 2.0 ** (-d))
        self.scale = self._calibrate()
        logger.debug(f"Lattice: {self.num_points} Punkte, D={d}, {self.num_vertices} Ecken, Skala {self.scale:.4f}")

    def _embed(self, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gitterschlüssel (N, d+1, d) und baryzentrische Gewichte (N, d+1)."""
        n, d = features.shape
        up = d + 1
        inv_std = math.sqrt(2.0 / 3.0) * up
        scale = inv_std / np.sqrt((np.arange(d) + 1.0) * (np.arange(d) + 2.0))
        cf = features * scale

        tail = np.concatenate([np.cumsum(cf[:, ::-1], axis=1)[:, ::-1], np.zeros((n, 1))], axis=1)
        elevated = np.empty((n, up))
        elevated[:, 0] = tail[:, 0]
        elevated[:, 1:] = tail[:, 1:] - np.arange(1, up) * cf

        v = elevated / up
        upper = np.ceil(v) * up
        lower = np.floor(v) * up
        rem0 = np.where(upper - elevated < elevated - lower, upper, lower)
        total = np.rint(rem0.sum(axis=1) / up).astype(np.int64)[:, np.newaxis]

        diff = elevated - rem0
        rank = np.zeros((n, up), dtype=np.int64)
        for i in range(up):
            for j in range(i + 1, up):
                less = diff[:, i] < diff[:, j]
                rank[:, i] += less
                rank[:, j] += ~less

        positive = total > 0
        moved = positive & (rank >= up - total)
        rem0 = np.where(moved, rem0 - up, rem0)
        rank = np.where(positive, np.where(moved, rank + total - up, rank + total), rank)
        negative = total < 0
        moved = negative & (rank < -total)
        rem0 = np.where(moved, rem0 + up, rem0)
        rank = np.where(negative, np.where(moved, rank + up + total, rank + total), rank)

        delta = (elevated - rem0) / up
        bary = np.zeros((n, up + 1))
        rows = np.arange(n)[:, np.newaxis]
        bary[rows, d - rank] += delta
        bary[rows, up - rank] -= delta
        bary[:, 0] += 1.0 + bary[:, up]

        canonical = np.array([[r if k <= d - r else r - up for k in range(up)] for r in range(up)], dtype=np.int64)
        rem0 = rem0.astype(np.int64)
        keys = rem0[:, np.newaxis, :d] + np.moveaxis(canonical[:, rank[:, :d]], 0, 1)
        return keys, bary[:, :up]

    def _raw(self, values: np.ndarray) -> np.ndarray:
        lattice = np.asarray(self.splat @ values)
        lattice[0] = 0.0
        for n1, n2 in self.neighbors:
            lattice = lattice + 0.5 * (lattice[n1] + lattice[n2])
            lattice[0] = 0.0
        return self.alpha * np.asarray(self.slice @ lattice)

    def _calibrate(self) -> float:
        # Stützpunkte über die lexikographisch sortierten Merkmale, damit die
        # Kalibrierung nicht von der Punktreihenfolge abhängt
        order = np.lexsort(self.features.T[::-1])
        count = min(LATTICE_CALIBRATION_SAMPLES, self.num_points)
        samples = order[np.linspace(0, self.num_points - 1, count).round().astype(np.int64)]
        probe = self.features[samples]

        exact = np.zeros(count)
        for start in range(0, self.num_points, _EXACT_CHUNK):
            block = self.features[start : start + _EXACT_CHUNK]
            exact += np.exp(-0.5 * cdist(probe, block, "sqeuclidean")).sum(axis=1)
        approx = self._raw(np.ones((self.num_points, 1)))[samples, 0]
        if approx.sum() <= 0 or not np.isfinite(approx.sum()):
            raise NumericalError("Lattice-Kalibrierung fehlgeschlagen (Summe <= 0)")
        return float(exact.sum() / approx.sum())

    def filter(self, values: np.ndarray, normalize: bool = False) -> np.ndarray:
        """
        Gefilterte Werte (N, L) inklusive Selbstterm.

        Mit `normalize` wird durch die Filterung eines Einsfeldes geteilt;
        konstante Felder bleiben dann konstant.
        """
        values = np.asarray(values, dtype=np.float64)
        squeeze = values.ndim == 1
        if squeeze:
            values = values[:, np.newaxis]
        if values.shape[0] != self.num_points:
            raise DataError(f"{values.shape[0]} Werte für {self.num_points} Gitterpunkte")
        out = self.scale * self._raw(values)
        if normalize:
            norm = self.scale * self._raw(np.ones((self.num_points, 1)))
            out = out / np.maximum(norm, np.finfo(np.float64).tiny)
        return out[:, 0] if squeeze else out


def permutohedral_filter(values: np.ndarray, features: np.ndarray, normalize: bool = False) -> np.ndarray:
    """
    Approximative Gauß-Filterung (N, L) über Merkmale (N, D).

    Das Ergebnis enthält den Selbstterm; für die Filterung ohne Selbstterm
    zieht der Aufrufer `values` ab.
    """
    return PermutohedralLattice(features).filter(values, normalize=normalize)
