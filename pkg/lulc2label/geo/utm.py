"""
WGS84 <-> UTM über die Krüger-Reihe bis Ordnung n^4.

Alle Funktionen sind vektorisiert: Skalare und numpy-Arrays werden
gleichermaßen akzeptiert.
"""

import numpy as np

from ..config import (
    UTM_FALSE_EASTING,
    UTM_FALSE_NORTHING_SOUTH,
    UTM_K0,
    UTM_MAX_LAT,
    UTM_MIN_LAT,
    WGS84_A,
    WGS84_F,
)
from ..errors import DataError
from ..models import Crs, CrsKind

_N = WGS84_F / (2.0 - WGS84_F)
_N2, _N3, _N4 = _N**2, _N**3, _N**4
# Rektifizierender Radius
_A = WGS84_A / (1.0 + _N) * (1.0 + _N2 / 4.0 + _N4 / 64.0)

_ALPHA = (
    _N / 2.0 - 2.0 * _N2 / 3.0 + 5.0 * _N3 / 16.0 + 41.0 * _N4 / 180.0,
    13.0 * _N2 / 48.0 - 3.0 * _N3 / 5.0 + 557.0 * _N4 / 1440.0,
    61.0 * _N3 / 240.0 - 103.0 * _N4 / 140.0,
    49561.0 * _N4 / 161280.0,
)
_BETA = (
    _N / 2.0 - 2.0 * _N2 / 3.0 + 37.0 * _N3 / 96.0 - _N4 / 360.0,
    _N2 / 48.0 + _N3 / 15.0 - 437.0 * _N4 / 1440.0,
    17.0 * _N3 / 480.0 - 37.0 * _N4 / 840.0,
    4397.0 * _N4 / 161280.0,
)
_DELTA = (
    2.0 * _N - 2.0 * _N2 / 3.0 - 2.0 * _N3 + 116.0 * _N4 / 45.0,
    7.0 * _N2 / 3.0 - 8.0 * _N3 / 5.0 - 227.0 * _N4 / 45.0,
    56.0 * _N3 / 15.0 - 136.0 * _N4 / 35.0,
    4279.0 * _N4 / 630.0,
)
_E_FACTOR = 2.0 * np.sqrt(_N) / (1.0 + _N)  # erste Exzentrizität e


def longitude_to_zone(lon) -> int:
    """Standard-UTM-Zone aus der Länge (ohne Norwegen/Svalbard-Sonderzonen)."""
    lon = float(lon)
    return int(np.floor((lon + 180.0) / 6.0)) % 60 + 1


def central_meridian(zone: int) -> float:
    return (zone - 1) * 6.0 - 180.0 + 3.0


def wgs84_to_utm(lon, lat, zone: Crs | int | None = None):
    """
    Vorwärtsprojektion (Länge, Breite in Grad) -> (easting, northing, Crs).

    Ohne Zone wird die Standardzone aus der (ersten) Länge abgeleitet und die
    Hemisphäre aus der Breite. Eine übergebene Zone wird auch außerhalb ihres
    6°-Streifens verwendet (erweiterte Transversale Mercator).
    """
    lon = np.asarray(lon, dtype=np.float64)
    lat = np.asarray(lat, dtype=np.float64)
    if np.any(~np.isfinite(lat)) or np.any(~np.isfinite(lon)):
        raise DataError("Koordinaten müssen endlich sein")
    if np.any(lat <= UTM_MIN_LAT) or np.any(lat >= UTM_MAX_LAT):
        raise DataError(
            f"Breite außerhalb des UTM-Gültigkeitsbereichs ({UTM_MIN_LAT}, {UTM_MAX_LAT}): "
            f"[{lat.min()}, {lat.max()}]",
        )
    if np.any(lon < -180.0) or np.any(lon >= 180.0):
        raise DataError(f"Länge außerhalb [-180, 180): [{lon.min()}, {lon.max()}]")
    crs = _resolve_zone(zone, lon, lat)

    phi = np.radians(lat)
    lam = np.radians(lon - central_meridian(crs.zone))
    lam = (lam + np.pi) % (2.0 * np.pi) - np.pi

    sin_phi = np.sin(phi)
    t = np.sinh(np.arctanh(sin_phi) - _E_FACTOR * np.arctanh(_E_FACTOR * sin_phi))
    xi_p = np.arctan2(t, np.cos(lam))
    eta_p = np.arctanh(np.sin(lam) / np.sqrt(1.0 + t * t))

    xi = xi_p.copy()
    eta = eta_p.copy()
    for j, alpha in enumerate(_ALPHA, start=1):
        xi += alpha * np.sin(2 * j * xi_p) * np.cosh(2 * j * eta_p)
        eta += alpha * np.cos(2 * j * xi_p) * np.sinh(2 * j * eta_p)

    easting = UTM_FALSE_EASTING + UTM_K0 * _A * eta
    northing = UTM_K0 * _A * xi
    if crs.hemisphere == "S":
        northing = northing + UTM_FALSE_NORTHING_SOUTH
    return _unwrap(easting), _unwrap(northing), crs


def utm_to_wgs84(easting, northing, zone: Crs):
    """Inverse Projektion -> (Länge, Breite) in Grad."""
    if zone.kind != CrsKind.UTM:
        raise DataError(f"utm_to_wgs84 erwartet ein UTM-Crs, erhalten: {zone}")
    easting = np.asarray(easting, dtype=np.float64)
    northing = np.asarray(northing, dtype=np.float64)
    if np.any(~np.isfinite(easting)) or np.any(~np.isfinite(northing)):
        raise DataError("UTM-Koordinaten müssen endlich sein")
    if zone.hemisphere == "S":
        northing = northing - UTM_FALSE_NORTHING_SOUTH

    xi = northing / (UTM_K0 * _A)
    eta = (easting - UTM_FALSE_EASTING) / (UTM_K0 * _A)
    xi_p = xi.copy()
    eta_p = eta.copy()
    for j, beta in enumerate(_BETA, start=1):
        xi_p -= beta * np.sin(2 * j * xi) * np.cosh(2 * j * eta)
        eta_p -= beta * np.cos(2 * j * xi) * np.sinh(2 * j * eta)

    chi = np.arcsin(np.sin(xi_p) / np.cosh(eta_p))
    phi = chi.copy()
    for j, delta in enumerate(_DELTA, start=1):
        phi += delta * np.sin(2 * j * chi)
    lam = np.arctan2(np.sinh(eta_p), np.cos(xi_p))

    lon = np.degrees(lam) + central_meridian(zone.zone)
    lat = np.degrees(phi)
    return _unwrap(lon), _unwrap(lat)


def transform_points(x, y, source: Crs, target: Crs):
    """Punkte zwischen WGS84 und UTM-Zonen umrechnen."""
    if source == target:
        return np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if CrsKind.PIXEL in (source.kind, target.kind):
        raise DataError(f"Keine Transformation zwischen {source} und {target} möglich")
    if source.kind == CrsKind.UTM:
        lon, lat = utm_to_wgs84(x, y, source)
    else:
        lon, lat = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if target.kind == CrsKind.GEOGRAPHIC:
        return lon, lat
    easting, northing, _ = wgs84_to_utm(lon, lat, target)
    return easting, northing


def _resolve_zone(zone: Crs | int | None, lon: np.ndarray, lat: np.ndarray) -> Crs:
    if isinstance(zone, Crs):
        if zone.kind != CrsKind.UTM:
            raise DataError(f"Zielsystem ist keine UTM-Zone: {zone}")
        return zone
    hemisphere = "N" if float(np.ravel(lat)[0]) >= 0 else "S"
    if zone is None:
        zone = longitude_to_zone(np.ravel(lon)[0])
    return Crs.utm(int(zone), hemisphere)


def _unwrap(value: np.ndarray):
    return float(value) if value.ndim == 0 else value
