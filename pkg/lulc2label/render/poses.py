"""
Posenlogs: Einlesen (CSV oder JSON Lines) und zeitliche Interpolation.

Spalten eines Posenlogs::

    timestamp, easting, northing[, zone, hemisphere] | lon, lat, altitude, qw, qx, qy, qz

Geographische Positionen werden in die Zone der ersten Position projiziert
(auch über Zonengrenzen hinweg).
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.spatial.transform import Rotation, Slerp

from ..errors import DataError
from ..geo.utm import wgs84_to_utm
from ..models import BodyToCamera, CameraPose, Crs
from .camera import rotation_from_wxyz, wxyz_from_rotation

logger = logging.getLogger(__name__)

QUATERNION_COLUMNS = ["qw", "qx", "qy", "qz"]


@dataclass(frozen=True)
class PoseLog:
    """Zeitlich streng geordnete Posen in einer UTM-Zone."""

    poses: tuple[CameraPose, ...]
    crs: Crs

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))
        if not self.poses:
            raise DataError("Posenlog ist leer")
        times = np.array([p.timestamp for p in self.poses])
        if np.any(np.diff(times) <= 0):
            raise DataError("Zeitstempel im Posenlog sind nicht streng aufsteigend")

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([p.timestamp for p in self.poses])

    @property
    def span(self) -> tuple[float, float]:
        return self.poses[0].timestamp, self.poses[-1].timestamp

    def covers(self, t: float) -> bool:
        start, end = self.span
        return start <= t <= end

    def at(self, t: float) -> CameraPose:
        return interpolate_pose(self.poses, t)


def interpolate_pose(log: Sequence[CameraPose], t: float) -> CameraPose:
    """
    Pose zum Zeitpunkt t: Position linear, Lage per Slerp zwischen den
    einschließenden Stützstellen. Außerhalb der Logspanne wird nicht extrapoliert.
    """
    if not log:
        raise DataError("Posenlog ist leer")
    times = np.array([p.timestamp for p in log])
    if np.any(np.diff(times) <= 0):
        raise DataError("Zeitstempel im Posenlog sind nicht streng aufsteigend")
    if not times[0] <= t <= times[-1]:
        raise DataError(f"Zeitpunkt {t} liegt außerhalb des Posenlogs [{times[0]}, {times[-1]}]")

    index = int(np.searchsorted(times, t, side="right")) - 1
    if times[index] == t:
        return log[index]
    before, after = log[index], log[index + 1]
    fraction = (t - before.timestamp) / (after.timestamp - before.timestamp)

    position = (1.0 - fraction) * np.asarray(before.position) + fraction * np.asarray(after.position)
    rotations = Rotation.concatenate([rotation_from_wxyz(before.attitude), rotation_from_wxyz(after.attitude)])
    attitude = Slerp([0.0, 1.0], rotations)([fraction])[0]
    return CameraPose(
        position=tuple(position),
        attitude=wxyz_from_rotation(attitude),
        timestamp=float(t),
        body_to_camera=before.body_to_camera,
    )


def _read_frame(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise DataError(f"Posenlog nicht gefunden: {path}")
    if path.suffix.lower() in (".jsonl", ".ndjson", ".json"):
        return pd.read_json(path, lines=True)
    return pd.read_csv(path)


def read_pose_log(
    path: Path,
    crs: Crs | None = None,
    body_to_camera: BodyToCamera | None = None,
) -> PoseLog:
    """Liest ein Posenlog; Zeilen werden nach Zeitstempel sortiert."""
    path = Path(path)
    frame = _read_frame(path)
    required = {"timestamp", "altitude", *QUATERNION_COLUMNS}
    missing = required - set(frame.columns)
    if missing:
        raise DataError(f"{path}: fehlende Spalten im Posenlog: {sorted(missing)}")
    frame = frame.sort_values("timestamp").reset_index(drop=True)
    body_to_camera = body_to_camera or BodyToCamera()

    if {"easting", "northing"} <= set(frame.columns):
        easting = frame["easting"].to_numpy(dtype=np.float64)
        northing = frame["northing"].to_numpy(dtype=np.float64)
        if crs is None:
            if "zone" not in frame.columns:
                raise DataError(f"{path}: UTM-Koordinaten ohne Zone; Zone in Spalte 'zone' oder Konfiguration angeben")
            hemisphere = str(frame["hemisphere"].iloc[0]) if "hemisphere" in frame.columns else "N"
            crs = Crs.utm(int(frame["zone"].iloc[0]), hemisphere)
    elif {"lon", "lat"} <= set(frame.columns):
        easting, northing, crs = wgs84_to_utm(
            frame["lon"].to_numpy(dtype=np.float64),
            frame["lat"].to_numpy(dtype=np.float64),
            crs,
        )
        easting, northing = np.atleast_1d(easting), np.atleast_1d(northing)
    else:
        raise DataError(f"{path}: Position braucht 'easting'/'northing' oder 'lon'/'lat'")

    quaternions = frame[QUATERNION_COLUMNS].to_numpy(dtype=np.float64)
    quaternions /= np.linalg.norm(quaternions, axis=1, keepdims=True)
    altitude = frame["altitude"].to_numpy(dtype=np.float64)
    poses = [
        CameraPose(
            position=(easting[i], northing[i], altitude[i]),
            attitude=tuple(quaternions[i]),
            timestamp=float(frame["timestamp"].iloc[i]),
            body_to_camera=body_to_camera,
        )
        for i in range(len(frame))
    ]
    logger.info(f"{len(poses)} Posen aus {path.name} gelesen ({crs})")
    return PoseLog(tuple(poses), crs)


def write_pose_log(log: PoseLog, path: Path) -> None:
    """Schreibt ein Posenlog als CSV mit UTM-Koordinaten."""
    rows = [
        {
            "timestamp": pose.timestamp,
            "easting": pose.position[0],
            "northing": pose.position[1],
            "zone": log.crs.zone,
            "hemisphere": log.crs.hemisphere,
            "altitude": pose.position[2],
            **dict(zip(QUATERNION_COLUMNS, pose.attitude, strict=True)),
        }
        for pose in log.poses
    ]
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows).to_csv(path, index=False, float_format="%.10f")
