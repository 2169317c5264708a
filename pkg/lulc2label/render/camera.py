"""
Lochkamera-Projektion zwischen Welt (UTM/ENU) und Bildpixeln.

Konventionen:
    Welt:   x = Easting, y = Northing, z = Höhe (ENU)
    Kamera: +Z Blickrichtung, +X rechts, +Y unten
    Pose:   Quaternion (w, x, y, z) dreht Körper -> Welt; die Montage
            (BodyToCamera) dreht Kamera -> Körper und verschiebt um den Hebelarm.

Die Extrinsik wird physikalisch korrekt als x_c = R_cw (X_w - C) gebildet,
d.h. T = -R_cw C.
"""

import math

import numpy as np
from scipy.spatial.transform import Rotation

from ..config import DEFAULT_NEAR_PLANE, UNKNOWN_LABEL
from ..errors import DataError
from ..models import CameraIntrinsics, CameraPose

_UNDISTORT_ITERATIONS = 20


def rotation_from_wxyz(q) -> Rotation:
    w, x, y, z = (float(v) for v in q)
    return Rotation.from_quat([x, y, z, w])


def wxyz_from_rotation(rotation: Rotation) -> tuple[float, float, float, float]:
    x, y, z, w = rotation.as_quat()
    q = np.array([w, x, y, z])
    q /= np.linalg.norm(q)
    if q[0] < 0:
        q = -q
    return tuple(float(v) for v in q)


def look_attitude(heading_deg: float = 0.0, pitch_deg: float = 0.0) -> tuple[float, float, float, float]:
    """
    Kameralage mit Blickrichtung `pitch_deg` über Nadir, horizontal nach `heading_deg`.

    heading 0 = Norden, im Uhrzeigersinn; pitch 0 = senkrecht nach unten,
    pitch 90 = horizontal. Der Bildoberrand zeigt in Blickrichtung.
    """
    h = math.radians(heading_deg)
    p = math.radians(pitch_deg)
    direction = np.array([math.sin(h), math.cos(h), 0.0])
    forward = math.sin(p) * direction + math.cos(p) * np.array([0.0, 0.0, -1.0])
    right = np.array([math.cos(h), -math.sin(h), 0.0])
    down = np.cross(forward, right)
    return wxyz_from_rotation(Rotation.from_matrix(np.column_stack([right, down, forward])))


NADIR_ATTITUDE = (0.0, 1.0, 0.0, 0.0)


def camera_frame(pose: CameraPose) -> tuple[np.ndarray, np.ndarray]:
    """(R_world_from_camera (3x3), Kamerazentrum C in Weltkoordinaten)."""
    body_to_world = rotation_from_wxyz(pose.attitude)
    camera_to_body = rotation_from_wxyz(pose.body_to_camera.rotation)
    center = np.asarray(pose.position) + body_to_world.apply(np.asarray(pose.body_to_camera.lever_arm))
    return (body_to_world * camera_to_body).as_matrix(), center


def _distort(xn: np.ndarray, yn: np.ndarray, K: CameraIntrinsics) -> tuple[np.ndarray, np.ndarray]:
    if not K.has_distortion:
        return xn, yn
    r2 = xn * xn + yn * yn
    factor = 1.0 + K.k1 * r2 + K.k2 * r2 * r2
    return xn * factor, yn * factor


def _undistort(xd: np.ndarray, yd: np.ndarray, K: CameraIntrinsics) -> tuple[np.ndarray, np.ndarray]:
    if not K.has_distortion:
        return xd, yd
    xn, yn = xd.copy(), yd.copy()
    for _ in range(_UNDISTORT_ITERATIONS):
        r2 = xn * xn + yn * yn
        factor = 1.0 + K.k1 * r2 + K.k2 * r2 * r2
        xn, yn = xd / factor, yd / factor
    return xn, yn


def project_points(
    points: np.ndarray,
    pose: CameraPose,
    K: CameraIntrinsics,
    near: float = DEFAULT_NEAR_PLANE,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Projiziert (N, 3) Weltpunkte.

    Returns:
        (u, v, depth, in_front); für Punkte hinter der Nahebene sind u, v NaN.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    world_from_camera, center = camera_frame(pose)
    cam = (points - center) @ world_from_camera
    depth = cam[:, 2]
    in_front = depth > near
    safe = np.where(in_front, depth, 1.0)
    xn, yn = _distort(cam[:, 0] / safe, cam[:, 1] / safe, K)
    u = np.where(in_front, K.fx * xn + K.cx, np.nan)
    v = np.where(in_front, K.fy * yn + K.cy, np.nan)
    return u, v, depth, in_front


def world_to_image(
    point,
    pose: CameraPose,
    K: CameraIntrinsics,
    near: float = DEFAULT_NEAR_PLANE,
) -> tuple[float, float, float] | None:
    """(u, v, depth) eines Weltpunkts oder None, wenn er hinter der Kamera liegt."""
    point = np.asarray(point, dtype=np.float64)
    if point.shape != (3,) or not np.isfinite(point).all():
        raise DataError(f"Weltpunkt muss endlich und dreidimensional sein: {point}")
    u, v, depth, in_front = project_points(point[np.newaxis], pose, K, near)
    if not in_front[0]:
        return None
    return float(u[0]), float(v[0]), float(depth[0])


def image_to_world(u, v, depth, pose: CameraPose, K: CameraIntrinsics) -> np.ndarray:
    """Rückprojektion von Pixel (u, v) mit Tiefe (Kamera-Z) in Weltkoordinaten, Form (..., 3)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    depth = np.asarray(depth, dtype=np.float64)
    xn, yn = _undistort((u - K.cx) / K.fx, (v - K.cy) / K.fy, K)
    cam = np.stack([xn * depth, yn * depth, depth * np.ones_like(xn)], axis=-1)
    world_from_camera, center = camera_frame(pose)
    return cam @ world_from_camera.T + center


def viewing_rays(pose: CameraPose, K: CameraIntrinsics) -> np.ndarray:
    """Weltrichtungen (H, W, 3) der Strahlen durch alle Pixelzentren."""
    rows, cols = np.meshgrid(np.arange(K.height) + 0.5, np.arange(K.width) + 0.5, indexing="ij")
    xn, yn = _undistort((cols - K.cx) / K.fx, (rows - K.cy) / K.fy, K)
    cam = np.stack([xn, yn, np.ones_like(xn)], axis=-1)
    world_from_camera, _ = camera_frame(pose)
    return cam @ world_from_camera.T


def horizontal_heading(pose: CameraPose) -> np.ndarray:
    """Horizontale Einheitsrichtung der Kamerablickachse; bei Nadirblick die Bildoberkante."""
    world_from_camera, _ = camera_frame(pose)
    forward = world_from_camera[:, 2]
    horizontal = np.array([forward[0], forward[1], 0.0])
    if np.linalg.norm(horizontal) < 1e-6:
        up_in_image = -world_from_camera[:, 1]
        horizontal = np.array([up_in_image[0], up_in_image[1], 0.0])
    norm = np.linalg.norm(horizontal)
    if norm < 1e-12:
        raise DataError("Horizontale Blickrichtung ist nicht bestimmbar")
    return horizontal / norm


def fill_sky(labels: np.ndarray, pose: CameraPose, K: CameraIntrinsics, sky_class: int | None) -> np.ndarray:
    """Setzt unbedeckte Pixel, deren Sichtstrahl über den Horizont zeigt, auf `sky_class`."""
    if sky_class is None:
        return labels
    labels = np.array(labels, copy=True)
    if labels.shape != (K.height, K.width):
        raise DataError(f"Labelbild {labels.shape} passt nicht zur Kamera {(K.height, K.width)}")
    above = viewing_rays(pose, K)[..., 2] > 0
    labels[(labels == UNKNOWN_LABEL) & above] = sky_class
    return labels
