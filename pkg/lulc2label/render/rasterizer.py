"""
Software-Rasterisierer für Label-Dreiecksnetze mit Z-Buffer.

Abtastung an Pixelzentren (c + 0.5, r + 0.5). Kantenfunktionen werden auf
einem Subpixelraster von 1/256 px exakt ausgewertet; Pixel genau auf einer
Kante gehören nur dem Dreieck, für das die Kante eine Ober- oder linke Kante
ist. Benachbarte Dreiecke überdecken sich daher nie doppelt und lassen keine
Lücken. Pro Pixel gewinnt das Fragment mit kleinster Tiefe, bei gleicher
Tiefe das mit kleinerem Dreiecksindex.
"""

import logging
from dataclasses import replace

import numpy as np

from ..config import DEFAULT_NEAR_PLANE, LABEL_DTYPE, UNKNOWN_LABEL
from ..geo.warp import ResampleMethod
from ..models import CameraIntrinsics, CameraPose, Raster, SemanticScene
from .camera import image_to_world, project_points
from .scene import sample_at

logger = logging.getLogger(__name__)

_SUBPIXEL = 256.0
_MAX_FRAGMENTS = 1 << 22


def _edge(ax, ay, bx, by, px, py):
    """Kantenfunktion mit kanonischer Endpunktreihenfolge; vertauschte Kanten liefern exakt -E."""
    swap = (ay > by) | ((ay == by) & (ax > bx))
    x0, y0 = np.where(swap, bx, ax), np.where(swap, by, ay)
    x1, y1 = np.where(swap, ax, bx), np.where(swap, ay, by)
    value = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
    return np.where(swap, -value, value)


def _owns_edge(ax, ay, bx, by):
    dy = by - ay
    dx = bx - ax
    return (dy < 0) | ((dy == 0) & (dx > 0))


class _ZBuffer:
    def __init__(self, height: int, width: int):
        self.depth = np.full(height * width, np.inf)
        self.triangle = np.full(height * width, -1, dtype=np.int64)

    def merge(self, pixel: np.ndarray, depth: np.ndarray, triangle: np.ndarray) -> None:
        if pixel.size == 0:
            return
        order = np.lexsort((triangle, depth, pixel))
        pixel, depth, triangle = pixel[order], depth[order], triangle[order]
        first = np.concatenate([[True], pixel[1:] != pixel[:-1]])
        pixel, depth, triangle = pixel[first], depth[first], triangle[first]
        current_depth = self.depth[pixel]
        current_triangle = self.triangle[pixel]
        wins = (depth < current_depth) | ((depth == current_depth) & (triangle < current_triangle))
        self.depth[pixel[wins]] = depth[wins]
        self.triangle[pixel[wins]] = triangle[wins]


def _fragments(
    triangle_ids: np.ndarray,
    screen: np.ndarray,
    snapped: np.ndarray,
    inv_depth: np.ndarray,
    bbox: np.ndarray,
    width: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x0, x1, y0, y1 = bbox.T
    box_w = x1 - x0 + 1
    counts = box_w * (y1 - y0 + 1)
    owner = np.repeat(np.arange(len(triangle_ids)), counts)
    local = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    cols = x0[owner] + local % box_w[owner]
    rows = y0[owner] + local // box_w[owner]
    px, py = cols + 0.5, rows + 0.5

    sx, sy = snapped[owner, :, 0], snapped[owner, :, 1]
    e0 = _edge(sx[:, 1], sy[:, 1], sx[:, 2], sy[:, 2], px, py)
    e1 = _edge(sx[:, 2], sy[:, 2], sx[:, 0], sy[:, 0], px, py)
    e2 = _edge(sx[:, 0], sy[:, 0], sx[:, 1], sy[:, 1], px, py)
    inside = np.ones(owner.size, dtype=bool)
    for value, (a, b) in zip((e0, e1, e2), ((1, 2), (2, 0), (0, 1)), strict=True):
        owned = _owns_edge(sx[:, a], sy[:, a], sx[:, b], sy[:, b])
        inside &= (value > 0) | ((value == 0) & owned)

    owner, px, py = owner[inside], px[inside], py[inside]
    cols, rows = cols[inside], rows[inside]
    ux, uy = screen[owner, :, 0], screen[owner, :, 1]
    area = (ux[:, 1] - ux[:, 0]) * (uy[:, 2] - uy[:, 0]) - (uy[:, 1] - uy[:, 0]) * (ux[:, 2] - ux[:, 0])
    degenerate = area == 0
    area = np.where(degenerate, 1.0, area)
    w1 = ((px - ux[:, 0]) * (uy[:, 2] - uy[:, 0]) - (py - uy[:, 0]) * (ux[:, 2] - ux[:, 0])) / area
    w2 = ((ux[:, 1] - ux[:, 0]) * (py - uy[:, 0]) - (uy[:, 1] - uy[:, 0]) * (px - ux[:, 0])) / area
    w0 = 1.0 - w1 - w2
    z_inv = w0 * inv_depth[owner, 0] + w1 * inv_depth[owner, 1] + w2 * inv_depth[owner, 2]
    z_inv = np.where(degenerate, inv_depth[owner].max(axis=1), z_inv)
    return rows * width + cols, 1.0 / z_inv, triangle_ids[owner]


def rasterize(
    scene: SemanticScene,
    pose: CameraPose,
    K: CameraIntrinsics,
    near: float = DEFAULT_NEAR_PLANE,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Sichtbares Dreieck und Tiefe je Pixel.

    Returns:
        (Dreiecksindex (H, W) int64 mit -1 für unbedeckte Pixel, Tiefe (H, W) mit inf)
    """
    height, width = K.height, K.width
    zbuffer = _ZBuffer(height, width)
    triangles = scene.triangles
    if triangles.shape[0] == 0:
        return zbuffer.triangle.reshape(height, width), zbuffer.depth.reshape(height, width)

    u, v, depth, in_front = project_points(scene.vertices, pose, K, near)
    keep = in_front[triangles].all(axis=1)
    ids = np.flatnonzero(keep)
    tris = triangles[keep]
    screen = np.stack([u[tris], v[tris]], axis=-1)
    snapped = np.round(screen * _SUBPIXEL) / _SUBPIXEL
    inv_depth = 1.0 / depth[tris]

    sx, sy = snapped[..., 0], snapped[..., 1]
    doubled_area = (sx[:, 1] - sx[:, 0]) * (sy[:, 2] - sy[:, 0]) - (sy[:, 1] - sy[:, 0]) * (sx[:, 2] - sx[:, 0])
    x0 = np.maximum(np.ceil(screen[..., 0].min(axis=1) - 0.5 - 1.0 / _SUBPIXEL), 0)
    x1 = np.minimum(np.floor(screen[..., 0].max(axis=1) - 0.5 + 1.0 / _SUBPIXEL), width - 1)
    y0 = np.maximum(np.ceil(screen[..., 1].min(axis=1) - 0.5 - 1.0 / _SUBPIXEL), 0)
    y1 = np.minimum(np.floor(screen[..., 1].max(axis=1) - 0.5 + 1.0 / _SUBPIXEL), height - 1)
    visible = (doubled_area != 0) & (x0 <= x1) & (y0 <= y1)

    # gegen den Uhrzeigersinn umsortieren, damit alle Kantenfunktionen innen positiv sind
    flip = doubled_area < 0
    order = np.where(flip[:, np.newaxis], [0, 2, 1], [0, 1, 2])
    rows_idx = np.arange(len(tris))[:, np.newaxis]
    screen, snapped, inv_depth = screen[rows_idx, order], snapped[rows_idx, order], inv_depth[rows_idx, order]

    bbox = np.stack([x0, x1, y0, y1], axis=1).astype(np.int64)
    ids, screen, snapped, inv_depth, bbox = (a[visible] for a in (ids, screen, snapped, inv_depth, bbox))
    counts = (bbox[:, 1] - bbox[:, 0] + 1) * (bbox[:, 3] - bbox[:, 2] + 1)

    start = 0
    while start < len(ids):
        stop = start + 1
        total = counts[start]
        while stop < len(ids) and total + counts[stop] <= _MAX_FRAGMENTS:
            total += counts[stop]
            stop += 1
        chunk = slice(start, stop)
        pixel, frag_depth, frag_tri = _fragments(
            ids[chunk], screen[chunk], snapped[chunk], inv_depth[chunk], bbox[chunk], width
        )
        zbuffer.merge(pixel, frag_depth, frag_tri)
        start = stop

    logger.debug(f"Rasterisiert: {len(ids)} Dreiecke, {int((zbuffer.triangle >= 0).sum())} Pixel bedeckt")
    return zbuffer.triangle.reshape(height, width), zbuffer.depth.reshape(height, width)


def labels_from_triangles(scene: SemanticScene, triangle_index: np.ndarray) -> np.ndarray:
    """Flache Schattierung: Label des provozierenden (ersten) Vertex je Dreieck."""
    provoking = scene.triangles[:, 0]
    labels = np.full(triangle_index.shape, UNKNOWN_LABEL, dtype=LABEL_DTYPE)
    covered = triangle_index >= 0
    labels[covered] = scene.labels[provoking[triangle_index[covered]]]
    return labels


def render_labels(
    scene: SemanticScene,
    pose: CameraPose,
    K: CameraIntrinsics,
    near: float = DEFAULT_NEAR_PLANE,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Rendert das Labelbild und das Tiefenbild einer Szene.

    Returns:
        (Labels (H, W) uint8 mit UNKNOWN_LABEL für unbedeckte Pixel,
         Tiefe (H, W) float32 mit NaN für unbedeckte Pixel)
    """
    triangle_index, depth = rasterize(scene, pose, K, near)
    labels = labels_from_triangles(scene, triangle_index)
    depth = np.where(np.isfinite(depth), depth, np.nan).astype(np.float32)
    return labels, depth


def render_with_labels(
    scene: SemanticScene,
    labels: np.ndarray,
    pose: CameraPose,
    K: CameraIntrinsics,
    near: float = DEFAULT_NEAR_PLANE,
) -> np.ndarray:
    """Rendert dieselbe Geometrie mit anderen Vertexlabels (z.B. Ground Truth)."""
    relabeled = replace(scene, labels=np.asarray(labels).reshape(-1))
    triangle_index, _ = rasterize(relabeled, pose, K, near)
    return labels_from_triangles(relabeled, triangle_index)


def project_raster(
    raster: Raster,
    depth: np.ndarray,
    pose: CameraPose,
    K: CameraIntrinsics,
    method: ResampleMethod | str = ResampleMethod.NEAREST,
    band: int = 0,
    fill: float | int = UNKNOWN_LABEL,
) -> np.ndarray:
    """
    Drapiert ein Orthoraster ins Kamerabild.

    Jedes bedeckte Pixel wird mit seiner gerenderten Tiefe in die Welt
    zurückprojiziert und das Raster dort abgetastet. Unbedeckte Pixel und
    Pixel außerhalb des Rasters erhalten `fill`.
    """
    method = ResampleMethod(method)
    depth = np.asarray(depth, dtype=np.float64)
    out = np.full(depth.shape, fill, dtype=np.float64)
    covered = np.isfinite(depth)
    if covered.any():
        rows, cols = np.nonzero(covered)
        world = image_to_world(cols + 0.5, rows + 0.5, depth[covered], pose, K)
        values, valid = sample_at(raster, world[:, 0], world[:, 1], method, band)
        out[rows[valid], cols[valid]] = values[valid]
    if method == ResampleMethod.NEAREST:
        return out.astype(np.result_type(raster.dtype, np.min_scalar_type(fill)))
    return out
