from .camera import (
    NADIR_ATTITUDE,
    camera_frame,
    fill_sky,
    horizontal_heading,
    image_to_world,
    look_attitude,
    project_points,
    rotation_from_wxyz,
    viewing_rays,
    world_to_image,
    wxyz_from_rotation,
)
from .poses import PoseLog, interpolate_pose, read_pose_log, write_pose_log
from .rasterizer import labels_from_triangles, project_raster, rasterize, render_labels, render_with_labels
from .scene import RenderSettings, geometric_schedule, sample_at, sample_scene

__all__ = [
    "NADIR_ATTITUDE",
    "PoseLog",
    "RenderSettings",
    "camera_frame",
    "fill_sky",
    "geometric_schedule",
    "horizontal_heading",
    "image_to_world",
    "interpolate_pose",
    "labels_from_triangles",
    "look_attitude",
    "project_points",
    "project_raster",
    "rasterize",
    "read_pose_log",
    "render_labels",
    "render_with_labels",
    "rotation_from_wxyz",
    "sample_at",
    "sample_scene",
    "viewing_rays",
    "world_to_image",
    "write_pose_log",
    "wxyz_from_rotation",
]
