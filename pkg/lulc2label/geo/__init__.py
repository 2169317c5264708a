from .utm import central_meridian, longitude_to_zone, transform_points, utm_to_wgs84, wgs84_to_utm
from .warp import ResampleMethod, align_and_crop, reproject, resample, resample_like, warp_to_grid

__all__ = [
    "ResampleMethod",
    "align_and_crop",
    "central_meridian",
    "longitude_to_zone",
    "reproject",
    "resample",
    "resample_like",
    "transform_points",
    "utm_to_wgs84",
    "warp_to_grid",
    "wgs84_to_utm",
]
