import json
from pathlib import Path

import numpy as np
import pytest

from lulc2label.models import CameraIntrinsics, CameraPose, Crs, GeoTransform, Raster
from lulc2label.render.camera import NADIR_ATTITUDE
from lulc2label.synth import SynthConfig, TrajectoryConfig, generate_scene, make_trajectory

ORIGIN = (500_000.0, 5_300_000.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def utm() -> Crs:
    return Crs.utm(32)


def make_raster(data, resolution: float = 1.0, crs: Crs | None = None, nodata=None) -> Raster:
    """Nordausgerichtetes Raster mit Ursprung ORIGIN."""
    transform = GeoTransform(ORIGIN[0], ORIGIN[1], resolution, -resolution)
    return Raster(np.asarray(data), transform, crs or Crs.utm(32), nodata)


@pytest.fixture
def label_raster(rng) -> Raster:
    return make_raster(rng.integers(0, 4, size=(16, 20)).astype(np.uint8))


@pytest.fixture
def intrinsics() -> CameraIntrinsics:
    return CameraIntrinsics(fx=100.0, fy=100.0, cx=32.0, cy=24.0, width=64, height=48)


@pytest.fixture
def nadir_pose() -> CameraPose:
    return CameraPose((ORIGIN[0] + 50.0, ORIGIN[1] - 50.0, 100.0), NADIR_ATTITUDE)


@pytest.fixture(scope="session")
def small_scene():
    return generate_scene(SynthConfig(size=128, coarse_resolution=8.0), seed=7)


@pytest.fixture(scope="session")
def small_trajectory(small_scene):
    config = TrajectoryConfig(
        frames=4,
        altitude=(40.0, 50.0),
        intrinsics=CameraIntrinsics(fx=80.0, fy=80.0, cx=40.0, cy=32.0, width=80, height=64),
    )
    return make_trajectory(small_scene, config, name="t")


@pytest.fixture
def write_config(tmp_path):
    """Schreibt ein Konfigurations-Dictionary als JSON und gibt den Pfad zurück."""

    def _write(data: dict, name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return _write
