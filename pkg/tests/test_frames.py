import logging

import numpy as np
import pytest

from lulc2label.errors import DataError
from lulc2label.frames import (
    FrameProcessor,
    FrameRefiner,
    map_frames,
    process_all,
    refine_frame,
    render_frame,
)
from lulc2label.models import CameraPose, MaskSet
from lulc2label.refine import StaticMaskProvider
from lulc2label.render import NADIR_ATTITUDE
from lulc2label.render.scene import RenderSettings

from .conftest import ORIGIN, make_raster


def _world(size: int = 200):
    lulc = np.zeros((size, size), dtype=np.uint8)
    lulc[:, size // 2 :] = 2
    return make_raster(lulc), make_raster(np.zeros((size, size), dtype=np.float32))


def _pose(dx: float = 100.0, timestamp: float = 0.0) -> CameraPose:
    return CameraPose((ORIGIN[0] + dx, ORIGIN[1] - 100.0, 100.0), NADIR_ATTITUDE, timestamp=timestamp)


@pytest.fixture
def processor(intrinsics) -> FrameProcessor:
    lulc, dem = _world()
    return FrameProcessor(lulc, dem, intrinsics, RenderSettings())


def _square(value: int, shape=(48, 64)) -> np.ndarray:
    return np.full(shape, value, dtype=np.uint8)


def _halves(shape=(48, 64)) -> MaskSet:
    left = np.zeros(shape, dtype=bool)
    left[:, : shape[1] // 2] = True
    return MaskSet.from_dense([left, ~left])


class TestFrameRefiner:
    def test_without_provider_copies_projected(self):
        projected = _square(3)
        refined = FrameRefiner().refine("f", projected, None)
        np.testing.assert_array_equal(refined, projected)
        assert refined is not projected

    def test_provider_needs_image(self):
        refiner = FrameRefiner(StaticMaskProvider({"f": _halves()}))
        with pytest.raises(DataError):
            refiner.refine("f", _square(1), None)

    def test_masks_are_applied(self):
        projected = _square(1)
        projected[:, 40:] = 2
        refiner = FrameRefiner(StaticMaskProvider({"f": _halves()}), preprocess=False)
        refined = refiner.refine("f", projected, np.zeros((48, 64), dtype=np.uint8))
        assert (refined[:, :32] == 1).all()
        assert (refined[:, 32:] == 2).all()


class TestFrameProcessor:
    def test_render_nadir(self, processor):
        labels, depth = processor.render("f", _pose())
        assert labels.shape == (48, 64)
        assert (labels[:, :30] == 0).all()
        assert (labels[:, 34:] == 2).all()
        np.testing.assert_allclose(depth, 100.0, rtol=1e-5)

    def test_process_without_provider(self, processor):
        outcome = processor.process("f", _pose(), None)
        assert outcome.ok
        np.testing.assert_array_equal(outcome.refined, outcome.projected)

    def test_failure_is_reported_not_raised(self, processor):
        outcome = processor.process("far", _pose(dx=10_000.0), None)
        assert not outcome.ok
        assert outcome.refined is None
        assert "außerhalb" in outcome.error

    def test_coarse_lulc_is_resampled_to_elevation_grid(self, intrinsics):
        coarse = make_raster(np.array([[0, 2], [0, 2]], dtype=np.uint8), resolution=100.0)
        _, dem = _world()
        processor = FrameProcessor(coarse, dem, intrinsics)
        assert processor.lulc.transform == dem.transform
        assert processor.lulc.data.shape == dem.data.shape

    def test_rejects_multiband_lulc(self, intrinsics):
        _, dem = _world()
        with pytest.raises(DataError):
            FrameProcessor(make_raster(np.zeros((2, 200, 200), dtype=np.uint8)), dem, intrinsics)

    def test_stage_timing_is_logged(self, processor, caplog):
        with caplog.at_level(logging.INFO, logger="lulc2label.frames"):
            processor.render("f7", _pose())
        assert any("frame=f7 stage=render seconds=" in r.message for r in caplog.records)


class TestStages:
    def test_render_frame_and_refine_frame(self, processor):
        rendered = render_frame(processor, "f", _pose())
        assert rendered.ok
        assert rendered.refined is None
        refined = refine_frame(processor, "f", rendered.projected, None)
        np.testing.assert_array_equal(refined.refined, rendered.projected)

    def test_refine_frame_failure(self):
        refiner = FrameRefiner(StaticMaskProvider({}))
        outcome = refine_frame(refiner, "f", _square(1), np.zeros((48, 64), dtype=np.uint8))
        assert not outcome.ok
        assert outcome.projected is not None


class TestMapFrames:
    def test_results_keep_input_order(self, processor):
        frames = [(f"f{i}", _pose(dx=90.0 + 5 * i), None) for i in range(4)]
        outcomes = process_all(processor, frames)
        assert [o.frame_id for o in outcomes] == ["f0", "f1", "f2", "f3"]

    def test_worker_count_does_not_change_results(self, processor):
        frames = [(f"f{i}", _pose(dx=90.0 + 5 * i), None) for i in range(3)]
        serial = process_all(processor, frames, workers=1)
        parallel = process_all(processor, frames, workers=2)
        for a, b in zip(serial, parallel, strict=True):
            assert a.frame_id == b.frame_id
            np.testing.assert_array_equal(a.projected, b.projected)

    def test_map_frames_plain_function(self):
        assert map_frames(_scale, 10, [(1,), (2,), (3,)]) == [10, 20, 30]


def _scale(factor: int, value: int) -> int:
    return factor * value
