import json

import numpy as np
import pandas as pd
import pytest

from lulc2label.errors import ConfigError, DataError
from lulc2label.factory import PipelineConfigFactory, load_config
from lulc2label.models import Crs, GeoTransform, Raster
from lulc2label.repo import read_raster, write_geotiff
from lulc2label.service import (
    FRAME_INDEX,
    FrameRecord,
    LabelPipelineService,
    read_frame_index,
    write_frame_index,
)

from .conftest import make_raster


def _service(data: dict, base_dir, force: bool = False) -> LabelPipelineService:
    return LabelPipelineService(PipelineConfigFactory.from_dict(data, base_dir, {}), force=force)


def _labels(data: np.ndarray) -> Raster:
    return Raster(np.asarray(data, dtype=np.uint8), GeoTransform.identity(), Crs.pixel(), 255)


class TestFrameIndex:
    def test_round_trip(self, tmp_path):
        records = [
            FrameRecord("a", 0.5, "north", tmp_path / "images" / "a.tif"),
            FrameRecord("b", 1.5, "south"),
        ]
        write_frame_index(records, tmp_path / FRAME_INDEX)
        loaded = read_frame_index(tmp_path)
        assert loaded == records

    def test_defaults(self, tmp_path):
        pd.DataFrame({"frame_id": ["007", "008"], "timestamp": [1, 2]}).to_csv(tmp_path / "idx.csv", index=False)
        records = read_frame_index(tmp_path / "idx.csv")
        assert [r.frame_id for r in records] == ["007", "008"]
        assert {r.trajectory for r in records} == {"default"}
        assert all(r.image is None for r in records)

    def test_missing_columns(self, tmp_path):
        pd.DataFrame({"frame_id": ["a"]}).to_csv(tmp_path / FRAME_INDEX, index=False)
        with pytest.raises(DataError, match="timestamp"):
            read_frame_index(tmp_path)

    def test_duplicate_ids(self, tmp_path):
        pd.DataFrame({"frame_id": ["a", "a"], "timestamp": [0, 1]}).to_csv(tmp_path / FRAME_INDEX, index=False)
        with pytest.raises(DataError, match="doppelte"):
            read_frame_index(tmp_path)

    def test_missing_index(self, tmp_path):
        with pytest.raises(DataError):
            read_frame_index(tmp_path)


class TestRefineLulc:
    @pytest.fixture
    def logits_path(self, tmp_path, rng):
        path = tmp_path / "logits.tif"
        write_geotiff(make_raster(rng.normal(size=(3, 8, 10)).astype(np.float32)), path)
        return path

    def _config(self):
        return {"paths": {"logits": "logits.tif", "output_dir": "out"}, "crf": {"enabled": False}}

    def test_passthrough_is_argmax(self, tmp_path, logits_path):
        result = _service(self._config(), tmp_path).refine_lulc()
        assert not result.cached
        logits = read_raster(logits_path).data
        labels = read_raster(tmp_path / "out" / "lulc_refined.tif")
        np.testing.assert_array_equal(labels.band(), np.argmax(logits, axis=0))
        assert labels.transform == make_raster(np.zeros((8, 10))).transform
        log_q = read_raster(tmp_path / "out" / "lulc_logmarginals.tif").data.astype(np.float64)
        np.testing.assert_allclose(np.exp(log_q).sum(axis=0), 1.0, atol=1e-5)
        assert (tmp_path / "out" / "lulc_refined.png").exists()

    def test_manifest_and_cache(self, tmp_path, logits_path):
        first = _service(self._config(), tmp_path).refine_lulc()
        manifest = json.loads((tmp_path / "out" / "manifests" / "refine_lulc.json").read_text(encoding="utf-8"))
        assert manifest["key"] == first.manifest.key
        assert "logits" in manifest["inputs"]
        assert "lulc_refined.tif" in manifest["outputs"]

        second = _service(self._config(), tmp_path).refine_lulc()
        assert second.cached
        assert second.manifest.key == first.manifest.key

        forced = _service(self._config(), tmp_path, force=True).refine_lulc()
        assert not forced.cached

    def test_changed_input_invalidates_cache(self, tmp_path, logits_path, rng):
        first = _service(self._config(), tmp_path).refine_lulc()
        write_geotiff(make_raster(rng.normal(size=(3, 8, 10)).astype(np.float32)), logits_path)
        second = _service(self._config(), tmp_path).refine_lulc()
        assert not second.cached
        assert second.manifest.key != first.manifest.key

    def test_changed_parameters_invalidate_cache(self, tmp_path, logits_path):
        first = _service(self._config(), tmp_path).refine_lulc()
        config = self._config()
        config["crf"]["w1"] = 1.0
        assert _service(config, tmp_path).refine_lulc().manifest.key != first.manifest.key

    def test_missing_input(self, tmp_path):
        with pytest.raises(ConfigError):
            _service(self._config(), tmp_path).refine_lulc()

    def test_crf_requires_imagery(self, tmp_path, logits_path):
        with pytest.raises(ConfigError, match="imagery"):
            _service({"paths": {"logits": "logits.tif"}}, tmp_path).refine_lulc()


class TestEvaluate:
    def _dataset(self, tmp_path, pred_shift: int = 0):
        gt_dir, pred_dir = tmp_path / "gt", tmp_path / "out" / "labels"
        records = []
        for i, trajectory in enumerate(("a", "a", "b")):
            gt = np.zeros((10, 12), dtype=np.uint8)
            gt[:, 6:] = 1 + i
            pred = np.roll(gt, pred_shift, axis=1)
            write_geotiff(_labels(gt), gt_dir / f"f{i}.tif")
            write_geotiff(_labels(pred), pred_dir / f"f{i}.tif")
            records.append(FrameRecord(f"f{i}", float(i), trajectory))
        write_frame_index(records, tmp_path / FRAME_INDEX)
        return {
            "paths": {"ground_truth": "gt", "frames": FRAME_INDEX, "output_dir": "out"},
            "evaluation": {"class_sets": ["synth4", "synth3"]},
        }

    def test_perfect_prediction(self, tmp_path):
        result = _service(self._dataset(tmp_path), tmp_path).evaluate()
        summary = result.table.set_index("class_set")
        assert summary.loc["synth4", "dataset_miou"] == pytest.approx(1.0)
        assert summary.loc["synth4", "trajectory_avg_miou"] == pytest.approx(1.0)
        assert summary.loc["synth4", "frames"] == 3
        assert summary.loc["synth4", "trajectories"] == 2
        assert result.succeeded == ["f0", "f1", "f2"]

    def test_outputs(self, tmp_path):
        _service(self._dataset(tmp_path, pred_shift=2), tmp_path).evaluate()
        per_class = pd.read_csv(tmp_path / "out" / "metrics" / "per_class_iou.csv")
        assert set(per_class["trajectory"]) == {"a", "b", "dataset"}
        assert set(per_class["class_set"]) == {"synth4", "synth3"}
        summary = pd.read_csv(tmp_path / "out" / "metrics" / "summary.csv")
        assert (summary["dataset_miou"] < 1.0).all()

    def test_missing_predictions_are_skipped(self, tmp_path):
        config = self._dataset(tmp_path)
        (tmp_path / "out" / "labels" / "f2.tif").unlink()
        result = _service(config, tmp_path).evaluate()
        assert result.succeeded == ["f0", "f1"]
        assert result.table.set_index("class_set").loc["synth4", "trajectories"] == 1

    def test_nothing_to_evaluate(self, tmp_path):
        config = self._dataset(tmp_path)
        config["evaluation"]["stage"] = "projected"
        with pytest.raises(DataError):
            _service(config, tmp_path).evaluate()


@pytest.mark.slow
class TestSyntheticPipeline:
    CONFIG = {
        "synth": {"size": 128, "coarse_resolution": 8.0, "frames": 3, "altitude": [40.0, 50.0]},
        "camera": {"fx": 80.0, "fy": 80.0, "cx": 40.0, "cy": 32.0, "width": 80, "height": 64},
        "render": {"grid": [48, 64]},
        "masks": {"slic": {"n_segments": 50}},
        "seed": 3,
    }

    def test_synth_then_all_stages(self, tmp_path):
        synth = _service({**self.CONFIG, "paths": {"output_dir": "dataset"}}, tmp_path).synth()
        dataset = tmp_path / "dataset"
        assert len(synth.succeeded) == 3
        assert len(read_frame_index(dataset / "frames")) == 3

        factory = load_config(dataset / "config.json", environ={})
        config = factory.config.model_copy(
            update={"crf": factory.config.crf.model_copy(update={"enabled": False})},
        )
        service = LabelPipelineService(PipelineConfigFactory(config, factory.base_dir))

        service.refine_lulc()
        rendered = service.render()
        assert rendered.succeeded == ["traj_0000", "traj_0001", "traj_0002"]
        assert not rendered.failed
        refined = service.refine_labels()
        assert len(refined.succeeded) == 3
        evaluation = service.evaluate()
        assert evaluation.table["dataset_miou"].between(0.0, 1.0).all()

        assert service.render().cached
