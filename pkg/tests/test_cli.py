import numpy as np
import pytest
from typer.testing import CliRunner

from cli import app
from lulc2label.repo import write_geotiff

from .conftest import make_raster

runner = CliRunner()


@pytest.fixture
def logits_config(tmp_path, write_config, rng):
    write_geotiff(make_raster(rng.normal(size=(3, 6, 7)).astype(np.float32)), tmp_path / "logits.tif")
    return write_config({"paths": {"logits": "logits.tif", "output_dir": "out"}, "crf": {"enabled": False}})


def test_help_lists_commands():
    result = runner.invoke(app, ["--help"])
    assert result.exit_code == 0
    for command in ("refine-lulc", "render", "refine-labels", "evaluate", "tune", "ablate", "synth"):
        assert command in result.output


class TestValidate:
    def test_valid_config(self, logits_config):
        result = runner.invoke(app, ["validate", str(logits_config)])
        assert result.exit_code == 0, result.output

    def test_missing_data_path(self, write_config):
        path = write_config({"paths": {"dem": "missing.tif"}})
        assert runner.invoke(app, ["validate", str(path)]).exit_code == 2

    def test_invalid_config(self, write_config):
        path = write_config({"crf": {"unknown": 1}})
        assert runner.invoke(app, ["validate", str(path)]).exit_code == 2

    def test_unknown_class_set(self, write_config):
        path = write_config({"evaluation": {"class_sets": ["nope"]}})
        assert runner.invoke(app, ["validate", str(path)]).exit_code == 2


class TestInfo:
    def test_label_raster(self, tmp_path, label_raster):
        write_geotiff(label_raster, tmp_path / "labels.tif")
        result = runner.invoke(app, ["info", str(tmp_path / "labels.tif")])
        assert result.exit_code == 0, result.output
        assert "uint8" in result.output

    def test_missing_file(self, tmp_path):
        assert runner.invoke(app, ["info", str(tmp_path / "nothing.tif")]).exit_code == 3

    def test_corrupt_file(self, tmp_path):
        (tmp_path / "broken.tif").write_bytes(b"not a tiff at all")
        assert runner.invoke(app, ["info", str(tmp_path / "broken.tif")]).exit_code == 3


class TestStages:
    def test_refine_lulc_and_cache(self, tmp_path, logits_config):
        first = runner.invoke(app, ["refine-lulc", "-c", str(logits_config)])
        assert first.exit_code == 0, first.output
        assert (tmp_path / "out" / "lulc_refined.tif").exists()

        second = runner.invoke(app, ["refine-lulc", "-c", str(logits_config)])
        assert second.exit_code == 0
        assert "aus dem Cache" in second.output

    def test_output_override(self, tmp_path, logits_config):
        result = runner.invoke(app, ["refine-lulc", "-c", str(logits_config), "-o", str(tmp_path / "elsewhere")])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "elsewhere" / "lulc_refined.tif").exists()

    def test_missing_input_exits_with_config_error(self, write_config):
        path = write_config({"paths": {"logits": "absent.tif"}, "crf": {"enabled": False}})
        assert runner.invoke(app, ["refine-lulc", "-c", str(path)]).exit_code == 2

    def test_render_without_refined_lulc(self, tmp_path, write_config):
        for name in ("dem.tif", "poses.csv", "frames.csv"):
            (tmp_path / name).write_text("", encoding="utf-8")
        path = write_config({"paths": {"dem": "dem.tif", "poses": "poses.csv", "frames": "frames.csv"}})
        assert runner.invoke(app, ["render", "-c", str(path)]).exit_code == 3
