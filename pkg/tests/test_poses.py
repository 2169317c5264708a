import json
import math

import numpy as np
import pandas as pd
import pytest

from lulc2label.errors import DataError
from lulc2label.models import BodyToCamera, CameraPose, Crs
from lulc2label.render import PoseLog, interpolate_pose, read_pose_log, write_pose_log

IDENTITY = (1.0, 0.0, 0.0, 0.0)
YAW_90 = (math.cos(math.pi / 4), 0.0, 0.0, math.sin(math.pi / 4))


def _log() -> PoseLog:
    return PoseLog(
        (
            CameraPose((0.0, 0.0, 100.0), IDENTITY, timestamp=10.0),
            CameraPose((10.0, 20.0, 110.0), YAW_90, timestamp=20.0),
        ),
        Crs.utm(32),
    )


def _pose_rows(count: int = 3) -> list[dict]:
    return [
        {
            "timestamp": float(t),
            "easting": 500_000.0 + t,
            "northing": 5_300_000.0,
            "altitude": 100.0,
            "qw": 1.0,
            "qx": 0.0,
            "qy": 0.0,
            "qz": 0.0,
        }
        for t in range(count)
    ]


class TestInterpolation:
    def test_midpoint(self):
        pose = _log().at(15.0)
        assert pose.position == pytest.approx((5.0, 10.0, 105.0))
        half = math.pi / 8
        assert pose.attitude == pytest.approx((math.cos(half), 0.0, 0.0, math.sin(half)))
        assert pose.timestamp == 15.0

    def test_exact_sample_is_returned(self):
        log = _log()
        assert log.at(20.0) is log.poses[1]

    @pytest.mark.parametrize("t", [9.999, 20.001])
    def test_no_extrapolation(self, t):
        with pytest.raises(DataError):
            _log().at(t)

    def test_covers_and_span(self):
        log = _log()
        assert log.span == (10.0, 20.0)
        assert log.covers(10.0)
        assert not log.covers(25.0)

    def test_rejects_unordered_timestamps(self):
        poses = [CameraPose((0.0, 0.0, 1.0), IDENTITY, timestamp=t) for t in (1.0, 1.0)]
        with pytest.raises(DataError):
            PoseLog(tuple(poses), Crs.utm(32))
        with pytest.raises(DataError):
            interpolate_pose(poses, 1.0)

    def test_rejects_empty_log(self):
        with pytest.raises(DataError):
            PoseLog((), Crs.utm(32))


class TestReadPoseLog:
    def test_csv_with_zone_column(self, tmp_path):
        rows = _pose_rows()
        for row in rows:
            row["zone"] = 33
            row["hemisphere"] = "S"
        pd.DataFrame(rows[::-1]).to_csv(tmp_path / "poses.csv", index=False)
        log = read_pose_log(tmp_path / "poses.csv")
        assert log.crs == Crs.utm(33, "S")
        np.testing.assert_array_equal(log.timestamps, [0.0, 1.0, 2.0])

    def test_zone_from_config(self, tmp_path):
        pd.DataFrame(_pose_rows()).to_csv(tmp_path / "poses.csv", index=False)
        assert read_pose_log(tmp_path / "poses.csv", crs=Crs.utm(32)).crs == Crs.utm(32)

    def test_utm_without_zone(self, tmp_path):
        pd.DataFrame(_pose_rows()).to_csv(tmp_path / "poses.csv", index=False)
        with pytest.raises(DataError, match="Zone"):
            read_pose_log(tmp_path / "poses.csv")

    def test_geographic_json_lines(self, tmp_path):
        quaternion = {"qw": 2.0, "qx": 0.0, "qy": 0.0, "qz": 0.0}
        rows = [{"timestamp": t, "lon": 9.0, "lat": 47.0 + 0.001 * t, "altitude": 50.0, **quaternion} for t in range(2)]
        (tmp_path / "poses.jsonl").write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
        log = read_pose_log(tmp_path / "poses.jsonl")
        assert log.crs == Crs.utm(32)
        assert log.poses[0].position[0] == pytest.approx(500_000.0, abs=1e-6)
        assert log.poses[0].attitude == pytest.approx(IDENTITY)

    def test_missing_columns(self, tmp_path):
        pd.DataFrame([{"timestamp": 0.0, "easting": 1.0}]).to_csv(tmp_path / "poses.csv", index=False)
        with pytest.raises(DataError, match="fehlende Spalten"):
            read_pose_log(tmp_path / "poses.csv", crs=Crs.utm(32))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            read_pose_log(tmp_path / "nothing.csv")

    def test_body_to_camera_is_attached(self, tmp_path):
        pd.DataFrame(_pose_rows()).to_csv(tmp_path / "poses.csv", index=False)
        mount = BodyToCamera(lever_arm=(0.0, 0.0, -1.0))
        log = read_pose_log(tmp_path / "poses.csv", crs=Crs.utm(32), body_to_camera=mount)
        assert all(p.body_to_camera == mount for p in log.poses)

    def test_write_read(self, tmp_path):
        log = _log()
        write_pose_log(log, tmp_path / "out" / "poses.csv")
        loaded = read_pose_log(tmp_path / "out" / "poses.csv")
        assert loaded.crs == log.crs
        for original, reread in zip(log.poses, loaded.poses, strict=True):
            assert reread.position == pytest.approx(original.position)
            assert reread.attitude == pytest.approx(original.attitude)
