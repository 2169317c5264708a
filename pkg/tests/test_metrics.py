import math

import numpy as np
import pytest

from lulc2label.config import IGNORE_LABEL
from lulc2label.errors import DataError, NumericalError
from lulc2label.metrics import (
    TrajectoryMode,
    accumulate,
    apply_class_map,
    class_map_from_dict,
    confusion,
    default_class_maps,
    miou,
    per_class_iou,
    trajectory_average,
)
from lulc2label.models import ClassMap, ConfusionMatrix


def _cm(rows) -> ConfusionMatrix:
    return ConfusionMatrix(np.array(rows))


class TestConfusion:
    def test_counts_rows_are_truth(self):
        gt = np.array([0, 0, 1, 1, 1])
        pred = np.array([0, 1, 1, 1, 0])
        np.testing.assert_array_equal(confusion(pred, gt, 2).counts, [[1, 1], [1, 2]])

    def test_ignore_in_truth_is_skipped(self):
        gt = np.array([0, IGNORE_LABEL, 1, 1], dtype=np.uint8)
        pred = np.array([0, 1, 1, 1], dtype=np.uint8)
        cm = confusion(pred, gt, 2)
        assert cm.total == 3
        np.testing.assert_array_equal(cm.counts, [[1, 0], [0, 2]])

    def test_unlabeled_prediction_counts_as_miss(self):
        gt = np.zeros((4, 4), dtype=np.uint8)
        pred = gt.copy()
        pred[:, 2:] = IGNORE_LABEL
        cm = confusion(pred, gt, 2)
        assert cm.total == 16
        np.testing.assert_array_equal(cm.counts, [[8, 0], [0, 0]])
        np.testing.assert_array_equal(cm.unlabeled, [8, 0])
        iou, mean = miou(cm)
        assert iou[0] == pytest.approx(0.5)
        assert math.isnan(iou[1])
        assert mean == pytest.approx(0.5)

    def test_unlabeled_survives_addition(self):
        gt = np.array([1, 1], dtype=np.uint8)
        first = confusion(np.array([1, IGNORE_LABEL], dtype=np.uint8), gt, 2)
        total = accumulate(first, np.array([IGNORE_LABEL, IGNORE_LABEL], dtype=np.uint8), gt)
        np.testing.assert_array_equal(total.unlabeled, [0, 3])
        assert per_class_iou(total)[1] == pytest.approx(0.25)

    def test_accumulate_adds_up(self):
        cm = confusion(np.array([0, 1]), np.array([0, 1]), 2)
        cm = accumulate(cm, np.array([1]), np.array([0]))
        np.testing.assert_array_equal(cm.counts, [[1, 1], [0, 1]])

    def test_rejects_label_outside_classes(self):
        with pytest.raises(DataError):
            confusion(np.array([2]), np.array([0]), 2)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DataError):
            confusion(np.zeros((2, 2), dtype=np.uint8), np.zeros((2, 3), dtype=np.uint8), 2)


class TestMiou:
    def test_hand_example(self):
        iou, mean = miou(_cm([[3, 1], [2, 4]]))
        assert iou == pytest.approx([0.5, 4 / 7])
        assert mean == pytest.approx(0.5357142857142857, abs=1e-12)

    def test_perfect_prediction(self):
        assert miou(_cm([[5, 0, 0], [0, 2, 0], [0, 0, 9]]))[1] == 1.0

    def test_class_without_union_is_excluded(self):
        iou, mean = miou(_cm([[4, 0, 0], [0, 0, 0], [0, 0, 2]]))
        assert math.isnan(iou[1])
        assert mean == 1.0

    def test_empty_matrix(self):
        with pytest.raises(NumericalError):
            miou(ConfusionMatrix.zeros(3))

    def test_per_class_iou_with_false_positives(self):
        np.testing.assert_allclose(per_class_iou(_cm([[0, 2], [0, 2]])), [0.0, 0.5])


class TestTrajectoryAverage:
    def test_dataset_and_trajectory_mean_differ(self):
        dataset, per_trajectory = trajectory_average(
            {"a": [_cm([[1, 0], [0, 1]])], "b": [_cm([[0, 1], [1, 0]])]},
        )
        assert dataset == pytest.approx(1 / 3)
        assert per_trajectory == pytest.approx(0.5)

    def test_summed_versus_per_image(self):
        frames = {"a": [_cm([[2, 0], [0, 0]]), _cm([[0, 0], [1, 1]])]}
        _, summed = trajectory_average(frames, TrajectoryMode.SUMMED)
        _, per_image = trajectory_average(frames, "per_image")
        assert summed == pytest.approx((2 / 3 + 1 / 2) / 2)
        assert per_image == pytest.approx(0.625)

    def test_order_does_not_matter(self, rng):
        cms = [ConfusionMatrix(rng.integers(0, 20, size=(3, 3))) for _ in range(6)]
        forward = {"x": cms[:2], "y": cms[2:5], "z": cms[5:]}
        backward = {"z": cms[5:], "y": cms[4:1:-1], "x": cms[1::-1]}
        assert trajectory_average(forward) == pytest.approx(trajectory_average(backward))

    def test_rejects_empty_input(self):
        with pytest.raises(DataError):
            trajectory_average({})
        with pytest.raises(DataError):
            trajectory_average({"a": []})


class TestClassMaps:
    def test_cm5_merges_vegetation(self):
        cm5 = default_class_maps()["cm5"]
        labels = np.arange(6, dtype=np.uint8)
        np.testing.assert_array_equal(apply_class_map(labels, cm5), [0, 1, 1, 2, 3, 4])

    def test_cm3_merges_land(self):
        cm3 = default_class_maps()["cm3"]
        np.testing.assert_array_equal(apply_class_map(np.arange(6, dtype=np.uint8), cm3), [0, 1, 1, 1, 1, 2])

    def test_ignored_ids_and_ignore_label(self):
        class_map = ClassMap("test", {0: 0, 1: 1}, frozenset({7}))
        labels = np.array([0, 7, 1, IGNORE_LABEL], dtype=np.uint8)
        np.testing.assert_array_equal(apply_class_map(labels, class_map), [0, IGNORE_LABEL, 1, IGNORE_LABEL])

    def test_unmapped_id(self):
        with pytest.raises(DataError, match=r"\[3\]"):
            apply_class_map(np.array([0, 3], dtype=np.uint8), ClassMap.identity(2))

    def test_rejects_float_labels(self):
        with pytest.raises(DataError):
            apply_class_map(np.zeros(3), ClassMap.identity(2))

    def test_from_dict(self):
        class_map = class_map_from_dict({"mapping": {"0": 1, "1": 0, "2": 0}, "ignore": [9]}, name="swap")
        assert class_map.name == "swap"
        assert class_map.num_targets == 2
        assert class_map.ignore == frozenset({9})

    def test_from_dict_without_mapping(self):
        with pytest.raises(DataError):
            class_map_from_dict({"ignore": []})
