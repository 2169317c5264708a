import numpy as np
import pytest
from scipy.spatial.distance import cdist

from lulc2label.crf import (
    InferenceMode,
    PermutohedralLattice,
    argmax_labels,
    gaussian_filter_bruteforce,
    mean_field_infer,
    refine_lulc,
    refine_lulc_with_marginals,
    softmax_bands,
)
from lulc2label.errors import DataError
from lulc2label.models import CompatibilityMatrix, CrfParams, Raster

from .conftest import make_raster


def _two_region_problem(rng, size: int = 24):
    """Linke Hälfte Klasse 0, rechte Hälfte Klasse 1; verrauschte Logits."""
    truth = np.zeros((size, size), dtype=np.int64)
    truth[:, size // 2 :] = 1
    logits = np.stack([truth == 0, truth == 1]).astype(np.float32) + rng.normal(0.0, 0.8, (2, size, size)).astype(
        np.float32,
    )
    image = truth[np.newaxis].astype(np.float32)
    return truth, make_raster(logits), make_raster(image)


class TestBruteForce:
    def test_two_points_without_self_term(self):
        values = np.array([[1.0], [2.0]])
        features = np.array([[0.0], [1.0]])
        out = gaussian_filter_bruteforce(values, features)
        np.testing.assert_allclose(out[:, 0], [2.0 * np.exp(-0.5), np.exp(-0.5)])

    def test_rejects_large_inputs(self):
        with pytest.raises(DataError):
            gaussian_filter_bruteforce(np.zeros((65, 64, 1)), np.zeros((65, 64, 2)))

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            gaussian_filter_bruteforce(np.zeros((4, 1)), np.zeros((5, 2)))


class TestLattice:
    def test_calibrated_total_matches_exact_sum(self, rng):
        features = rng.uniform(0.0, 3.0, size=(200, 3))
        exact = np.exp(-0.5 * cdist(features, features, "sqeuclidean")).sum()
        approx = PermutohedralLattice(features).filter(np.ones(200)).sum()
        assert approx == pytest.approx(exact, rel=1e-9)

    def test_normalized_filter_keeps_constants(self, rng):
        features = rng.normal(size=(300, 4))
        out = PermutohedralLattice(features).filter(np.full((300, 2), 3.0), normalize=True)
        np.testing.assert_allclose(out, 3.0, rtol=1e-9)

    def test_rejects_too_many_features(self):
        with pytest.raises(DataError):
            PermutohedralLattice(np.zeros((4, 17)))

    def test_rejects_nan_features(self):
        with pytest.raises(DataError):
            PermutohedralLattice(np.array([[0.0], [np.nan]]))


class TestMeanField:
    def test_zero_weights_give_argmax(self, rng):
        logits = make_raster(rng.normal(size=(3, 8, 9)).astype(np.float32))
        image = make_raster(rng.random((1, 8, 9)).astype(np.float32))
        params = CrfParams(w1=0.0, w2=0.0, theta_alpha=3.0, theta_gamma=3.0, theta_beta=(1.0,))
        labels = refine_lulc(logits, image, params)
        np.testing.assert_array_equal(labels.band(), argmax_labels(logits).band())

    def test_one_iteration_matches_hand_computation(self, rng):
        logits = rng.normal(size=(2, 3, 3))
        image = rng.random((1, 3, 3))
        params = CrfParams(w1=2.0, w2=1.5, theta_alpha=2.0, theta_gamma=1.0, theta_beta=(0.5,), num_iterations=1)

        q = mean_field_infer(
            make_raster(logits),
            make_raster(image),
            params,
            mode=InferenceMode.EXACT,
            standardize=False,
        ).q

        pixels = [(r, c) for r in range(3) for c in range(3)]
        q0 = np.exp(logits) / np.exp(logits).sum(axis=0)
        expected = np.zeros((3, 3, 2))
        for r, c in pixels:
            energy = logits[:, r, c].copy()
            for rr, cc in pixels:
                if (rr, cc) == (r, c):
                    continue
                d2 = (r - rr) ** 2 + (c - cc) ** 2
                k_app = np.exp(-d2 / (2 * 2.0**2) - (image[0, r, c] - image[0, rr, cc]) ** 2 / (2 * 0.5**2))
                k_smooth = np.exp(-d2 / (2 * 1.0**2))
                kernel = 2.0 * k_app + 1.5 * k_smooth
                # Potts: Strafe für Label l aus allen anderen Labels des Nachbarn
                energy[0] -= kernel * q0[1, rr, cc]
                energy[1] -= kernel * q0[0, rr, cc]
            expected[r, c] = np.exp(energy) / np.exp(energy).sum()
        np.testing.assert_allclose(q, expected, atol=1e-10)

    @pytest.mark.parametrize("mode", ["exact", "lattice"])
    def test_marginals_are_normalized(self, rng, mode):
        _, logits, image = _two_region_problem(rng, size=16)
        params = CrfParams(w1=3.0, w2=1.0, theta_alpha=4.0, theta_gamma=1.0, theta_beta=(0.5,))
        field = mean_field_infer(logits, image, params, mode=mode)
        assert field.q.shape == (16, 16, 2)
        assert field.is_normalized()

    def test_exact_and_lattice_agree_on_clear_regions(self, rng):
        truth, logits, image = _two_region_problem(rng)
        params = CrfParams(w1=5.0, w2=3.0, theta_alpha=5.0, theta_gamma=1.0, theta_beta=(0.5,))
        exact = refine_lulc(logits, image, params, mode="exact").band()
        lattice = refine_lulc(logits, image, params, mode="lattice").band()
        noisy = argmax_labels(logits).band()

        assert (exact == truth).mean() >= 0.95
        assert (lattice == truth).mean() >= 0.95
        assert (exact == lattice).mean() >= 0.95
        assert (lattice == truth).mean() >= (noisy == truth).mean()

    def test_log_marginals(self, rng):
        _, logits, image = _two_region_problem(rng, size=12)
        params = CrfParams(w1=1.0, w2=1.0, theta_alpha=3.0, theta_gamma=1.0, theta_beta=(1.0,))
        labels, log_q = refine_lulc_with_marginals(logits, image, params, mode="exact")
        assert log_q.dtype == np.float32
        assert log_q.data.shape == (2, 12, 12)
        np.testing.assert_allclose(np.exp(log_q.data.astype(np.float64)).sum(axis=0), 1.0, atol=1e-5)
        np.testing.assert_array_equal(labels.band(), np.argmax(log_q.data, axis=0))
        assert labels.dtype == np.uint8

    def test_strong_appearance_weight_keeps_marginals_positive(self, rng):
        truth = np.zeros((24, 24), dtype=np.int64)
        truth[:, 12:] = 1
        logits = 5.0 * np.stack([truth == 0, truth == 1]).astype(np.float32) - 2.5
        image = np.stack([truth * 60.0 + 40.0, truth * 0.3, 120.0 - truth * 50.0, truth * 4.0])
        image = (image + rng.normal(0.0, 0.01, image.shape)).astype(np.float32)
        params = CrfParams(w1=47.4, w2=3.0, theta_alpha=194.0, theta_gamma=3.0, theta_beta=(128.0, 0.22, 125.0, 2.71))

        field = mean_field_infer(make_raster(logits), make_raster(image), params, mode=InferenceMode.EXACT)
        assert field.q.min() > 0.0
        assert field.is_normalized()
        np.testing.assert_array_equal(field.argmax(), truth)

        _, log_q = refine_lulc_with_marginals(make_raster(logits), make_raster(image), params, mode="exact")
        assert np.isfinite(log_q.data).all()

    def test_coarse_logits_are_upsampled_to_image_grid(self, rng):
        coarse = make_raster(rng.normal(size=(2, 4, 4)).astype(np.float32), resolution=4.0)
        image = make_raster(rng.random((1, 16, 16)).astype(np.float32), resolution=1.0)
        params = CrfParams(w1=1.0, w2=1.0, theta_alpha=3.0, theta_gamma=1.0, theta_beta=(1.0,))
        labels = refine_lulc(coarse, image, params, mode="lattice")
        assert labels.data.shape == (1, 16, 16)
        assert labels.transform == image.transform

    def test_custom_compatibility_size(self, rng):
        _, logits, image = _two_region_problem(rng, size=8)
        params = CrfParams(w1=1.0, w2=1.0, theta_alpha=3.0, theta_gamma=1.0, theta_beta=(1.0,))
        with pytest.raises(DataError):
            mean_field_infer(logits, image, params, mu=CompatibilityMatrix.potts(3))

    def test_rejects_misaligned_inputs(self, rng):
        logits = make_raster(rng.normal(size=(2, 8, 8)).astype(np.float32))
        image = make_raster(rng.random((1, 9, 8)).astype(np.float32))
        params = CrfParams(w1=1.0, w2=1.0, theta_alpha=3.0, theta_gamma=1.0, theta_beta=(1.0,))
        with pytest.raises(DataError):
            mean_field_infer(logits, image, params)

    def test_rejects_non_finite_logits(self, rng):
        data = rng.normal(size=(2, 4, 4)).astype(np.float32)
        data[0, 0, 0] = np.inf
        image = make_raster(rng.random((1, 4, 4)).astype(np.float32))
        params = CrfParams(w1=1.0, w2=1.0, theta_alpha=3.0, theta_gamma=1.0, theta_beta=(1.0,))
        with pytest.raises(DataError):
            mean_field_infer(make_raster(data), image, params)

    def test_elevation_with_nodata_rejected(self, rng):
        _, logits, image = _two_region_problem(rng, size=8)
        dem = np.full((8, 8), 10.0, dtype=np.float32)
        dem[0, 0] = -9999.0
        params = CrfParams(w1=1.0, w2=1.0, theta_alpha=3.0, theta_gamma=1.0, theta_beta=(1.0,))
        with pytest.raises(DataError):
            mean_field_infer(logits, image, params, elevation=make_raster(dem, nodata=-9999.0))


def test_softmax_bands_sum_to_one(rng):
    raster = make_raster(rng.normal(size=(4, 5, 6)).astype(np.float32))
    probabilities = softmax_bands(raster)
    assert isinstance(probabilities, Raster)
    np.testing.assert_allclose(probabilities.data.sum(axis=0), 1.0, atol=1e-6)
