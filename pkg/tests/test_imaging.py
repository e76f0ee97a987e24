import numpy as np
import pytest

from oracles import block_means_loop, dct_matrix
from guidedrecon.errors import ConfigurationError, DimensionError
from guidedrecon.imaging import (
    PSNR_CAP,
    BlockSamplingScheme,
    DctGuidingScheme,
    NoiseModel,
    add_noise,
    dct2,
    downsample,
    idct2,
    k_scale,
    make_guiding_basis,
    make_guiding_projector,
    make_sampling_projector,
    psnr,
    synthetic_image,
    upsample,
)
from guidedrecon.signal import verify_projector


class TestBlockSampling:
    def test_block_mean(self):
        assert downsample([[1.0, 3.0], [5.0, 7.0]], BlockSamplingScheme(2, 2)).tolist() == [[4.0]]

    def test_constant(self):
        out = downsample(np.full((6, 6), 0.37), BlockSamplingScheme(6, 3))
        assert np.allclose(out, 0.37, atol=1e-15)

    def test_ramp_against_loop(self):
        img = np.arange(16.0).reshape(4, 4)
        assert np.allclose(downsample(img, BlockSamplingScheme(4, 2)), block_means_loop(img, 2), atol=1e-14)
        assert np.allclose(downsample(img, BlockSamplingScheme(4, 2)), [[2.5, 4.5], [10.5, 12.5]])

    def test_random_against_loop(self, rng):
        img = rng.random((12, 12))
        for r in (1, 2, 3, 4, 6):
            assert np.allclose(downsample(img, BlockSamplingScheme(12, r)), block_means_loop(img, r), atol=1e-14)

    def test_upsample_replicates(self):
        assert upsample([[4.0]], BlockSamplingScheme(2, 2)).tolist() == [[4.0, 4.0], [4.0, 4.0]]

    def test_down_after_up_is_identity(self, rng):
        scheme = BlockSamplingScheme(8, 2)
        low = rng.random((4, 4))
        assert np.allclose(downsample(upsample(low, scheme), scheme), low, atol=1e-12)

    def test_adjoint_relation(self, rng):
        scheme = BlockSamplingScheme(8, 4)
        x = rng.standard_normal((2, 2))
        y = rng.standard_normal((8, 8))
        lhs = np.sum(upsample(x, scheme) * y)
        rhs = np.sum(x * 16 * downsample(y, scheme))
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_projector(self, rng):
        S = make_sampling_projector(BlockSamplingScheme(8, 2))
        x = rng.random(64)
        assert np.linalg.norm(S(S(x)) - S(x)) <= 1e-12
        rep = verify_projector(S, probes=10, seed=0)
        assert rep.max_self_adjoint_residual <= 1e-12
        assert rep.max_idempotency_residual <= 1e-12

    def test_projector_examples(self):
        S = make_sampling_projector(BlockSamplingScheme(2, 2))
        assert S([1.0, 3.0, 5.0, 7.0]).tolist() == [4.0, 4.0, 4.0, 4.0]
        S4 = make_sampling_projector(BlockSamplingScheme(4, 2))
        assert np.allclose(S4(np.full(16, 0.2)), 0.2, atol=1e-15)

    @pytest.mark.parametrize("w, r", [(6, 4), (5, 2), (0, 1), (4, 0)])
    def test_invalid_scheme(self, w, r):
        with pytest.raises(ConfigurationError):
            BlockSamplingScheme(w, r)

    def test_shape_mismatch(self):
        with pytest.raises(ConfigurationError):
            downsample(np.zeros((4, 6)), BlockSamplingScheme(4, 2))
        with pytest.raises(ConfigurationError):
            upsample(np.zeros((3, 3)), BlockSamplingScheme(4, 2))

    def test_dims(self):
        s = BlockSamplingScheme(128, 2)
        assert s.low_side == 64 and s.dim == 64 * 64


class TestDct:
    def test_constant(self):
        c = dct2(np.full((8, 8), 0.5))
        expected = np.zeros((8, 8))
        expected[0, 0] = 0.5 * 8
        assert np.allclose(c, expected, atol=1e-14)

    @pytest.mark.parametrize("n", [4, 8, 13])
    def test_matches_cosine_matrix(self, rng, n):
        C = dct_matrix(n)
        assert np.allclose(C @ C.T, np.eye(n), atol=1e-13)
        f = rng.standard_normal((n, n))
        assert np.allclose(dct2(f), C @ f @ C.T, atol=1e-12)

    def test_round_trip_and_parseval(self, rng):
        for _ in range(5):
            f = rng.standard_normal((8, 8))
            assert np.max(np.abs(idct2(dct2(f)) - f)) <= 1e-12
            assert np.linalg.norm(dct2(f)) / np.linalg.norm(f) == pytest.approx(1.0, abs=1e-12)

    def test_non_square(self):
        with pytest.raises(ConfigurationError):
            dct2(np.zeros((4, 5)))
        with pytest.raises(ConfigurationError):
            idct2(np.zeros(4))


class TestGuidingProjector:
    def test_full_band_is_identity(self, rng):
        T = make_guiding_projector(DctGuidingScheme(8, 8))
        for _ in range(3):
            x = rng.standard_normal(64)
            assert np.allclose(T(x), x, atol=1e-13)

    @pytest.mark.parametrize("k", [1, 3, 8])
    def test_constant_unchanged(self, k):
        T = make_guiding_projector(DctGuidingScheme(8, k))
        assert np.allclose(T(np.full(64, 0.3)), 0.3, atol=1e-14)

    def test_checkerboard_peak_at_highest_frequency(self):
        w = 8
        board = np.fromfunction(lambda i, j: (-1.0) ** (i + j), (w, w))
        C = dct_matrix(w)
        c = C @ board @ C.T
        assert np.unravel_index(np.argmax(np.abs(c)), c.shape) == (w - 1, w - 1)
        # the spectrum sits on odd indices only, so it is not a single coefficient
        rows, cols = np.nonzero(np.abs(c) > 1e-10)
        assert np.all(rows % 2 == 1) and np.all(cols % 2 == 1)
        mask = np.zeros((w, w))
        mask[: w // 2, : w // 2] = 1.0
        expected = C.T @ (mask * c) @ C
        T = make_guiding_projector(DctGuidingScheme(w, w // 2))
        assert np.allclose(T(board).reshape(w, w), expected, atol=1e-12)

    def test_highest_frequency_basis_image_removed(self):
        w = 8
        C = dct_matrix(w)
        top = np.outer(C[w - 1], C[w - 1])
        T = make_guiding_projector(DctGuidingScheme(w, w // 2))
        assert np.allclose(T(top), 0.0, atol=1e-13)
        assert np.allclose(make_guiding_projector(DctGuidingScheme(w, w))(top), top.reshape(-1), atol=1e-13)

    @pytest.mark.parametrize("w, k", [(8, 1), (8, 3), (16, 5), (16, 16)])
    def test_rank_by_trace(self, w, k):
        T = make_guiding_projector(DctGuidingScheme(w, k))
        eye = np.eye(w * w)
        trace = sum(T(eye[i])[i] for i in range(w * w))
        assert trace == pytest.approx(k * k, abs=1e-9)

    def test_energy_split(self, rng):
        T = make_guiding_projector(DctGuidingScheme(16, 5))
        f = rng.standard_normal(256)
        tf = T(f)
        assert np.dot(f, f) == pytest.approx(np.dot(tf, tf) + np.dot(f - tf, f - tf), rel=1e-10)

    def test_basis_reproduces_projector(self, rng):
        scheme = DctGuidingScheme(16, 6)
        basis = make_guiding_basis(scheme)
        T = make_guiding_projector(scheme)
        x = rng.standard_normal(256)
        y = basis.analysis(x)
        assert y.shape == (36,)
        assert np.allclose(basis.synthesis(y), T(x), atol=1e-13)
        # synthesis is an isometry
        assert np.linalg.norm(basis.synthesis(y)) == pytest.approx(np.linalg.norm(y), rel=1e-12)

    @pytest.mark.parametrize("k", [0, 9])
    def test_band_range(self, k):
        with pytest.raises(ConfigurationError):
            DctGuidingScheme(8, k)

    @pytest.mark.parametrize("w, r, k", [(64, 2, 8), (64, 4, 32), (32, 2, 5), (16, 8, 16)])
    def test_certified(self, w, r, k):
        for op in (make_sampling_projector(BlockSamplingScheme(w, r)), make_guiding_projector(DctGuidingScheme(w, k))):
            for P in (op, op.complement()):
                assert verify_projector(P, probes=4, seed=w + k).passes(1e-10)


class TestKScale:
    def test_value(self):
        assert k_scale(256, 2, 32) == 4.0
        assert DctGuidingScheme(128, 16).k_scale(BlockSamplingScheme(128, 2)) == 4.0

    @pytest.mark.parametrize("w, r, k", [(128, 2, 16), (128, 2, 64), (128, 2, 65), (128, 4, 64), (64, 2, 128 // 4)])
    def test_undersampling_iff_guide_larger(self, w, r, k):
        assert (k_scale(w, r, k) < 1) == (k * k > (w // r) ** 2)


class TestNoise:
    def test_zero_variance(self, rng):
        x = rng.random((4, 4))
        assert np.array_equal(add_noise(x, NoiseModel(0.0, 1)), x)

    def test_sample_variance(self):
        x = np.zeros((128, 128))
        e = add_noise(x, NoiseModel(0.001, 42)) - x
        assert abs(e.var() - 0.001) <= 0.1 * 0.001
        assert abs(e.mean()) <= 0.002

    def test_deterministic(self, rng):
        x = rng.random((8, 8))
        m = NoiseModel(0.01, 9)
        assert np.array_equal(add_noise(x, m), add_noise(x, m))
        assert not np.array_equal(add_noise(x, m), add_noise(x, NoiseModel(0.01, 10)))

    def test_negative_variance(self):
        with pytest.raises(ConfigurationError):
            NoiseModel(-1e-3, 0)


class TestPsnr:
    def test_identical_capped(self, rng):
        x = rng.random((4, 4))
        assert psnr(x, x) == PSNR_CAP == 99.0

    def test_full_scale_error(self):
        assert psnr(np.zeros(16), np.ones(16)) == pytest.approx(0.0, abs=1e-12)

    def test_rmse_tenth(self):
        assert psnr(np.zeros(16), np.full(16, 0.1)) == pytest.approx(20.0, abs=1e-12)

    def test_matches_8bit_formula(self, rng):
        f = rng.random((8, 8))
        g = f + 0.01 * rng.standard_normal((8, 8))
        rmse255 = np.sqrt(np.mean((255 * f - 255 * g) ** 2))
        assert psnr(f, g) == pytest.approx(20 * np.log10(255 / rmse255), rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            psnr(np.zeros((4, 4)), np.zeros((2, 8)))
        with pytest.raises(DimensionError):
            psnr(np.zeros(4), np.zeros(5))


def test_synthetic_image_deterministic_and_in_range():
    a = synthetic_image(128, 3)
    assert a.shape == (128, 128)
    assert np.array_equal(a, synthetic_image(128, 3))
    assert a.min() == pytest.approx(0.1) and a.max() == pytest.approx(0.9)
    assert not np.array_equal(a, synthetic_image(128, 4))
