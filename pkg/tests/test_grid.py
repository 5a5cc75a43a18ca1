import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiflow.grid import (
    FilterMask,
    all_pass_mask,
    butterworth_mask,
    downsample,
    forward_fft,
    gaussian_blur,
    ideal_mask,
    inverse_fft,
    lowpass_swap,
    radial_frequency,
    upsample,
)
from oracles import brute_dft, brute_idft, butterworth_table, bilinear_upsample


def rand(shape, seed=0):
    return np.random.default_rng(seed).normal(size=shape)


class TestUpsample:
    def test_constant_nearest(self):
        out = upsample(np.full((1, 1, 1), 3.0), 2, "nearest")
        assert out.shape == (1, 2, 2)
        assert np.all(out == 3.0)

    @pytest.mark.parametrize("method", ["nearest", "bilinear", "bicubic"])
    def test_factor_one_is_identity(self, method):
        g = rand((2, 5, 3))
        assert np.array_equal(upsample(g, 1, method), g)

    def test_bilinear_2x2_against_oracle(self):
        g = np.array([[[0.0, 1.0], [2.0, 3.0]]])
        expected = bilinear_upsample(g, 2)
        np.testing.assert_allclose(upsample(g, 2, "bilinear"), expected, atol=1e-12)
        # frozen from the oracle
        np.testing.assert_allclose(
            expected[0],
            [[0, 0.25, 0.75, 1], [0.5, 0.75, 1.25, 1.5], [1.5, 1.75, 2.25, 2.5], [2, 2.25, 2.75, 3]],
            atol=1e-12,
        )

    @pytest.mark.parametrize("factor", [2, 3])
    def test_bilinear_random_against_oracle(self, factor):
        g = rand((2, 4, 5), 3)
        np.testing.assert_allclose(upsample(g, factor, "bilinear"), bilinear_upsample(g, factor), atol=1e-12)

    def test_nearest_copies_source_pixels(self):
        g = rand((1, 3, 4))
        out = upsample(g, 3, "nearest")
        for y in range(9):
            for x in range(12):
                assert out[0, y, x] == g[0, y // 3, x // 3]

    @pytest.mark.parametrize("method", ["bilinear", "bicubic"])
    def test_preserves_constants(self, method):
        out = upsample(np.full((3, 4, 4), 0.7), 4, method)
        np.testing.assert_allclose(out, 0.7, atol=1e-14)

    def test_bicubic_reproduces_linear_ramp_inside(self):
        ramp = np.tile(np.arange(8.0), (8, 1))[None]
        out = upsample(ramp, 2, "bicubic")
        expected = (np.arange(16) + 0.5) / 2 - 0.5
        # Keys cubic is exact on linear data away from the clamped border
        np.testing.assert_allclose(out[0, 8, 4:12], expected[4:12], atol=1e-12)

    def test_rejects_bad_factor(self):
        with pytest.raises(ValueError):
            upsample(np.zeros((1, 2, 2)), 0)
        with pytest.raises(ValueError):
            upsample(np.zeros((1, 2, 2)), 2, "lanczos")


class TestDownsample:
    def test_constant(self):
        np.testing.assert_allclose(downsample(np.full((1, 4, 4), 2.5), 2), 2.5)

    def test_identity(self):
        g = rand((1, 3, 3))
        assert np.array_equal(downsample(g, 1), g)

    def test_block_mean(self):
        g = np.array([[[0.0, 1.0], [2.0, 3.0]]])
        assert downsample(g, 2)[0, 0, 0] == 1.5

    def test_indivisible(self):
        with pytest.raises(ValueError):
            downsample(np.zeros((1, 3, 3)), 2)


class TestFFT:
    def test_constant_grid(self):
        s = forward_fft(np.full((1, 4, 6), 2.0))
        assert abs(s[0, 0, 0] - 2.0 * 24) < 1e-12
        s[0, 0, 0] = 0
        assert np.max(np.abs(s)) < 1e-12

    def test_impulse(self):
        g = np.zeros((1, 5, 3))
        g[0, 0, 0] = 1.0
        np.testing.assert_allclose(forward_fft(g), 1.0, atol=1e-15)

    def test_matches_brute_force_dft(self):
        g = rand((1, 5, 7), 11)
        np.testing.assert_allclose(forward_fft(g), brute_dft(g), atol=1e-9)

    def test_inverse_matches_brute_force(self):
        s = brute_dft(rand((1, 3, 4), 2))
        np.testing.assert_allclose(inverse_fft(s), brute_idft(s).real, atol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(h=st.integers(1, 16), w=st.integers(1, 16), seed=st.integers(0, 2**32 - 1))
    def test_round_trip_and_parseval(self, h, w, seed):
        g = rand((2, h, w), seed)
        back = inverse_fft(forward_fft(g))
        assert np.linalg.norm(back - g) <= 1e-10 * np.linalg.norm(g)
        energy = np.sum(np.abs(forward_fft(g)) ** 2) / (h * w)
        assert abs(energy - np.sum(g**2)) <= 1e-9 * np.sum(g**2)


class TestButterworth:
    def test_dc_is_one(self):
        assert butterworth_mask(8, 8, 0.4, 4).values[0, 0] == 1.0

    @pytest.mark.parametrize("n", [1, 2, 4, 8])
    def test_half_power_at_cutoff(self, n):
        # 4x4 bin (0, 1) sits at f = 0.5 / sqrt(2)
        d = 0.5 / np.sqrt(2.0)
        assert radial_frequency(4, 4)[0, 1] == d
        assert butterworth_mask(4, 4, d, n).values[0, 1] == 0.5

    def test_matches_per_bin_formula(self):
        np.testing.assert_allclose(butterworth_mask(8, 8, 0.4, 4).values, butterworth_table(8, 8, 0.4, 4),
                                   atol=1e-12, rtol=0)

    def test_non_square_matches_formula(self):
        np.testing.assert_allclose(butterworth_mask(6, 9, 0.3, 2).values, butterworth_table(6, 9, 0.3, 2),
                                   atol=1e-12, rtol=0)

    def test_corner_is_frequency_one(self):
        assert radial_frequency(8, 8)[4, 4] == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("d", [0.0, -0.1, 1.5])
    def test_rejects_bad_cutoff(self, d):
        with pytest.raises(ValueError):
            butterworth_mask(8, 8, d, 4)

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            butterworth_mask(8, 8, 0.4, 0)

    @settings(max_examples=40, deadline=None)
    @given(d=st.floats(0.05, 1.0), n=st.integers(1, 8))
    def test_monotone_in_radius(self, d, n):
        m = butterworth_mask(16, 16, d, n).values
        f = radial_frequency(16, 16)
        order = np.argsort(f.ravel(), kind="stable")
        vals = m.ravel()[order]
        assert np.all(np.diff(vals) <= 1e-15)
        assert np.all((m >= 0) & (m <= 1))


class TestLowpassSwap:
    def test_weight_zero_is_bit_identical(self):
        t, s = rand((3, 8, 8), 1), rand((3, 8, 8), 2)
        out = lowpass_swap(t, s, butterworth_mask(8, 8), 0.0)
        assert out.tobytes() == t.tobytes()

    def test_all_pass_full_weight_gives_source(self):
        t, s = rand((2, 6, 5), 1), rand((2, 6, 5), 2)
        np.testing.assert_allclose(lowpass_swap(t, s, all_pass_mask(6, 5), 1.0), s, atol=1e-10)

    def test_matches_dft_pipeline(self):
        t, s = rand((1, 4, 4), 5), rand((1, 4, 4), 6)
        m = butterworth_table(4, 4, 0.4, 4)
        expected = t + brute_idft(brute_dft(s) * m).real - brute_idft(brute_dft(t) * m).real
        np.testing.assert_allclose(lowpass_swap(t, s, butterworth_mask(4, 4, 0.4, 4), 1.0), expected, atol=1e-9)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            lowpass_swap(np.zeros((1, 4, 4)), np.zeros((1, 4, 5)), butterworth_mask(4, 4), 0.5)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10**6), w=st.floats(0.0, 1.0))
    def test_linear_in_weight(self, seed, w):
        t, s = rand((2, 8, 8), seed), rand((2, 8, 8), seed + 1)
        mask = butterworth_mask(8, 8, 0.4, 4)
        full = lowpass_swap(t, s, mask, 1.0)
        np.testing.assert_allclose(lowpass_swap(t, s, mask, w), t + w * (full - t), atol=1e-10)

    @pytest.mark.parametrize("mask", [ideal_mask(8, 8, 0.4), all_pass_mask(8, 8)], ids=["ideal", "all-pass"])
    def test_idempotent_at_full_weight_for_projection_masks(self, mask):
        t, s = rand((2, 8, 8), 7), rand((2, 8, 8), 8)
        once = lowpass_swap(t, s, mask, 1.0)
        twice = lowpass_swap(once, s, mask, 1.0)
        assert np.max(np.abs(twice - once)) < 1e-9

    def test_soft_mask_is_not_a_projection(self):
        # A second Butterworth swap moves the result by mask*(1-mask) of the band gap.
        t, s = rand((1, 8, 8), 7), rand((1, 8, 8), 8)
        mask = butterworth_mask(8, 8, 0.4, 4)
        once = lowpass_swap(t, s, mask, 1.0)
        twice = lowpass_swap(once, s, mask, 1.0)
        expected = np.fft.ifft2(mask.values * (1 - mask.values) * np.fft.fft2(s - t)).real
        np.testing.assert_allclose(twice - once, expected, atol=1e-12)
        assert np.max(np.abs(twice - once)) > 1e-3


def test_gaussian_blur_preserves_mean_and_smooths():
    g = rand((1, 16, 16), 4)
    b = gaussian_blur(g, 2.0)
    assert b.mean() == pytest.approx(g.mean(), abs=1e-12)
    assert b.std() < g.std()
    assert np.array_equal(gaussian_blur(g, 0.0), g)


def test_filter_mask_complement():
    m = FilterMask(np.array([[1.0, 0.25]]), 0.4, 4)
    np.testing.assert_array_equal(m.complement(), [[0.0, 0.75]])
