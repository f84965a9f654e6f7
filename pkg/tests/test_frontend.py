import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from dcdmimo.frontend import (QuantizerConfig, adc, agc_gain, ofdm_demodulate, ofdm_modulate,
                              quantize)

finite = st.floats(-50, 50, allow_nan=False)
configs = st.builds(QuantizerConfig, bits=st.integers(1, 10), clip_scale=st.floats(0.1, 8.0))


class TestQuantizer:
    def test_two_bit_levels(self):
        cfg = QuantizerConfig(bits=2, clip_scale=2.0)
        assert cfg.step == 1.0
        np.testing.assert_array_equal(cfg.levels(), [-1.5, -0.5, 0.5, 1.5])

    @pytest.mark.parametrize("x,want", [
        (0.3, 0.5), (0.0, 0.5), (-0.3, -0.5), (1.0, 1.5), (0.999, 0.5),
        (1.2, 1.5), (7.0, 1.5), (-7.0, -1.5),
    ])
    def test_examples(self, x, want):
        assert quantize(x, QuantizerConfig(2, 2.0)) == want

    def test_complex_rails_independent(self):
        q = quantize(np.array([0.3 - 1.2j]), QuantizerConfig(2, 2.0))
        np.testing.assert_array_equal(q, [0.5 - 1.5j])

    def test_one_bit_is_sign(self):
        q = quantize(np.array([-3.0, -0.1, 0.1, 9.0]), QuantizerConfig(1, 1.0))
        np.testing.assert_array_equal(q, [-0.5, -0.5, 0.5, 0.5])

    @pytest.mark.parametrize("bits,clip", [(0, 1.0), (2, 0.0), (2, -1.0)])
    def test_invalid(self, bits, clip):
        with pytest.raises(ValueError):
            QuantizerConfig(bits, clip)

    @given(configs, finite, finite)
    def test_monotone(self, cfg, a, b):
        lo, hi = min(a, b), max(a, b)
        assert quantize(lo, cfg) <= quantize(hi, cfg)

    @given(configs, finite.filter(lambda v: v != 0))
    def test_odd_symmetry(self, cfg, x):
        assert quantize(-x, cfg) == -quantize(x, cfg)

    @given(configs, arrays(np.float64, 16, elements=finite))
    def test_idempotent_and_on_levels(self, cfg, x):
        q = quantize(x, cfg)
        np.testing.assert_array_equal(quantize(q, cfg), q)
        assert np.all(np.isin(q, cfg.levels()))

    @given(configs, finite)
    def test_granular_error_bounded(self, cfg, x):
        err = abs(quantize(x, cfg) - x)
        if abs(x) < cfg.clip_scale:
            assert err <= cfg.step / 2 + 1e-12
        else:
            assert err == pytest.approx(abs(x) - (cfg.clip_scale - cfg.step / 2), abs=1e-9)


class TestAgc:
    def test_example(self):
        # |1+1j|^2 / 2 = 1 per rail: unit gain
        assert agc_gain(np.array([1 + 1j, -1 - 1j])) == pytest.approx(1.0)
        assert agc_gain(np.array([2.0 + 2.0j])) == pytest.approx(0.5)

    def test_per_axis(self):
        y = np.array([[1 + 1j, 1 - 1j], [3 + 3j, 3 - 3j]])
        np.testing.assert_allclose(agc_gain(y, axis=1), [1.0, 1 / 3])

    @given(arrays(np.complex128, 12, elements=st.complex_numbers(max_magnitude=100, allow_nan=False,
                                                                 allow_infinity=False)))
    def test_normalizes(self, y):
        if np.mean(np.abs(y) ** 2) < 1e-12:
            return
        g = agc_gain(y)
        assert np.mean(np.abs(g * y) ** 2) / 2 == pytest.approx(1.0)

    def test_zero_block(self):
        with pytest.raises(ValueError):
            agc_gain(np.zeros(4, dtype=complex))
        with pytest.raises(ValueError):
            agc_gain(np.array([]))


class TestOfdm:
    def test_round_trip(self, rng):
        grid = rng.standard_normal((3, 128, 14)) + 1j * rng.standard_normal((3, 128, 14))
        back = ofdm_demodulate(ofdm_modulate(grid, 256), 128)
        np.testing.assert_allclose(back, grid, atol=1e-12)

    def test_unitary_energy(self, rng):
        grid = rng.standard_normal((16, 2)) + 0j
        t = ofdm_modulate(grid, 64)
        assert np.sum(np.abs(t) ** 2) == pytest.approx(np.sum(np.abs(grid) ** 2))

    def test_dc_centred_bins(self):
        grid = np.zeros((4, 1), dtype=complex)
        grid[2, 0] = 1.0  # k = K/2 sits on DC
        t = ofdm_modulate(grid, 8)
        np.testing.assert_allclose(t[:, 0], np.full(8, 1 / np.sqrt(8)), atol=1e-15)

    def test_too_many_subcarriers(self):
        with pytest.raises(ValueError):
            ofdm_modulate(np.zeros((10, 1)), 8)


class TestAdc:
    def test_high_resolution_is_gain_only(self, rng):
        Y = rng.standard_normal((4, 32, 14)) + 1j * rng.standard_normal((4, 32, 14))
        for n_fft in (None, 64):
            q, g = adc(Y, QuantizerConfig(bits=16, clip_scale=8.0), n_fft)
            assert g.shape == (4,)
            np.testing.assert_allclose(q, g[:, None, None] * Y, atol=1e-3)

    def test_two_bit_output_alphabet(self, rng):
        Y = rng.standard_normal((2, 8, 3)) + 1j * rng.standard_normal((2, 8, 3))
        q, _ = adc(Y, QuantizerConfig(2, 2.0))
        assert set(np.unique(q.real)) <= {-1.5, -0.5, 0.5, 1.5}
