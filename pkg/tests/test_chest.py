import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dcdmimo import channel, chest, refsig
from dcdmimo.refsig import PilotPattern

DF = 120e3
TAU = 0.01 / DF


def lorentz(d, tau=TAU):
    return 1.0 / (1.0 - 2j * math.pi * tau * DF * d)


def dense_oracle(pattern, tau, snr):
    """R_ld (R_dd + I/snr)^-1 with an explicit inverse."""
    k = np.arange(pattern.K)
    p = pattern.pilot_subcarriers
    R_ld = lorentz(k[:, None] - p[None, :], tau)
    R_dd = lorentz(p[:, None] - p[None, :], tau)
    return R_ld @ np.linalg.inv(R_dd + np.eye(p.size) / snr)


def toy_bank(K=8, L=4, ell0=1, snr=10.0, kc=None, w_fdm=0):
    p = PilotPattern(K=K, L=L, w_fdm=w_fdm, ell0=ell0, num_dmrs_symbols=2)
    return chest.interpolator_bank(p, TAU, snr, kc)


class TestVec:
    def test_subcarrier_fastest(self):
        g = np.arange(6).reshape(3, 2)  # K=3, L=2
        np.testing.assert_array_equal(chest.vec(g), [0, 2, 4, 1, 3, 5])
        np.testing.assert_array_equal(chest.unvec(chest.vec(g), 3, 2), g)


class TestLs:
    def test_despread(self):
        p = PilotPattern(K=8, L=4, ell0=1)
        a = refsig.dmrs_grid(refsig.layer_weights(1, ell0=1), p, refsig.dmrs_sequence(8))
        h = 0.3 - 0.7j
        raw = chest.ls_pilot_estimate(h * a, a, p)
        np.testing.assert_allclose(raw[p.indices()], h, atol=1e-15)
        assert np.count_nonzero(raw) == p.indices().size

    def test_non_unit_pilots(self):
        p = PilotPattern(K=8, L=4, ell0=1)
        a = 2 * p.mask().astype(complex)
        with pytest.raises(ValueError):
            chest.ls_pilot_estimate(a, a, p)


class TestAf:
    @pytest.mark.parametrize("K,snr", [(16, 1.0), (32, 10.0), (128, 100.0), (128, 0.1)])
    def test_full_window_equals_dense_oracle(self, K, snr):
        p = PilotPattern(K=K)
        np.testing.assert_allclose(chest.build_Af(p, TAU, snr, kc=p.num_pilots),
                                   dense_oracle(p, TAU, snr), atol=1e-12, rtol=0)

    def test_banded_support(self):
        p = PilotPattern(K=64)
        A = chest.build_Af(p, TAU, 10.0, kc=5)
        assert np.all(np.count_nonzero(A, axis=1) == 5)
        # subcarrier 0 uses pilots 0..4; the last one the top five
        assert set(np.flatnonzero(A[0])) == set(range(5))
        assert set(np.flatnonzero(A[-1])) == set(range(27, 32))

    def test_tie_breaks_to_lower_pilot(self):
        p = PilotPattern(K=8, w_fdm=0)
        # subcarrier 1 is equidistant from pilots 0 and 2
        np.testing.assert_array_equal(chest.zoh_Af(p)[1], [1, 0, 0, 0])
        np.testing.assert_array_equal(chest.zoh_Af(p)[3], [0, 1, 0, 0])
        np.testing.assert_array_equal(chest.zoh_Af(p)[7], [0, 0, 0, 1])

    def test_noise_free_interpolates_pilots(self):
        # wider delay spread keeps the pilot correlation well conditioned
        tau = 0.05 / DF
        p = PilotPattern(K=16)
        A = chest.build_Af(p, tau, math.inf)
        np.testing.assert_allclose(A[p.pilot_subcarriers], np.eye(p.num_pilots), atol=1e-9)

    def test_noise_free_ill_conditioned(self):
        with pytest.raises(ValueError):
            chest.build_Af(PilotPattern(K=128), TAU, math.inf)

    def test_shrinks_at_low_snr(self):
        p = PilotPattern(K=32)
        norms = [np.linalg.norm(chest.build_Af(p, TAU, s)) for s in (1e-4, 1e-2, 1.0, 1e2)]
        assert norms == sorted(norms)
        assert norms[0] < 1e-2

    @given(st.integers(4, 32))
    def test_dc_gain_approaches_one(self, kc):
        # a flat channel is nearly reproduced at high SNR once the window has a few pilots
        A = chest.build_Af(PilotPattern(K=64), TAU, 1e6, kc=kc)
        assert np.abs(A.sum(axis=1) - 1).max() < 0.005

    def test_single_pilot_window_extrapolates_with_correlation(self):
        # kc = 1: off-pilot subcarriers get the model correlation to their pilot
        A = chest.build_Af(PilotPattern(K=64), TAU, 1e12, kc=1)
        assert A[1, 0] == pytest.approx(lorentz(1), rel=1e-9)

    @pytest.mark.parametrize("kc", [0, 65])
    def test_bad_window(self, kc):
        with pytest.raises(ValueError):
            chest.build_Af(PilotPattern(K=128), TAU, 1.0, kc=kc)

    def test_bad_snr(self):
        with pytest.raises(ValueError):
            chest.build_Af(PilotPattern(K=8), TAU, 0.0)


class TestApply:
    def test_at_uniform(self):
        At = chest.build_At(PilotPattern(K=8, L=14))
        np.testing.assert_array_equal(At, np.full((14, 2), 0.5))

    @pytest.mark.parametrize("w_fdm", [0, 1])
    def test_separable_equals_kronecker(self, w_fdm, rng):
        bank = toy_bank(w_fdm=w_fdm, kc=3)
        p = bank.pattern
        h_r = np.zeros((5, p.K * p.L), dtype=complex)
        h_r[:, p.indices()] = rng.standard_normal((5, p.indices().size)) + 1j
        got = chest.interpolate(h_r, bank).H
        want = (bank.full_operator() @ h_r.T).T
        np.testing.assert_allclose(chest.vec(got), want, atol=1e-12, rtol=0)

    def test_length_check(self):
        bank = toy_bank()
        with pytest.raises(ValueError):
            chest.interpolate(np.zeros(7), bank)

    def test_noiseless_single_user(self):
        pdp = channel.PdpConfig()
        cfg = refsig.layer_weights(1)
        p = refsig.pattern_for_layer(cfg, 128)
        a = refsig.dmrs_grid(cfg, p, refsig.dmrs_sequence(128))
        H = channel.gen_channel(pdp, 50, 1, 128, 4).H
        Y = channel.apply_channel(a[None], H)
        bank = chest.interpolator_bank(p, TAU, 1e6, 16)
        Hh = chest.estimate_channels(Y, [a], [p], [bank])
        assert Hh.shape == (50, 1, 128, 14)
        # estimate is constant over time (zero Doppler)
        np.testing.assert_allclose(Hh[..., 0], Hh[..., 13])
        mse = np.mean(np.abs(Hh[:, 0, :, 0] - H[:, 0]) ** 2)
        assert mse < 1e-4


def cs_setup(n_rx=200, snr=1e3):
    pdp = channel.PdpConfig()
    cfgs = [refsig.layer_weights(i) for i in (1, 2)]
    pats = [refsig.pattern_for_layer(c, 128) for c in cfgs]
    s = refsig.dmrs_sequence(128)
    grids = np.stack([refsig.dmrs_grid(c, q, s) for c, q in zip(cfgs, pats)])
    H = channel.gen_channel(pdp, n_rx, 2, 128, 1).H
    banks = [chest.interpolator_bank(q, TAU, snr, 16) for q in pats]
    return grids, pats, banks, H


class TestCyclicShiftSeparation:
    def test_second_layer_suppressed(self):
        grids, pats, banks, H = cs_setup()
        Y = channel.apply_channel(grids, H)
        Hh = chest.estimate_channels(Y, grids, pats, banks)[..., 0]
        # raw despreading would leave the full second-layer power (1.0) in each estimate
        for u in range(2):
            mse = np.mean(np.abs(Hh[:, u] - H[:, u]) ** 2)
            assert mse < 0.02


def mse_trial(snr_db, A_f, pattern, n_rx=400, seed=0):
    pdp = channel.PdpConfig()
    cfg = refsig.layer_weights(1)
    a = refsig.dmrs_grid(cfg, pattern, refsig.dmrs_sequence(pattern.K))
    H = channel.gen_channel(pdp, n_rx, 1, pattern.K, seed).H
    Y = channel.apply_channel(a[None], H, snr_db, rng=seed + 1)
    bank = chest.InterpolatorBank(A_f=A_f, A_t=chest.build_At(pattern), pattern=pattern)
    raw = chest.ls_pilot_estimate(Y, a, pattern)
    Hh = chest.interpolate(raw, bank).H[..., 0]
    return np.abs(Hh - H[:, 0]) ** 2


class TestMse:
    def test_decreases_with_snr(self):
        p = PilotPattern(K=128)
        mses = [mse_trial(s, chest.build_Af(p, TAU, 10 ** (s / 10), 16), p).mean()
                for s in (-10, -5, 0, 5, 10)]
        assert all(b < a for a, b in zip(mses, mses[1:]))

    def test_beats_zero_order_hold_at_zero_db(self):
        p = PilotPattern(K=128)
        m = mse_trial(0.0, chest.build_Af(p, TAU, 1.0, 16), p)
        z = mse_trial(0.0, chest.zoh_Af(p).astype(complex), p)
        assert m.mean() < z.mean()
