"""Frequency-selective MIMO channel with an exponential power-delay profile."""
import math
from dataclasses import dataclass

import numpy as np

# fraction of exponential PDP energy allowed beyond the CP window
_MAX_TAIL_ENERGY = 0.01


@dataclass(frozen=True)
class PdpConfig:
    """Exponential PDP and OFDM numerology.

    Taps sit on a one-sample grid of ``num_taps`` bins; the CIR must fit in
    the cyclic prefix of ``cp_len`` samples.
    """
    tau_rms: float = 0.01 / 120e3
    delta_f: float = 120e3
    num_taps: int = 16
    cp_len: int = 18
    n_fft: int = 256

    def __post_init__(self):
        if not self.tau_rms > 0:
            raise ValueError("tau_rms must be positive")
        if self.delta_f <= 0 or self.n_fft <= 0:
            raise ValueError("delta_f and n_fft must be positive")
        if self.num_taps < 1:
            raise ValueError("num_taps must be positive")
        if self.num_taps > self.cp_len:
            raise ValueError(f"CIR of {self.num_taps} taps is longer than the CP ({self.cp_len})")
        if self.tail_energy > _MAX_TAIL_ENERGY:
            raise ValueError(
                f"delay spread {self.tau_rms:.3g}s leaves {self.tail_energy:.1%} of the "
                f"PDP energy beyond the CP window of {self.num_taps * self.sample_period:.3g}s")

    @property
    def sample_period(self):
        return 1.0 / (self.n_fft * self.delta_f)

    @property
    def tail_energy(self):
        return math.exp(-self.num_taps * self.sample_period / self.tau_rms)

    def tap_powers(self):
        """Exponential PDP energy in each one-sample bin, normalized to 1."""
        edges = np.arange(self.num_taps + 1) * self.sample_period
        cdf = -np.expm1(-edges / self.tau_rms)
        p = np.diff(cdf)
        return p / p.sum()


@dataclass(frozen=True)
class ChannelRealization:
    """``H[r, u, k]``: antenna ``r``, user ``u``, subcarrier ``k``.

    The response is constant over the slot (no Doppler).
    """
    H: np.ndarray
    pdp: PdpConfig

    @property
    def n_rx(self):
        return self.H.shape[0]

    @property
    def n_users(self):
        return self.H.shape[1]

    @property
    def K(self):
        return self.H.shape[2]


def freq_correlation(i, j, pdp):
    """Model correlation ``E[h_i h_j^*] = 1 / (1 - 2j pi tau_rms delta_f (i - j))``.

    Works elementwise on array arguments.
    """
    d = np.subtract(i, j, dtype=np.float64)
    return 1.0 / (1.0 - 2j * np.pi * pdp.tau_rms * pdp.delta_f * d)


def gen_channel(pdp, n_rx, n_users, K, rng_seed=None):
    """Draw i.i.d. Rayleigh channels for every antenna/user pair.

    Each tap carries the PDP mass of its one-sample bin. Its delay inside the
    bin is drawn from the exponential density restricted to that bin, so the
    subcarrier correlation equals :func:`freq_correlation` up to the energy
    truncated beyond the CP window. Subcarrier ``k`` sees the phase
    ``exp(+2j pi k delta_f tau)`` of a path with delay ``tau``.
    """
    if min(n_rx, n_users, K) <= 0:
        raise ValueError("dimensions must be positive")
    rng = np.random.default_rng(rng_seed)
    L = pdp.num_taps
    ts = pdp.sample_period
    p = pdp.tap_powers()
    shape = (n_rx, n_users, L)
    gains = np.sqrt(p / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    # inverse CDF of the exponential restricted to [0, ts)
    v = rng.random(shape)
    within = -pdp.tau_rms * np.log1p(-v * -np.expm1(-ts / pdp.tau_rms))
    delays = (np.arange(L) * ts + within) * pdp.delta_f
    k = np.arange(K)
    phase = np.exp(2j * np.pi * delays[..., None] * k)
    H = np.einsum("rul,rulk->ruk", gains, phase)
    return ChannelRealization(H=H, pdp=pdp)


def noise_variance(snr_db):
    """Noise power for unit per-user receive power at the given SNR."""
    return 10.0 ** (-np.asarray(snr_db, dtype=np.float64) / 10.0)


def complex_normal(rng, shape):
    """Circularly-symmetric unit-variance complex Gaussian samples."""
    rng = np.random.default_rng(rng)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def apply_channel(X, channel, snr_db=None, rng=None, noise=None):
    """Receive grid ``Y[r, k, l] = sum_u H[r, u, k] X[u, k, l] + eta[r, k, l]``.

    Parameters
    ----------
    X : ndarray, shape (n_users, K, L)
        Transmit grids with unit average symbol power per user.
    channel : ChannelRealization
    snr_db : float or None
        Average per-user per-antenna SNR. ``None`` means noiseless.
    rng : seed or Generator, optional
        Source of the noise when ``noise`` is not given.
    noise : ndarray, shape (n_rx, K, L), optional
        Unit-variance complex noise to be scaled by the SNR.
    """
    X = np.asarray(X)
    H = channel.H if isinstance(channel, ChannelRealization) else np.asarray(channel)
    if X.ndim != 3 or X.shape[0] != H.shape[1] or X.shape[1] != H.shape[2]:
        raise ValueError(f"transmit grid {X.shape} does not match channel {H.shape}")
    Y = np.einsum("ruk,ukl->rkl", H, X)
    if snr_db is None:
        return Y
    shape = Y.shape
    if noise is None:
        noise = complex_normal(rng, shape)
    elif noise.shape != shape:
        raise ValueError(f"noise shape {noise.shape} != receive shape {shape}")
    return Y + np.sqrt(noise_variance(snr_db)) * noise
