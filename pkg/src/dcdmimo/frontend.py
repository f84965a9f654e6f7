"""Low-resolution ADC front-end: block AGC and uniform midrise I/Q quantization."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuantizerConfig:
    """Per-rail uniform midrise quantizer.

    ``clip_scale`` is the clipping level in units of the (gain-normalized)
    rail standard deviation.
    """
    bits: int = 2
    clip_scale: float = 2.0

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("bits must be >= 1")
        if not self.clip_scale > 0:
            raise ValueError("clip_scale must be positive")

    @property
    def step(self):
        return 2.0 * self.clip_scale / 2**self.bits

    def levels(self):
        half = 2 ** (self.bits - 1)
        pos = (np.arange(half) + 0.5) * self.step
        return np.concatenate([-pos[::-1], pos])


def agc_gain(y, axis=None):
    """Gain that brings ``y`` to unit mean-square per real rail.

    With ``axis`` given, one gain per slice (e.g. one per antenna).
    """
    y = np.asarray(y)
    if y.size == 0:
        raise ValueError("AGC needs a nonempty block")
    power = np.mean(np.abs(y) ** 2, axis=axis) / 2.0
    if np.any(power == 0):
        raise ValueError("AGC cannot normalize an all-zero block")
    return 1.0 / np.sqrt(power)


def _quantize_rail(x, step, half):
    mag = np.minimum(np.floor(np.abs(x) / step), half - 1)
    return np.where(x < 0, -1.0, 1.0) * (mag + 0.5) * step


def quantize(y, cfg):
    """Quantize I and Q separately to ``2**bits`` midrise levels.

    Inputs beyond the clipping level saturate to the outermost level.
    """
    y = np.asarray(y)
    half = 2 ** (cfg.bits - 1)
    step = cfg.step
    if np.iscomplexobj(y):
        return _quantize_rail(y.real, step, half) + 1j * _quantize_rail(y.imag, step, half)
    return _quantize_rail(y, step, half)


def _bins(K, n_fft):
    # occupied subcarriers centred on DC
    if K > n_fft:
        raise ValueError(f"{K} subcarriers do not fit an FFT of size {n_fft}")
    return (np.arange(K) - K // 2) % n_fft


def ofdm_modulate(grid, n_fft):
    """Time samples (after CP removal) of a (..., K, L) grid; unitary IFFT."""
    grid = np.asarray(grid)
    K, L = grid.shape[-2:]
    full = np.zeros(grid.shape[:-2] + (n_fft, L), dtype=np.complex128)
    full[..., _bins(K, n_fft), :] = grid
    return np.fft.ifft(full, axis=-2, norm="ortho")


def ofdm_demodulate(samples, K):
    """Inverse of :func:`ofdm_modulate`: unitary FFT and occupied-bin selection."""
    samples = np.asarray(samples)
    n_fft = samples.shape[-2]
    return np.fft.fft(samples, axis=-2, norm="ortho")[..., _bins(K, n_fft), :]


def adc(Y, cfg, n_fft=None):
    """Per-antenna AGC followed by quantization.

    ``Y`` has the antenna on axis 0. With ``n_fft`` the (antenna, K, L) grid
    is converted to time samples, quantized there and transformed back, as a
    sampling ADC in front of the OFDM demodulator would see it; without it
    the grid entries are quantized directly. Returns the quantized block and
    the per-antenna gains applied before quantization.
    """
    Y = np.asarray(Y)
    x = Y if n_fft is None else ofdm_modulate(Y, n_fft)
    g = agc_gain(x.reshape(x.shape[0], -1), axis=1)
    q = quantize(x * g.reshape((-1,) + (1,) * (x.ndim - 1)), cfg)
    if n_fft is not None:
        q = ofdm_demodulate(q, Y.shape[-2])
    return q, g
