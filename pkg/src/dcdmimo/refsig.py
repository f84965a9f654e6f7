"""NR type 1 DMRS resource grids for up to 8 MIMO layers.

Layers are orthogonalized by a half-window cyclic shift (sign alternation
over the pilot comb), by the frequency comb offset, and by a length-2 time
cover code over the two adjacent DMRS symbols.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

GOLD_SKIP = 1600
_MAX_LAYERS = 8

# (w_cs, w_fdm, w_cdm) per layer 1..8
_LAYER_TABLE = {
    1: ((1, 1), 0, (1, 1)),
    2: ((1, -1), 0, (1, 1)),
    3: ((1, 1), 1, (1, 1)),
    4: ((1, -1), 1, (1, 1)),
    5: ((1, 1), 0, (1, -1)),
    6: ((1, -1), 0, (1, -1)),
    7: ((1, 1), 1, (1, -1)),
    8: ((1, -1), 1, (1, -1)),
}


@dataclass(frozen=True)
class GoldConfig:
    """Length-31 Gold sequence request.

    ``seed_init`` initializes the second shift register (31 bits); the first
    register always starts at ``1, 0, ..., 0``.
    """
    seed_init: int
    skip: int = GOLD_SKIP
    length: int = 0

    def __post_init__(self):
        if not 0 < self.seed_init < 2**31:
            raise ValueError(f"seed_init must be a nonzero 31-bit integer, got {self.seed_init}")
        if self.skip < 0:
            raise ValueError("skip must be nonnegative")
        if self.length < 0:
            raise ValueError("length must be nonnegative")


@dataclass(frozen=True)
class DmrsLayerConfig:
    layer: int
    w_cs: tuple
    w_fdm: int
    w_cdm: tuple
    ell0: int = 2
    num_dmrs_symbols: int = 2

    def __post_init__(self):
        if self.num_dmrs_symbols not in (1, 2):
            raise ValueError("num_dmrs_symbols must be 1 or 2")
        if self.num_dmrs_symbols == 1 and self.w_cdm[1] != self.w_cdm[0]:
            raise ValueError(f"layer {self.layer} needs two DMRS symbols for its time cover code")


@dataclass(frozen=True)
class PilotPattern:
    """Reference-symbol positions of one comb on a K x L grid.

    Positions are 0-based. The vectorized index of resource element
    ``(k, l)`` is ``l * K + k`` (subcarrier fastest).
    """
    K: int
    L: int = 14
    w_fdm: int = 0
    ell0: int = 2
    num_dmrs_symbols: int = 2

    def __post_init__(self):
        if self.K <= 0 or self.K % 2:
            raise ValueError("K must be a positive even number")
        if self.w_fdm not in (0, 1):
            raise ValueError("w_fdm must be 0 or 1")
        if not 0 <= self.ell0 <= self.L - self.num_dmrs_symbols:
            raise ValueError("DMRS symbols do not fit in the slot")

    @property
    def pilot_subcarriers(self):
        return np.arange(self.w_fdm, self.K, 2)

    @property
    def dmrs_symbols(self):
        return np.arange(self.ell0, self.ell0 + self.num_dmrs_symbols)

    @property
    def num_pilots(self):
        return self.K // 2

    @property
    def data_symbols(self):
        return np.setdiff1d(np.arange(self.L), self.dmrs_symbols)

    def indices(self):
        """Sorted vectorized indices of the pilot resource elements."""
        k = self.pilot_subcarriers
        return np.sort((self.dmrs_symbols[:, None] * self.K + k[None, :]).ravel())

    def mask(self):
        m = np.zeros((self.K, self.L), dtype=bool)
        m[np.ix_(self.pilot_subcarriers, self.dmrs_symbols)] = True
        return m


def pattern_for_layer(cfg, K, L=14):
    return PilotPattern(K=K, L=L, w_fdm=cfg.w_fdm, ell0=cfg.ell0,
                        num_dmrs_symbols=cfg.num_dmrs_symbols)


def _lfsr_block(state, taps, n_out):
    # x[n + 31] = xor of x[n + t] for t in taps; up to 28 new values per step
    x = np.zeros(31 + n_out, dtype=np.uint8)
    x[:31] = state
    pos = 0
    while pos < n_out:
        step = min(28, n_out - pos)
        new = np.zeros(step, dtype=np.uint8)
        for t in taps:
            new ^= x[pos + t:pos + t + step]
        x[pos + 31:pos + 31 + step] = new
        pos += step
    return x


@lru_cache(maxsize=64)
def _gold_cached(seed_init, skip, length):
    n = skip + length
    x1_init = np.zeros(31, dtype=np.uint8)
    x1_init[0] = 1
    x2_init = np.array([(seed_init >> i) & 1 for i in range(31)], dtype=np.uint8)
    x1 = _lfsr_block(x1_init, (0, 3), n)
    x2 = _lfsr_block(x2_init, (0, 1, 2, 3), n)
    c = x1[skip:skip + length] ^ x2[skip:skip + length]
    c.setflags(write=False)
    return c


def gold_sequence(cfg):
    """Pseudo-noise bits ``c(n) = x1(n + skip) xor x2(n + skip)``.

    ``x1`` follows ``x^31 + x^3 + 1`` and ``x2`` follows
    ``x^31 + x^3 + x^2 + x + 1``, as in the NR pseudo-random sequence.
    """
    return _gold_cached(cfg.seed_init, cfg.skip, cfg.length).copy()


def dmrs_cinit(slot=0, symbol=2, n_id=0, n_symb=14):
    """NR-style DMRS scrambling seed for one OFDM symbol."""
    return ((2**17) * (n_symb * slot + symbol + 1) * (2 * n_id + 1) + 2 * n_id) % 2**31


def qpsk_map(bits):
    """Map bit pairs to unit-modulus QPSK: ``((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)``."""
    bits = np.asarray(bits)
    if bits.size % 2:
        raise ValueError(f"QPSK needs an even number of bits, got {bits.size}")
    b = bits.reshape(-1, 2).astype(np.float64)
    return ((1 - 2 * b[:, 0]) + 1j * (1 - 2 * b[:, 1])) / np.sqrt(2)


def layer_weights(i, ell0=2, num_dmrs_symbols=2):
    """Row of CS, FDM and CDM weights for MIMO layer ``i`` (1-based)."""
    if i not in _LAYER_TABLE:
        raise ValueError(f"layer index must be in 1..{_MAX_LAYERS}, got {i}")
    w_cs, w_fdm, w_cdm = _LAYER_TABLE[i]
    return DmrsLayerConfig(layer=i, w_cs=w_cs, w_fdm=w_fdm, w_cdm=w_cdm,
                           ell0=ell0, num_dmrs_symbols=num_dmrs_symbols)


def dmrs_grid(layer_cfg, pattern, s):
    """Reference-signal grid ``a[k, l]`` of one layer, zero off the pilots.

    ``a[k, l] = cs(k) * fdm(k) * cdm(l) * s[k // 2]`` with
    ``cs(k) = w_cs[(k // 2) % 2]``, ``fdm(k) = [k % 2 == w_fdm]`` and
    ``cdm(l0 + d) = w_cdm[d]``.
    """
    if (pattern.w_fdm, pattern.ell0, pattern.num_dmrs_symbols) != (
            layer_cfg.w_fdm, layer_cfg.ell0, layer_cfg.num_dmrs_symbols):
        raise ValueError(f"pilot pattern does not match layer {layer_cfg.layer}")
    s = np.asarray(s, dtype=np.complex128)
    k = pattern.pilot_subcarriers
    if s.size <= k[-1] // 2:
        raise ValueError(f"sequence of length {s.size} too short for K={pattern.K}")
    m = k // 2
    freq = np.asarray(layer_cfg.w_cs, dtype=np.float64)[m % 2] * s[m]
    grid = np.zeros((pattern.K, pattern.L), dtype=np.complex128)
    for d, ell in enumerate(pattern.dmrs_symbols):
        grid[k, ell] = layer_cfg.w_cdm[d] * freq
    return grid


def dmrs_sequence(K, seed_init=None):
    """QPSK base sequence covering ``K`` subcarriers (``K // 2`` symbols)."""
    if seed_init is None:
        seed_init = dmrs_cinit()
    bits = gold_sequence(GoldConfig(seed_init=seed_init, length=K))
    return qpsk_map(bits)
