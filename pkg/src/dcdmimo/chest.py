"""Per-user 2x1D MMSE channel estimation.

Pilots are despread by the known reference signal, smoothed/interpolated
over frequency with a (banded) MMSE matrix built from the exponential-PDP
correlation model, and averaged over the DMRS symbols in time.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import freq_correlation

_MAX_COND = 1e12


@dataclass(frozen=True)
class _Pdp:
    tau_rms: float
    delta_f: float


@dataclass(frozen=True, eq=False)
class InterpolatorBank:
    A_f: np.ndarray  # (K, K_p)
    A_t: np.ndarray  # (L, L_d)
    pattern: object
    tau_rms: float = float("nan")
    snr: float = float("nan")
    kc: int = 0

    def full_operator(self):
        """Explicit ``A_t (x) A_f`` acting on the zero-padded length-K*L vector."""
        p = self.pattern
        af = np.zeros((p.K, p.K), dtype=np.complex128)
        af[:, p.pilot_subcarriers] = self.A_f
        at = np.zeros((p.L, p.L))
        at[:, p.dmrs_symbols] = self.A_t
        return np.kron(at, af)


@dataclass(frozen=True)
class ChannelEstimate:
    H: np.ndarray    # (..., K, L)
    h_r: np.ndarray  # (..., K * L), zero off the pilots


def vec(grid):
    """Stack a (..., K, L) grid into (..., K*L) with the subcarrier index fastest."""
    grid = np.asarray(grid)
    return np.swapaxes(grid, -1, -2).reshape(grid.shape[:-2] + (-1,))


def unvec(v, K, L):
    v = np.asarray(v)
    return np.swapaxes(v.reshape(v.shape[:-1] + (L, K)), -1, -2)


def ls_pilot_estimate(Y, a, pattern):
    """Despread the pilots of one user: ``Y[p] * conj(a[p])`` on the pilot set.

    ``Y`` is a (..., K, L) receive grid, ``a`` the user's (K, L) DMRS grid.
    Returns the vectorized raw estimate with zeros off the pilots.
    """
    Y = np.asarray(Y)
    mask = pattern.mask()
    pilots = a[mask]
    if not np.allclose(np.abs(pilots), 1.0, rtol=0, atol=1e-12):
        raise ValueError("reference symbols must have unit modulus")
    raw = np.where(mask, Y * np.conj(a), 0.0)
    return vec(raw)


def _nearest_window(k, pilots, kc):
    d = np.abs(pilots - k)
    return np.sort(np.argsort(d, kind="stable")[:kc])


def _solve_rows(k_out, k_in, pdp, noise_var):
    R_dd = freq_correlation(k_in[:, None], k_in[None, :], pdp)
    if noise_var == 0 and np.linalg.cond(R_dd) > _MAX_COND:
        raise ValueError("noise-free MMSE interpolation is ill-conditioned for this pattern")
    M = R_dd + noise_var * np.eye(k_in.size)
    R_ld = freq_correlation(k_out[:, None], k_in[None, :], pdp)
    return np.linalg.solve(M.T, R_ld.T).T


def build_Af(pattern, tau_rms, snr, kc=None, delta_f=120e3):
    """Frequency MMSE matrix ``R_hd_hl (R_hd_hd + sigma^2 I)^-1``, shape (K, K_p).

    Each output subcarrier uses only its ``kc`` nearest pilots; ``kc=None``
    uses all of them. ``snr`` is linear; ``inf`` means noise-free.
    """
    if not snr > 0:
        raise ValueError("snr must be positive")
    pilots = pattern.pilot_subcarriers
    n_p = pilots.size
    kc = n_p if kc is None else int(kc)
    if not 1 <= kc <= n_p:
        raise ValueError(f"kc must be in 1..{n_p}, got {kc}")
    noise_var = 0.0 if np.isinf(snr) else 1.0 / snr
    pdp = _Pdp(tau_rms, delta_f)
    A_f = np.zeros((pattern.K, n_p), dtype=np.complex128)
    windows = {}
    for k in range(pattern.K):
        sel = _nearest_window(k, pilots, kc)
        windows.setdefault(tuple(sel), []).append(k)
    for sel, ks in windows.items():
        sel = np.array(sel)
        A_f[np.ix_(ks, sel)] = _solve_rows(np.array(ks), pilots[sel], pdp, noise_var)
    return A_f


def build_At(pattern):
    """Time averaging over the DMRS symbols (zero Doppler)."""
    n = pattern.num_dmrs_symbols
    if n < 1:
        raise ValueError("need at least one DMRS symbol")
    return np.full((pattern.L, n), 1.0 / n)


def zoh_Af(pattern):
    """Baseline: copy the nearest pilot (lower one on ties) to every subcarrier."""
    pilots = pattern.pilot_subcarriers
    A = np.zeros((pattern.K, pilots.size))
    for k in range(pattern.K):
        A[k, _nearest_window(k, pilots, 1)[0]] = 1.0
    return A


@lru_cache(maxsize=128)
def interpolator_bank(pattern, tau_rms, snr, kc=None, delta_f=120e3):
    """Cached :class:`InterpolatorBank` for one pilot pattern and model."""
    A_f = build_Af(pattern, tau_rms, snr, kc, delta_f)
    A_f.setflags(write=False)
    return InterpolatorBank(A_f=A_f, A_t=build_At(pattern), pattern=pattern,
                            tau_rms=tau_rms, snr=snr, kc=kc or pattern.num_pilots)


def interpolate(h_r, bank):
    """Apply ``(A_t (x) A_f)`` to the raw pilot vector as two 1-D passes."""
    p = bank.pattern
    h_r = np.asarray(h_r)
    if h_r.shape[-1] != p.K * p.L:
        raise ValueError(f"raw estimate length {h_r.shape[-1]} != K*L = {p.K * p.L}")
    grid = unvec(h_r, p.K, p.L)
    P = grid[..., p.pilot_subcarriers, :][..., p.dmrs_symbols]
    freq = np.einsum("km,...md->...kd", bank.A_f, P)
    H = np.einsum("...kd,ld->...kl", freq, bank.A_t)
    return ChannelEstimate(H=H, h_r=h_r)


def estimate_channels(Y, dmrs_grids, patterns, banks):
    """Estimate every user's channel on every antenna.

    Parameters
    ----------
    Y : ndarray, shape (n_rx, K, L)
    dmrs_grids : sequence of (K, L) arrays, one per user
    patterns, banks : per-user pilot patterns and interpolator banks

    Returns
    -------
    ndarray, shape (n_rx, n_users, K, L)
    """
    out = []
    for a, pat, bank in zip(dmrs_grids, patterns, banks):
        h_r = ls_pilot_estimate(Y, a, pat)
        out.append(interpolate(h_r, bank).H)
    return np.stack(out, axis=1)
