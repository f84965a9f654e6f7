"""Per-subcarrier multi-user detection: Sequential DCD with bound and MMSE."""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _dcd_py, kernels
from .complexity import (OpCountLedger, cholesky_counts, diag_add_counts, gram_counts,
                         matched_filter_counts, triangular_solve_counts)

QAM16_SCALE = 1.0 / math.sqrt(10.0)
_UNLIMITED = np.iinfo(np.int64).max


def default_bound():
    """Tight box around unit-energy 16-QAM (outer level 3/sqrt(10), plus one ulp)."""
    return float(np.nextafter(3.0 * QAM16_SCALE, np.inf))


def default_h_step(bound):
    """Largest power of two not above ``bound``."""
    if math.isinf(bound):
        raise ValueError("choose h_step explicitly for an unbounded problem")
    return 2.0 ** math.floor(math.log2(bound))


def is_power_of_two(h):
    return h > 0 and math.isfinite(h) and math.frexp(h)[0] == 0.5


# -- linear algebra front end -----------------------------------------------

def gram(H):
    """``G = H^H H`` from the lower triangle and diagonal, mirrored.

    ``H`` may carry leading batch axes: (..., N_rx, N_u). The returned counts
    are for one matrix.
    """
    H = np.asarray(H)
    n_rx, n_u = H.shape[-2:]
    if n_rx < n_u:
        raise ValueError(f"need at least as many antennas as users, got {n_rx} < {n_u}")
    I, J = np.tril_indices(n_u, -1)
    G = np.zeros(H.shape[:-2] + (n_u, n_u), dtype=np.complex128)
    lower = np.einsum("...ri,...ri->...i", H[..., :, I].conj(), H[..., :, J])
    G[..., I, J] = lower
    G[..., J, I] = lower.conj()
    d = np.arange(n_u)
    G[..., d, d] = np.einsum("...ri,...ri->...i", H.real, H.real) + np.einsum(
        "...ri,...ri->...i", H.imag, H.imag)
    return G, gram_counts(n_rx, n_u)


def matched_filter(H, y):
    """``H^H y`` for (..., N_rx) or (..., N_rx, S) receive vectors; counts per vector."""
    H = np.asarray(H)
    y = np.asarray(y)
    n_rx, n_u = H.shape[-2:]
    rx_axis = -2 if y.ndim == H.ndim else -1
    if y.ndim == 0 or y.shape[rx_axis] != n_rx:
        raise ValueError(f"receive vector {y.shape} does not match {n_rx} antennas")
    Hh = np.conj(np.swapaxes(H, -1, -2))
    if y.ndim == H.ndim:
        v = Hh @ y
    else:
        v = (Hh @ y[..., None])[..., 0]
    return v, matched_filter_counts(n_rx, n_u)


def realify(G, v, atol=1e-9):
    """Equivalent real system ``A = [[Re G, -Im G], [Im G, Re G]]``, ``b = [Re v; Im v]``."""
    G = np.asarray(G)
    v = np.asarray(v)
    scale = max(1.0, float(np.max(np.abs(G)))) if G.size else 1.0
    if not np.allclose(G, np.conj(np.swapaxes(G, -1, -2)), rtol=0, atol=atol * scale):
        raise ValueError("G must be Hermitian")
    top = np.concatenate([G.real, -G.imag], axis=-1)
    bottom = np.concatenate([G.imag, G.real], axis=-1)
    A = np.concatenate([top, bottom], axis=-2)
    b = np.concatenate([v.real, v.imag], axis=-1)
    return A, b


def recombine(x):
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


# -- Sequential DCD with bound ----------------------------------------------

@dataclass
class DcdProblem:
    """Real system ``A x = b`` with DCD budgets.

    ``max_updates=None`` disables the early return on accepted updates.
    """
    A: np.ndarray
    b: np.ndarray
    h_step: float
    bound: float = math.inf
    max_updates: Optional[int] = None
    max_halvings: int = 8

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        n = self.b.shape[-1]
        if self.A.shape[-2:] != (n, n):
            raise ValueError(f"A shape {self.A.shape} does not match b shape {self.b.shape}")
        if not np.allclose(self.A, np.swapaxes(self.A, -1, -2), rtol=0, atol=1e-12 * max(1.0, np.abs(self.A).max(initial=0))):
            raise ValueError("A must be symmetric")
        diag = np.diagonal(self.A, axis1=-2, axis2=-1)
        if np.any(diag < 0):
            raise ValueError("A must have a nonnegative diagonal")
        if not is_power_of_two(self.h_step):
            raise ValueError(f"h_step must be a power of two, got {self.h_step}")
        if self.h_step > self.bound:
            raise ValueError(f"h_step {self.h_step} exceeds the bound {self.bound}")
        if self.max_halvings < 0:
            raise ValueError("max_halvings must be nonnegative")
        if self.max_updates is not None and self.max_updates < 0:
            raise ValueError("max_updates must be nonnegative")
        if self.max_updates is None and math.isinf(self.bound) and np.any(diag == 0):
            raise ValueError("a zero diagonal entry needs a finite bound or update budget")

    @property
    def N(self):
        return self.b.shape[-1]

    def kernel_args(self):
        nu = _UNLIMITED if self.max_updates is None else int(self.max_updates)
        return float(self.h_step), float(self.bound), nu, int(self.max_halvings)


@dataclass
class DcdLedger:
    """Operation counts of one or more DCD runs (summed when merged)."""
    additions: int = 0
    comparisons: int = 0
    bit_shifts: int = 0
    multiplications: int = 0
    accepted_updates: int = 0
    passes: int = 0
    final_step: float = float("nan")
    runs: int = 0

    @property
    def real_additions(self):
        """Additions with comparisons charged as additions."""
        return self.additions + self.comparisons

    def __add__(self, other):
        return DcdLedger(
            self.additions + other.additions, self.comparisons + other.comparisons,
            self.bit_shifts + other.bit_shifts, self.multiplications + other.multiplications,
            self.accepted_updates + other.accepted_updates, self.passes + other.passes,
            other.final_step if self.runs == 0 else self.final_step, self.runs + other.runs)

    @classmethod
    def from_counts(cls, counts, alpha=float("nan")):
        c = np.asarray(counts, dtype=np.int64)
        if c.ndim == 1:
            c = c[None, :]
        tot = c.sum(axis=0)
        return cls(additions=int(tot[_dcd_py.ADDITIONS]), comparisons=int(tot[_dcd_py.COMPARISONS]),
                   bit_shifts=int(tot[_dcd_py.BIT_SHIFTS]), multiplications=0,
                   accepted_updates=int(tot[_dcd_py.ACCEPTED]), passes=int(tot[_dcd_py.PASSES]),
                   final_step=float(alpha), runs=c.shape[0])


@dataclass
class EqualizerOutput:
    x: np.ndarray
    residual: Optional[np.ndarray] = None
    ledger: Optional[DcdLedger] = None
    counts: dict = field(default_factory=dict)


def dcd_bound(p, backend=None):
    """Solve one :class:`DcdProblem`; returns ``(x, r, ledger)``."""
    fn = kernels.dcd_bound_batch if backend is None else backend
    x, r, counts, alpha = fn(p.A[None], p.b[None], *p.kernel_args())
    return x[0], r[0], DcdLedger.from_counts(counts[0], alpha[0])


def dcd_bound_many(A, b, h_step, bound, max_updates=None, max_halvings=8, backend=None):
    """Batched DCD over stacked systems (P, N, N) / (P, N).

    Returns ``(x, r, counts, alpha)`` with one counter row per system; see
    :mod:`dcdmimo._dcd_py` for the column layout.
    """
    p = DcdProblem(A, b, h_step, bound, max_updates, max_halvings)
    fn = kernels.dcd_bound_batch if backend is None else backend
    A2 = p.A.reshape(-1, p.N, p.N)
    b2 = p.b.reshape(-1, p.N)
    x, r, counts, alpha = fn(A2, b2, *p.kernel_args())
    lead = p.b.shape[:-1]
    return (x.reshape(lead + (p.N,)), r.reshape(lead + (p.N,)),
            counts.reshape(lead + (counts.shape[-1],)), alpha.reshape(lead))


def dcd_trace(p):
    """Accepted-update sequence of a single run (pure-Python path)."""
    x, r, counts, alpha, trace = _dcd_py.dcd_bound_trace(p.A, p.b, *p.kernel_args())
    return x, r, DcdLedger.from_counts(counts, alpha), trace


def dcd_detect(G, v, bound=None, h_step=None, max_updates=None, max_halvings=8, backend=None):
    """Box-constrained least squares on the complex system ``G x = v`` via DCD."""
    bound = default_bound() if bound is None else bound
    h_step = default_h_step(bound) if h_step is None else h_step
    A, b = realify(G, v)
    x, r, counts, alpha = dcd_bound_many(A, b, h_step, bound, max_updates, max_halvings, backend)
    ledger = DcdLedger.from_counts(counts.reshape(-1, counts.shape[-1]), alpha.ravel()[-1])
    return EqualizerOutput(x=recombine(x), residual=r, ledger=ledger)


# -- MMSE ---------------------------------------------------------------------

def _forward(L, B):
    n = L.shape[-1]
    Z = np.zeros_like(B)
    for i in range(n):
        acc = B[..., i, :] - np.einsum("...k,...ks->...s", L[..., i, :i], Z[..., :i, :])
        Z[..., i, :] = acc / L[..., i, i, None]
    return Z


def _backward(L, Z):
    n = L.shape[-1]
    X = np.zeros_like(Z)
    Lh = np.conj(np.swapaxes(L, -1, -2))
    for i in range(n - 1, -1, -1):
        acc = Z[..., i, :] - np.einsum("...k,...ks->...s", Lh[..., i, i + 1:], X[..., i + 1:, :])
        X[..., i, :] = acc / Lh[..., i, i, None]
    return X


def mmse_detect(G, v, reg, unbiased=False):
    """``x = (G + reg I)^-1 v`` through a Cholesky factorization.

    ``v`` is (..., N) or (..., N, S) for S vectors sharing one matrix. With
    ``unbiased`` each output is divided by its effective gain
    ``1 - reg [(G + reg I)^-1]_nn``. Counts are per matrix (``diag_add``,
    ``inverse``) and per vector (``matvec``).
    """
    G = np.asarray(G, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    if not np.all(np.asarray(reg) > 0):
        raise ValueError("reg must be positive")
    n = G.shape[-1]
    single = v.ndim == G.ndim - 1
    V = v[..., None] if single else v
    reg = np.asarray(reg, dtype=np.float64)
    M = G + reg[..., None, None] * np.eye(n)
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise ValueError("G + reg I is not positive definite") from exc
    X = _backward(L, _forward(L, V))
    if unbiased:
        eye = np.broadcast_to(np.eye(n, dtype=np.complex128), M.shape)
        inv_diag = np.diagonal(_backward(L, _forward(L, eye)), axis1=-2, axis2=-1).real
        X = X / (1.0 - reg[..., None] * inv_diag)[..., None]
    x = X[..., 0] if single else X
    counts = {"diag_add": diag_add_counts(n), "inverse": cholesky_counts(n),
              "matvec": triangular_solve_counts(n)}
    return x, counts


# -- 16-QAM -------------------------------------------------------------------

def qam16_map(bits):
    """Gray 16-QAM with unit average energy; bits (b0, b1, b2, b3) per symbol.

    ``((1-2b0)(2-(1-2b2)) + j (1-2b1)(2-(1-2b3))) / sqrt(10)``.
    """
    b = np.asarray(bits).reshape(-1, 4).astype(np.float64)
    re = (1 - 2 * b[:, 0]) * (2 - (1 - 2 * b[:, 2]))
    im = (1 - 2 * b[:, 1]) * (2 - (1 - 2 * b[:, 3]))
    return (re + 1j * im) * QAM16_SCALE


def demap_qam16(x, scale=QAM16_SCALE):
    """Hard nearest-point decisions; returns bits shaped (..., 4)."""
    x = np.asarray(x)
    re, im = x.real, x.imag
    thr = 2.0 * scale
    return np.stack([re < 0, im < 0, np.abs(re) > thr, np.abs(im) > thr], axis=-1).astype(np.uint8)
