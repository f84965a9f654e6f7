"""Pure-Python Sequential DCD with bound.

Reference implementation and import-time fallback for ``_dcd_ext``. Both
kernels perform the same floating-point operations in the same order, so
their outputs are bit-identical.

Counter columns returned by :func:`dcd_bound_batch`::

    0 additions    t = x_n +- alpha, and the N residual updates
    1 comparisons  the alpha/2 * A_nn < |r_n| test and the |t| <= B test
    2 bit_shifts   alpha/2 * A_nn, alpha * a_n (N shifts), alpha halving
    3 accepted     number of accepted coordinate updates (k)
    4 passes       number of sweeps over the N coordinates
"""
import numpy as np

N_COUNTERS = 5
ADDITIONS, COMPARISONS, BIT_SHIFTS, ACCEPTED, PASSES = range(N_COUNTERS)


def _solve(a_rows, b, h_step, bound, max_updates, max_halvings, trace=None):
    n = len(b)
    x = [0.0] * n
    r = list(b)
    diag = [a_rows[i][i] for i in range(n)]
    alpha = h_step
    m = 0
    k = 0
    updated = False
    adds = comps = shifts = passes = 0
    while m < max_halvings:
        passes += 1
        for i in range(n):
            ri = r[i]
            comps += 1
            shifts += 1
            if (alpha * 0.5) * diag[i] < abs(ri):
                if ri > 0.0:
                    t = x[i] + alpha
                else:
                    t = x[i] - alpha
                adds += 1
                comps += 1
                if abs(t) <= bound:
                    x[i] = t
                    col = a_rows[i]
                    if ri > 0.0:
                        for j in range(n):
                            r[j] -= alpha * col[j]
                    else:
                        for j in range(n):
                            r[j] += alpha * col[j]
                    adds += n
                    shifts += n
                    k += 1
                    updated = True
                    if trace is not None:
                        trace.append((passes, i, alpha if ri > 0.0 else -alpha, alpha))
        if k >= max_updates:
            break
        if updated:
            updated = False
        else:
            m += 1
            alpha *= 0.5
            shifts += 1
    return x, r, (adds, comps, shifts, k, passes), alpha


def dcd_bound_batch(A, b, h_step, bound, max_updates, max_halvings):
    """Run Sequential DCD with bound on a stack of real systems.

    Parameters
    ----------
    A : ndarray, shape (P, N, N)
        Symmetric system matrices. Row ``n`` is used as column ``a_n``.
    b : ndarray, shape (P, N)
        Right-hand sides.
    h_step : float
        Initial step size, a power of two.
    bound : float
        Box bound on every coordinate; ``inf`` disables it.
    max_updates : int
        Early-return budget on accepted updates, checked after each pass.
    max_halvings : int
        Number of step-size halvings before termination.

    Returns
    -------
    x, r : ndarray, shape (P, N)
    counts : ndarray of int64, shape (P, 5)
    alpha : ndarray, shape (P,)
        Final step size of each run.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    n_prob, n = b.shape
    x = np.zeros((n_prob, n))
    r = np.zeros((n_prob, n))
    counts = np.zeros((n_prob, N_COUNTERS), dtype=np.int64)
    alpha = np.zeros(n_prob)
    for p in range(n_prob):
        xp, rp, cp, ap = _solve(A[p].tolist(), b[p].tolist(), float(h_step),
                                float(bound), int(max_updates), int(max_halvings))
        x[p] = xp
        r[p] = rp
        counts[p] = cp
        alpha[p] = ap
    return x, r, counts, alpha


def dcd_bound_trace(A, b, h_step, bound, max_updates, max_halvings):
    """Single-system run that also returns the accepted-update sequence.

    Each trace entry is ``(pass_index, coordinate, signed_step, alpha)`` with
    1-based pass index and 0-based coordinate.
    """
    trace = []
    A = np.asarray(A, dtype=np.float64)
    x, r, cnt, alpha = _solve(A.tolist(), np.asarray(b, dtype=np.float64).tolist(),
                              float(h_step), float(bound), int(max_updates),
                              int(max_halvings), trace)
    return np.array(x), np.array(r), np.array(cnt, dtype=np.int64), alpha, trace
