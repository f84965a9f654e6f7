"""Compare the compiled and pure-Python DCD kernels on detector-sized problems.

Usage: python benchmarks/bench_dcd.py [--problems 1536] [--repeat 3]
"""
import argparse
import time

import numpy as np

from dcdmimo import equalizer, kernels


def make_problems(n_problems, n_rx=64, n_users=8, snr_db=0.0, seed=0):
    """Realified Gram systems like one slot of 64x8 uplink detection."""
    rng = np.random.default_rng(seed)
    shape = (n_problems, n_rx, n_users)
    H = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    bits = rng.integers(0, 2, (n_problems * n_users, 4))
    s = equalizer.qam16_map(bits).reshape(n_problems, n_users)
    sigma = 10 ** (-snr_db / 20)
    noise = sigma * (rng.standard_normal((n_problems, n_rx)) + 1j * rng.standard_normal((n_problems, n_rx))) / np.sqrt(2)
    y = np.einsum("pru,pu->pr", H, s) + noise
    G, _ = equalizer.gram(H)
    v, _ = equalizer.matched_filter(H, y)
    A, b = equalizer.realify(G, v)
    return np.ascontiguousarray(A), np.ascontiguousarray(b)


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--problems", type=int, default=1536)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    A, b = make_problems(args.problems)
    bound = equalizer.default_bound()
    params = (equalizer.default_h_step(bound), bound, np.iinfo(np.int64).max, 8)
    print(f"{args.problems} systems of size {A.shape[-1]}, default backend: {kernels.BACKEND}")

    t_py, ref = best_time(lambda: kernels.dcd_bound_batch_py(A, b, *params), args.repeat)
    mean_adds = float((ref[2][:, 0] + ref[2][:, 1]).mean())
    print(f"python  {t_py:8.3f} s  {1e6 * t_py / args.problems:9.1f} us/detection")
    if kernels.dcd_bound_batch_ext is None:
        print("compiled kernel not available")
        return 0
    t_ext, out = best_time(lambda: kernels.dcd_bound_batch_ext(A, b, *params), args.repeat)
    same = all(np.array_equal(u, v) for u, v in zip(ref, out))
    print(f"cython  {t_ext:8.3f} s  {1e6 * t_ext / args.problems:9.1f} us/detection")
    print(f"speedup {t_py / t_ext:8.1f}x   outputs identical: {same}   "
          f"mean real additions {mean_adds:.1f}")
    return 0 if same else 1


if __name__ == "__main__":
    raise SystemExit(main())
