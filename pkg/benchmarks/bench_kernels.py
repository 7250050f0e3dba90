"""Benchmark the numba advection kernel against the pure-numpy fallback.

Times the exact convolution B(u, v) at several truncation radii plus one
Newton solve, for both kernel paths. Run from the repository root:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from grashof_expand import kernels
from grashof_expand import spectral as sp
from grashof_expand import steady as st


def time_call(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(7)
    print(f"numba available: {kernels.using_numba()}")
    print(f"{'N':>4} {'modes':>6} {'numpy (ms)':>12} {'numba (ms)':>12} {'fft (ms)':>10} {'speedup':>8}")
    for n in (4, 8, 12, 16):
        u = sp.random_divfree(n, rng)
        v = sp.random_divfree(n, rng)
        ku, cu = u.packed()
        kv, cv = v.packed()
        nout = 2 * n
        t_np = time_call(kernels.advect_convolve_numpy, ku, cu, kv, cv, nout)
        t_fft = time_call(kernels.advect_fft, ku, cu, kv, cv, nout)
        if kernels.using_numba():
            kernels.advect_convolve_numba(ku, cu, kv, cv, nout)  # compile once
            t_nb = time_call(kernels.advect_convolve_numba, ku, cu, kv, cv, nout)
            ga = kernels.advect_convolve_numpy(ku, cu, kv, cv, nout)
            gb = kernels.advect_convolve_numba(ku, cu, kv, cv, nout)
            assert np.max(np.abs(ga - gb)) <= 1e-13 * max(np.max(np.abs(ga)), 1e-300)
            speed = t_np / t_nb
            print(f"{n:>4} {len(ku):>6} {1e3 * t_np:>12.3f} {1e3 * t_nb:>12.3f} "
                  f"{1e3 * t_fft:>10.3f} {speed:>8.1f}x")
        else:
            print(f"{n:>4} {len(ku):>6} {1e3 * t_np:>12.3f} {'-':>12} {1e3 * t_fft:>10.3f} {'-':>8}")

    g = sp.random_divfree(4, rng, decay=1.5)
    g = (1.0 / sp.norm_ds(g, 0)) * g
    p = st.SteadyProblem(g=g, alpha=5.0, trunc=8)
    t_solve = time_call(lambda: st.solve_steady(p), repeat=3)
    print(f"\nNewton solve at N=8, alpha=5: {1e3 * t_solve:.1f} ms "
          f"({'numba' if kernels.using_numba() else 'numpy'} kernel)")
    print("\nSet GRASHOF_EXPAND_NUMBA=0 to force the pure-numpy path.")


if __name__ == "__main__":
    main()
