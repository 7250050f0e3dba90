"""Hot numeric kernels for the spectral advection term.

The exact Fourier convolution of (u.grad)v is the innermost loop of the whole
package (residual evaluations, Newton linearizations, property suites). It is
implemented twice:

* a numba ``@njit`` kernel (default), and
* a pure-numpy fallback, selected by setting the environment variable
  ``GRASHOF_EXPAND_NUMBA=0`` before import.

Both produce bit-comparable dense coefficient grids; ``benchmarks/bench_kernels.py``
times them against each other. An FFT-based path (zero-padded, therefore exact,
no aliasing) is provided as an optional fast alternative for dense fields.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_FLAG = os.environ.get("GRASHOF_EXPAND_NUMBA", "1").strip().lower()
_WANT_NUMBA = _ENV_FLAG not in ("0", "false", "no", "off")

try:
    if _WANT_NUMBA:
        from numba import njit
    else:
        njit = None
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None


def advect_convolve_numpy(ku, cu, kv, cv, nout):
    """Exact convolution of (u.grad)v on a dense coefficient grid.

    Args:
      ku: int64 array (Mu, 2), wavevectors of u.
      cu: complex128 array (Mu, 2), coefficients of u.
      kv, cv: same for v.
      nout: output truncation radius (max-norm).

    Returns:
      complex128 array (2*nout+1, 2*nout+1, 2); entry [kx+nout, ky+nout]
      holds the coefficient of e^{i k.x} for w[k] = sum_{p+q=k} i (u_p . q) v_q.
    """
    size = 2 * nout + 1
    grid = np.zeros((size, size, 2), dtype=np.complex128)
    if len(ku) == 0 or len(kv) == 0:
        return grid
    qdot = kv.astype(np.float64)  # (Mv, 2)
    for p in range(len(ku)):
        kx = ku[p, 0] + kv[:, 0]
        ky = ku[p, 1] + kv[:, 1]
        keep = (np.abs(kx) <= nout) & (np.abs(ky) <= nout)
        if not keep.any():
            continue
        dots = 1j * (cu[p, 0] * qdot[keep, 0] + cu[p, 1] * qdot[keep, 1])
        np.add.at(grid, (kx[keep] + nout, ky[keep] + nout), dots[:, None] * cv[keep])
    return grid


if njit is not None:

    @njit(cache=True)
    def _advect_convolve_jit(ku, cu, kv, cv, nout):  # pragma: no cover - jit
        size = 2 * nout + 1
        grid = np.zeros((size, size, 2), dtype=np.complex128)
        for p in range(ku.shape[0]):
            for q in range(kv.shape[0]):
                kx = ku[p, 0] + kv[q, 0]
                ky = ku[p, 1] + kv[q, 1]
                if kx < -nout or kx > nout or ky < -nout or ky > nout:
                    continue
                dot = 1j * (cu[p, 0] * kv[q, 0] + cu[p, 1] * kv[q, 1])
                grid[kx + nout, ky + nout, 0] += dot * cv[q, 0]
                grid[kx + nout, ky + nout, 1] += dot * cv[q, 1]
        return grid

    def advect_convolve_numba(ku, cu, kv, cv, nout):
        return _advect_convolve_jit(ku, cu, kv, cv, np.int64(nout))

else:
    advect_convolve_numba = None


def using_numba():
    return advect_convolve_numba is not None


if using_numba():
    advect_convolve = advect_convolve_numba
else:
    advect_convolve = advect_convolve_numpy


def advect_fft(ku, cu, kv, cv, nout):
    """FFT evaluation of the same convolution, zero-padded so it is exact.

    The physical grid has G >= 4*max_radius+1 points per direction, which makes
    the circular convolution agree with the linear one for all retained modes
    (no aliasing, hence the orthogonality identities survive to roundoff).
    """
    if len(ku) == 0 or len(kv) == 0:
        return np.zeros((2 * nout + 1, 2 * nout + 1, 2), dtype=np.complex128)
    nu = int(max(np.max(np.abs(ku)), 1))
    nv = int(max(np.max(np.abs(kv)), 1))
    g = 2 * (nu + nv) + 2 + (nu + nv) % 2  # even, >= 2*(nu+nv)+2 > 4*max(nu,nv)
    g = max(g, 2 * nout + 2)

    def to_grid(kk, cc):
        hat = np.zeros((g, g, 2), dtype=np.complex128)
        hat[kk[:, 0] % g, kk[:, 1] % g] = cc
        return hat

    uhat = to_grid(ku, cu)
    vhat = to_grid(kv, cv)
    freqs = np.fft.fftfreq(g, d=1.0 / g)
    u_phys = np.fft.ifft2(uhat, axes=(0, 1)) * g * g
    dvdx = np.fft.ifft2(1j * freqs[:, None, None] * vhat, axes=(0, 1)) * g * g
    dvdy = np.fft.ifft2(1j * freqs[None, :, None] * vhat, axes=(0, 1)) * g * g
    w_phys = u_phys[..., :1] * dvdx + u_phys[..., 1:] * dvdy
    what = np.fft.fft2(w_phys, axes=(0, 1)) / (g * g)

    size = 2 * nout + 1
    out = np.zeros((size, size, 2), dtype=np.complex128)
    idx = np.arange(-nout, nout + 1)
    out[:, :] = what[np.ix_(idx % g, idx % g)]
    return out


def _assemble_linearized_py(kv, cv, reps, sigmas, replut, alpha, nrad):
    m = reps.shape[0]
    out = np.zeros((2 * m, 2 * m))
    units = (1.0 + 0.0j, 1.0j)
    for r in range(m):
        krx, kry = reps[r, 0], reps[r, 1]
        lam = float(krx * krx + kry * kry)
        for part in (0, 1):
            col = part * m + r
            u = units[part]
            amps = np.zeros(m, dtype=np.complex128)
            amps[r] += lam * u
            zmodes = (
                (krx, kry, sigmas[r].astype(np.complex128) * u),
                (-krx, -kry, sigmas[r].astype(np.complex128) * np.conj(u)),
            )
            for qx, qy, cz in zmodes:
                for pidx in range(kv.shape[0]):
                    # B(v, z): i (v_p . q) z_q placed at p + q
                    kx = kv[pidx, 0] + qx
                    ky = kv[pidx, 1] + qy
                    if -nrad <= kx <= nrad and -nrad <= ky <= nrad:
                        row = replut[kx + nrad, ky + nrad]
                        if row >= 0:
                            dot = 1j * (cv[pidx, 0] * qx + cv[pidx, 1] * qy)
                            amps[row] += alpha * dot * (
                                sigmas[row, 0] * cz[0] + sigmas[row, 1] * cz[1]
                            )
                    # B(z, v): i (z_p . q) v_q placed at p + q (same k by symmetry of sum)
                    if -nrad <= kx <= nrad and -nrad <= ky <= nrad:
                        row = replut[kx + nrad, ky + nrad]
                        if row >= 0:
                            dot = 1j * (cz[0] * kv[pidx, 0] + cz[1] * kv[pidx, 1])
                            amps[row] += alpha * dot * (
                                sigmas[row, 0] * cv[pidx, 0] + sigmas[row, 1] * cv[pidx, 1]
                            )
            out[:m, col] = amps.real
            out[m:, col] = amps.imag
    return out


if njit is not None:

    @njit(cache=True)
    def _assemble_linearized_jit(kv, cv, reps, sigmas, replut, alpha, nrad):  # pragma: no cover
        m = reps.shape[0]
        out = np.zeros((2 * m, 2 * m))
        for r in range(m):
            krx, kry = reps[r, 0], reps[r, 1]
            lam = float(krx * krx + kry * kry)
            for part in range(2):
                col = part * m + r
                u = 1.0 + 0.0j if part == 0 else 1.0j
                amps = np.zeros(m, dtype=np.complex128)
                amps[r] += lam * u
                for zi in range(2):
                    if zi == 0:
                        qx, qy = krx, kry
                        cz0 = sigmas[r, 0] * u
                        cz1 = sigmas[r, 1] * u
                    else:
                        qx, qy = -krx, -kry
                        cz0 = sigmas[r, 0] * np.conj(u)
                        cz1 = sigmas[r, 1] * np.conj(u)
                    for pidx in range(kv.shape[0]):
                        kx = kv[pidx, 0] + qx
                        ky = kv[pidx, 1] + qy
                        if kx < -nrad or kx > nrad or ky < -nrad or ky > nrad:
                            continue
                        row = replut[kx + nrad, ky + nrad]
                        if row < 0:
                            continue
                        dot_vz = 1j * (cv[pidx, 0] * qx + cv[pidx, 1] * qy)
                        amps[row] += alpha * dot_vz * (
                            sigmas[row, 0] * cz0 + sigmas[row, 1] * cz1
                        )
                        dot_zv = 1j * (cz0 * kv[pidx, 0] + cz1 * kv[pidx, 1])
                        amps[row] += alpha * dot_zv * (
                            sigmas[row, 0] * cv[pidx, 0] + sigmas[row, 1] * cv[pidx, 1]
                        )
                for row in range(m):
                    out[row, col] = amps[row].real
                    out[m + row, col] = amps[row].imag
        return out

    def assemble_linearized(kv, cv, reps, sigmas, replut, alpha, nrad):
        return _assemble_linearized_jit(kv, cv, reps, sigmas, replut,
                                        np.float64(alpha), np.int64(nrad))

else:
    assemble_linearized = _assemble_linearized_py

assemble_linearized_numpy = _assemble_linearized_py
