"""Galerkin steady-state solver for A v + alpha B(v, v) = g with continuation.

The truncated system is solved by damped Newton iteration on the real
divergence-free degrees of freedom (one complex amplitude per conjugate-pair
representative). Linearizations are assembled densely column by column and
factored directly, which is exact and cheap at desk truncations (N <= 16).
A sweep over increasing alpha warm-starts each solve from the previous
solution and records the 2D enstrophy bound |Av| <= |g| per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from . import spectral as sp


class ContinuationError(RuntimeError):
    """A sweep step failed to converge; carries the break index and reports."""

    def __init__(self, index, reports):
        super().__init__(f"continuation broke at sweep index {index}")
        self.index = index
        self.reports = reports


@dataclass(frozen=True)
class SteadyProblem:
    """Forcing g, nonlinearity weight alpha and Galerkin radius N.

    The actual Grashof number of the problem is alpha * |g|.
    """

    g: "sp.SpectralField"
    alpha: float
    trunc: int

    def __post_init__(self):
        if sp.norm_ds(self.g, 0) == 0.0:
            raise ValueError("forcing g must be nonzero")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.trunc < self.g.trunc or any(
            max(abs(k[0]), abs(k[1])) > self.trunc for k in self.g.modes
        ):
            raise ValueError("truncation radius must cover the forcing modes")


@dataclass
class SolveReport:
    solution: "sp.SpectralField"
    residual_h: float
    newton_iters: int
    bound_check: float          # |Av| / |g|
    converged: bool
    message: str = ""
    condition: float | None = None
    residual_history: list = field(default_factory=list)


def residual(v, p):
    """Galerkin residual P_N(A v + alpha B(v, v) - g) at radius p.trunc."""
    av = sp.apply_fractional(v, 1.0)
    bvv = sp.bilinear_b(v, v, retruncate=p.trunc)
    return sp.project_trunc(sp.lin_comb([1.0, p.alpha, -1.0], [av, bvv, p.g]), p.trunc)


def manufactured_force(v, alpha):
    """g = A v + alpha B(v, v); residual(v, (g, alpha, N >= 2*v.trunc)) = 0 exactly."""
    return sp.lin_comb([1.0, float(alpha)], [sp.apply_fractional(v, 1.0), sp.bilinear_b(v, v)])


# --- real degree-of-freedom mapping -----------------------------------------


def _dof_maps(n):
    reps = sp.representative_modes(n)
    sigmas = np.array([sp.sigma(k) for k in reps])
    reparr = np.array(reps, dtype=np.int64)
    replut = -np.ones((2 * n + 1, 2 * n + 1), dtype=np.int64)
    for i, k in enumerate(reps):
        replut[k[0] + n, k[1] + n] = i
    return reps, sigmas, reparr, replut


def _field_to_vec(v, reps, sigmas):
    amps = np.zeros(len(reps), dtype=np.complex128)
    for i, k in enumerate(reps):
        c = v.modes.get(k)
        if c is not None:
            amps[i] = sigmas[i, 0] * c[0] + sigmas[i, 1] * c[1]
    return np.concatenate([amps.real, amps.imag])


def _vec_to_field(x, reps, sigmas, n):
    m = len(reps)
    amps = x[:m] + 1j * x[m:]
    modes = {}
    for i, k in enumerate(reps):
        c = amps[i] * sigmas[i]
        if c[0] != 0 or c[1] != 0:
            modes[k] = c
            modes[(-k[0], -k[1])] = np.conj(c)
    return sp.SpectralField(n, modes, check=False)


def _linearized_matrix(v, p, maps):
    """Dense real matrix of z -> P_N(A z + alpha (B(v,z) + B(z,v)))."""
    reps, sigmas, reparr, replut = maps
    kv, cv = v.packed()
    return kernels.assemble_linearized(kv, cv, reparr, sigmas, replut, p.alpha, p.trunc)


def _linearized_matrix_fields(v, p, maps):
    """Field-by-field column assembly; the dual route for testing the kernel."""
    reps, sigmas, _, _ = maps
    m = len(reps)
    cols = np.zeros((2 * m, 2 * m))
    for i, k in enumerate(reps):
        for part in (0, 1):
            c = sigmas[i].astype(np.complex128) * (1.0 if part == 0 else 1j)
            z = sp.SpectralField(
                p.trunc, {k: c, (-k[0], -k[1]): np.conj(c)}, check=False
            )
            az = sp.apply_fractional(z, 1.0)
            bz = sp.bilinear_bs(v, z, retruncate=p.trunc)
            img = sp.lin_comb([1.0, p.alpha], [az, bz])
            cols[:, part * m + i] = _field_to_vec(img, reps, sigmas)
    return cols


def solve_steady(p, initial=None, tol=None, max_iters=50, max_halvings=20):
    """Damped Newton iteration for the steady problem.

    Deterministic: identical inputs give bit-identical reports. After the
    residual passes the tolerance one extra full step is taken (quadratic
    convergence makes it nearly free), so converged solutions sit at the
    roundoff floor rather than just below ``tol``.

    Returns a SolveReport; ``converged`` is False after ``max_iters`` Newton
    steps or a singular linearization (condition estimate attached).
    """
    gnorm = sp.norm_ds(p.g, 0)
    tol = tol if tol is not None else 1e-12 * max(1.0, gnorm)
    maps = _dof_maps(p.trunc)
    reps, sigmas = maps[0], maps[1]
    v = initial if initial is not None else sp.zero_field(p.trunc)
    x = _field_to_vec(sp.project_trunc(v, p.trunc), reps, sigmas)

    def res_vec(xv):
        fld = _vec_to_field(xv, reps, sigmas, p.trunc)
        return _field_to_vec(residual(fld, p), reps, sigmas), fld

    fx, vfld = res_vec(x)
    rnorm = sp.TWO_PI * np.sqrt(2.0) * float(np.linalg.norm(fx))
    history = [rnorm]
    polish_left = 1
    for it in range(1, max_iters + 1):
        if rnorm <= tol:
            if polish_left == 0 or rnorm == 0.0:
                break
            polish_left -= 1
        jac = _linearized_matrix(vfld, p, maps)
        try:
            step = np.linalg.solve(jac, fx)
        except np.linalg.LinAlgError:
            cond = float(np.linalg.cond(jac))
            return SolveReport(
                solution=vfld, residual_h=rnorm, newton_iters=it - 1,
                bound_check=_bound_check(vfld, gnorm), converged=False,
                message="singular Newton system", condition=cond,
                residual_history=history,
            )
        damp = 1.0
        for _ in range(max_halvings + 1):
            xt = x - damp * step
            ft, vt = res_vec(xt)
            rt = sp.TWO_PI * np.sqrt(2.0) * float(np.linalg.norm(ft))
            if rt < rnorm or rnorm <= tol:
                break
            damp *= 0.5
        else:
            return SolveReport(
                solution=vfld, residual_h=rnorm, newton_iters=it,
                bound_check=_bound_check(vfld, gnorm), converged=False,
                message="Newton stalled (no residual decrease)",
                residual_history=history,
            )
        x, fx, vfld, rnorm = xt, ft, vt, rt
        history.append(rnorm)
    converged = rnorm <= tol
    return SolveReport(
        solution=vfld, residual_h=rnorm,
        newton_iters=len(history) - 1,
        bound_check=_bound_check(vfld, gnorm),
        converged=converged,
        message="" if converged else f"no convergence after {max_iters} iterations",
        residual_history=history,
    )


def _bound_check(v, gnorm):
    return sp.norm_ds(sp.apply_fractional(v, 1.0), 0) / gnorm


def sweep(alphas, forces, trunc, tol=None, initial=None):
    """Continuation sweep over strictly increasing alphas.

    ``forces`` is either one field (fixed g) or a list g_n matching ``alphas``.
    The solution at alpha_n seeds Newton at alpha_{n+1}; the first solve seeds
    from the Stokes solution A^{-1} g unless ``initial`` is given.

    Raises:
      ContinuationError: a step failed; carries the break index and the
        reports collected so far.
    """
    alphas = [float(a) for a in alphas]
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be strictly increasing")
    if isinstance(forces, sp.SpectralField):
        forces = [forces] * len(alphas)
    if len(forces) != len(alphas):
        raise ValueError("need one force per alpha")

    reports = []
    guess = initial
    for i, (a, g) in enumerate(zip(alphas, forces)):
        p = SteadyProblem(g=g, alpha=a, trunc=trunc)
        if guess is None:
            guess = sp.project_trunc(sp.apply_fractional(g, -1.0), trunc)
        rep = solve_steady(p, initial=guess, tol=tol)
        if not rep.converged:
            reports.append(rep)
            raise ContinuationError(i, reports)
        reports.append(rep)
        guess = rep.solution
    return reports
