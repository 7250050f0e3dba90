"""Extraction, restructuring and verification of intrinsic asymptotic expansions.

Given a finite window v_1..v_M of a convergent sequence of fields together
with the parameters alpha_n, this module recovers expansions

    v_n = v + Gamma_{1,n} w_1 + ... + Gamma_{k,n} w_n^{(k)}

in two forms:

* ``strict``  - the constructive recursion in a nested scale Z_k = D(A^{s_k}):
  Gamma_{k,n} is the Z_{k-1} norm of the level residual, witnesses are unit
  vectors, directions are witness limits.
* ``unitary`` - the single-space refinement (default space V): directions are
  renormalized witness limits and Gamma_{k,n} is the projection of the level
  residual onto the direction. On sequences whose residual directions are
  orthogonal this reproduces closed-form coefficients to roundoff, which the
  norm-based strict recursion (norm vs projection of the residual) cannot.

Restructuring removes zero directions and normalizes the rest, preserving all
partial sums; verification re-checks every expansion axiom on the raw window.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import spectral as sp
from .seqlimit import EstimatorConfig, estimate_limit

TWO_PI = sp.TWO_PI


class NotConvergentError(RuntimeError):
    """The sample window shows no numerical convergence in Z_0."""


class StagnationError(RuntimeError):
    """Gamma_{1,n} does not decay over the window."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NestedScale:
    """Strictly decreasing exponents (s_0..s_K) defining Z_k = D(A^{s_k}).

    Regimes: ``2d-periodic`` requires s_k in (1/2, 1); ``general`` requires
    s_k in (0, 1/2); ``constant`` is the single-space family Z_k = D(A^s)
    (all exponents equal), used when expanding in one fixed space.
    """

    exponents: tuple
    regime: str = "2d-periodic"

    def __post_init__(self):
        exps = tuple(float(s) for s in self.exponents)
        object.__setattr__(self, "exponents", exps)
        if len(exps) < 2:
            raise ValueError("scale needs at least two exponents")
        if self.regime == "constant":
            if any(s != exps[0] for s in exps):
                raise ValueError("constant scale must repeat one exponent")
            return
        if any(b >= a for a, b in zip(exps, exps[1:])):
            raise ValueError("scale exponents must be strictly decreasing")
        lo, hi = (0.5, 1.0) if self.regime == "2d-periodic" else (0.0, 0.5)
        if self.regime not in ("2d-periodic", "general"):
            raise ValueError(f"unknown regime {self.regime!r}")
        if any(not lo < s < hi for s in exps):
            raise ValueError(f"{self.regime} scale exponents must lie in ({lo}, {hi})")

    @property
    def depth(self):
        return len(self.exponents) - 1

    def exponent(self, k):
        return self.exponents[k]


def default_scale_2dp(kmax=6):
    """s_k = 1/2 + 1/(2(k+2)): harmonic spacing from 3/4 decreasing toward 1/2."""
    return NestedScale(tuple(0.5 + 0.5 / (k + 2) for k in range(kmax + 1)), "2d-periodic")


def constant_scale(s, kmax=6):
    return NestedScale((float(s),) * (kmax + 1), "constant")


@dataclass(frozen=True)
class SequenceData:
    """Finite sample (v_n, alpha_n), n = 1..M, of a solution sequence."""

    fields: tuple
    alphas: tuple

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if len(self.fields) != len(self.alphas):
            raise ValueError("fields and alphas must have equal length")
        if any(a <= 0 for a in self.alphas):
            raise ValueError("alphas must be positive")

    def __len__(self):
        return len(self.fields)


@dataclass(frozen=True)
class ToleranceSet:
    """Extraction tolerances; defaults match the shipped acceptance suite."""

    floor: float = 1e-9       # relative Gamma floor vs the window Z_0 scale
    limit: float = 1e-8       # legacy Cauchy-tail gate, kept in decision records
    finite: float = 1e-10     # witness stabilization threshold (finite kind)
    zero: float = 1e-10       # zero-direction threshold, relative
    snap: float = 1e-12       # estimator component zero-snap
    cauchy: float = 0.8       # window convergence gate on increment decay
    stagnation: float = 0.9   # Gamma-ratio tail gate
    tail: int = 0             # 0 = ceil(M/3)
    kmax: int = 6

    def tail_for(self, m):
        return self.tail if self.tail > 0 else int(np.ceil(m / 3))


@dataclass
class ExpansionTerm:
    gammas: np.ndarray
    direction: "sp.SpectralField"
    witnesses: list
    estimator: str


@dataclass
class ExpansionResult:
    """Extracted expansion: limit, terms and per-level witnesses.

    ``kind`` is one of trivial / finite-unitary / infinite-unitary / degenerate
    / strict (the provisional tag for a depth-capped strict recursion); ``form``
    records whether gammas are residual norms ("strict") or projections onto
    unit directions ("unitary"). ``space`` is the single-space exponent of the
    unitary form (None for nested-scale results).
    """

    limit: "sp.SpectralField"
    terms: list
    kind: str
    form: str
    scale: NestedScale
    space: float | None
    degenerate_n: int | None
    depth_reason: str
    limit_estimator: str
    tols: ToleranceSet
    decision_log: list = field(default_factory=list)

    @property
    def depth(self):
        return len(self.terms)

    def space_exponent(self, k):
        """Exponent of the norm used for level-k directions."""
        if self.space is not None:
            return self.space
        return self.scale.exponent(min(k, self.scale.depth))


# ---------------------------------------------------------------------------
# Shared window machinery
# ---------------------------------------------------------------------------


class _Window:
    """Window of fields flattened onto a shared sorted mode list."""

    def __init__(self, data):
        self.keys = sp.union_modes(data.fields)
        rows = sp.coeff_rows(data.fields, self.keys)
        m, nk, _ = rows.shape
        self.m = m
        self.nk = nk
        self.flat = rows.reshape(m, 2 * nk)
        self.alphas = np.array(data.alphas)
        self.xs = 1.0 / self.alphas
        self.trunc = max(f.trunc for f in data.fields)
        self._wcache = {}

    def weights(self, s):
        s = float(s)
        if s not in self._wcache:
            w = sp.mode_weights(self.keys, s)
            self._wcache[s] = np.repeat(w, 2)
        return self._wcache[s]

    def norms(self, flat_rows, s):
        w = self.weights(s)
        return TWO_PI * np.sqrt(np.sum(w * np.abs(flat_rows) ** 2, axis=1))

    def norm1(self, row, s):
        w = self.weights(s)
        return TWO_PI * float(np.sqrt(np.sum(w * np.abs(row) ** 2)))

    def inner(self, rows, row, s):
        """Real D(A^s) inner products of each row of ``rows`` with ``row``."""
        w = self.weights(s)
        return TWO_PI**2 * np.real(np.sum(w * rows * np.conj(row), axis=1))

    def to_field(self, row):
        return sp.field_from_row(self.keys, row.reshape(self.nk, 2), self.trunc)


def _check_convergent(win, s0, tols):
    """Numerical Cauchy criterion in Z_0 over the window."""
    dn = win.norms(win.flat[1:] - win.flat[:-1], s0)
    scale = float(np.max(win.norms(win.flat, s0)))
    if np.all(dn <= 1e-13 * max(scale, 1e-300)):
        return
    t = tols.tail_for(win.m)
    tail = dn[-(t + 1):]
    if np.any(np.diff(tail) > 1e-12 * max(scale, tail.max())):
        raise NotConvergentError("window increments are not decreasing in Z_0")
    if dn[-1] > tols.cauchy * dn[0]:
        raise NotConvergentError("window increments show no overall decay in Z_0")


# ---------------------------------------------------------------------------
# Strict extraction (nested-scale recursion)
# ---------------------------------------------------------------------------


def extract_strict(data, scale, tols=None):
    """Constructive strict-expansion recursion on a finite sample window.

    At level k the coefficient Gamma_{k,n} is the Z_{k-1} norm of the residual
    r_n = v_n - v - sum_{j<k} Gamma_{j,n} w_j, the witness is r_n / Gamma_{k,n}
    (unit in Z_{k-1}) and the direction w_k is the estimated Z_k-limit of the
    witnesses. Recursion ends on witness stabilization (finite kind), on the
    Gamma floor, on ratio stagnation, or at the scale depth.

    Raises:
      NotConvergentError: no numerical convergence in Z_0.
      StagnationError: Gamma_{1,n} does not decay over the window.
    """
    tols = tols or ToleranceSet()
    if len(data) < 6:
        raise ValueError("extraction window must contain at least 6 samples")
    win = _Window(data)
    t = tols.tail_for(win.m)
    cfg = EstimatorConfig(tail=t, snap_rel=tols.snap)
    s0 = scale.exponent(0)
    _check_convergent(win, s0, tols)

    vhat, vmethod = estimate_limit(win.flat, win.xs, cfg)
    log = [f"limit estimator: {vmethod}"]
    scale0 = float(np.max(win.norms(win.flat, s0)))
    floor_abs = tols.floor * max(scale0, 1e-300)

    resid = win.flat - vhat
    terms = []
    kind = "strict"
    reason = f"depth cap {min(tols.kmax, scale.depth)}"
    kmax = min(tols.kmax, scale.depth)
    for k in range(1, kmax + 1):
        gammas = win.norms(resid, scale.exponent(k - 1))
        if np.max(gammas) <= floor_abs:
            if k == 1:
                kind = "trivial"
                reason = "constant window"
            else:
                reason = f"gamma floor at level {k}"
            break
        if np.min(gammas) <= 0.0:
            raise StagnationError(f"level-{k} residual vanishes for some n but not all")
        if k == 1:
            if gammas[-1] > tols.stagnation * np.max(gammas[:t]):
                raise StagnationError("Gamma_{1,n} does not decay over the window")
        witnesses = resid / gammas[:, None]
        what, wmethod = estimate_limit(witnesses, win.xs, cfg)
        sk = scale.exponent(k)
        conv = win.norms(witnesses - what, sk)
        terms.append(
            ExpansionTerm(
                gammas=gammas,
                direction=win.to_field(what),
                witnesses=[win.to_field(witnesses[n]) for n in range(win.m)],
                estimator=wmethod,
            )
        )
        log.append(f"level {k}: witness estimator {wmethod}")
        if np.all(conv[-t:] < tols.finite):
            kind = "finite-unitary"
            reason = f"witnesses stabilized at level {k}"
            break
        resid = resid - gammas[:, None] * what
        nxt = win.norms(resid, sk)
        ratios = nxt / gammas
        if np.mean(ratios[-t:]) >= tols.stagnation:
            reason = f"ratio stagnation after level {k}"
            break
    return ExpansionResult(
        limit=win.to_field(vhat),
        terms=terms,
        kind="trivial" if (kind == "trivial" or not terms) else kind,
        form="strict",
        scale=scale,
        space=None,
        degenerate_n=None,
        depth_reason=reason,
        limit_estimator=vmethod,
        tols=tols,
        decision_log=log,
    )


# ---------------------------------------------------------------------------
# Single-space unitary refinement (projection peeling)
# ---------------------------------------------------------------------------


def refine_unitary(strict, data, space=0.5, tols=None):
    """Unitary (or degenerate) expansion in the single space D(A^space).

    Reuses the strict result's window limit, then peels one direction per
    level: the direction is the normalized witness limit in D(A^space) and
    Gamma_{k,n} is the projection of the level residual onto it. Witnesses
    are residual/Gamma, so the reconstruction identity is exact by
    construction; they converge to the direction but are not unit vectors.
    """
    tols = tols or strict.tols
    win = _Window(data)
    t = tols.tail_for(win.m)
    cfg = EstimatorConfig(tail=t, snap_rel=tols.snap)
    s = float(space)

    keys = win.keys
    index = {k: i for i, k in enumerate(keys)}
    vhat = np.zeros(2 * win.nk, dtype=np.complex128)
    for k, c in strict.limit.modes.items():
        i = index[k]
        vhat[2 * i], vhat[2 * i + 1] = c[0], c[1]

    scale0 = float(np.max(win.norms(win.flat, s)))
    floor_abs = tols.floor * max(scale0, 1e-300)
    resid = win.flat - vhat
    terms = []
    kind = "infinite-unitary"
    degenerate_n = None
    reason = f"depth cap {tols.kmax}"
    log = list(strict.decision_log) + [f"unitary refinement in D(A^{s})"]
    for k in range(1, tols.kmax + 1):
        norms = win.norms(resid, s)
        if np.max(norms) <= floor_abs:
            if k == 1:
                kind = "trivial"
                reason = "constant window"
            else:
                reason = f"gamma floor at level {k}"
            break
        if np.min(norms) <= 0.0:
            reason = f"exact reconstruction at level {k - 1}"
            break
        unit = resid / norms[:, None]
        dhat, wmethod = estimate_limit(unit, win.xs, cfg)
        dnorm = win.norm1(dhat, s)
        if dnorm <= tols.zero:
            # Zero witness limit: the tail is degenerate in this space.
            degenerate_n = k - 1
            kind = "degenerate"
            terms.append(
                ExpansionTerm(
                    gammas=norms,
                    direction=win.to_field(np.zeros_like(dhat)),
                    witnesses=[win.to_field(unit[n]) for n in range(win.m)],
                    estimator=wmethod,
                )
            )
            reason = f"zero direction at level {k}"
            break
        dhat = dhat / dnorm
        projs = win.inner(resid, dhat, s)
        if np.mean(projs[-t:]) < 0:
            dhat = -dhat
            projs = -projs
        if np.min(projs) <= 0.0:
            reason = f"non-positive projection at level {k}"
            break
        witnesses = resid / projs[:, None]
        terms.append(
            ExpansionTerm(
                gammas=projs,
                direction=win.to_field(dhat),
                witnesses=[win.to_field(witnesses[n]) for n in range(win.m)],
                estimator=wmethod,
            )
        )
        log.append(f"level {k}: witness estimator {wmethod}")
        conv = win.norms(witnesses - dhat, s)
        if np.all(conv[-t:] < tols.finite):
            kind = "finite-unitary"
            reason = f"witnesses stabilized at level {k}"
            break
        resid = resid - projs[:, None] * dhat
        nxt = win.norms(resid, s)
        if np.mean(nxt[-t:] / projs[-t:]) >= tols.stagnation:
            reason = f"ratio stagnation after level {k}"
            break
    return ExpansionResult(
        limit=strict.limit,
        terms=terms,
        kind="trivial" if not terms else kind,
        form="unitary",
        scale=constant_scale(s, tols.kmax),
        space=s,
        degenerate_n=degenerate_n,
        depth_reason=reason,
        limit_estimator=strict.limit_estimator,
        tols=tols,
        decision_log=log,
    )


# ---------------------------------------------------------------------------
# Restructuring (zero removal + normalization)
# ---------------------------------------------------------------------------


def restructure(e, tols=None):
    """Convert an expansion to unitary or degenerate form.

    Directions below the zero threshold that precede a nonzero direction are
    removed (their space leaves the scale and later witnesses absorb the
    dropped term, so partial sums are preserved); trailing zero directions
    classify the result degenerate; remaining directions are normalized with
    gammas rescaled so each term product is unchanged. Idempotent.
    """
    tols = tols or e.tols
    if not e.terms:
        return replace(e, kind="trivial", form="unitary", decision_log=list(e.decision_log))

    dirnorms = [sp.norm_ds(t.direction, e.space_exponent(k + 1)) for k, t in enumerate(e.terms)]
    zmax = max(dirnorms)
    zero = [nu <= tols.zero * zmax for nu in dirnorms]

    if all(zero):
        terms = [
            ExpansionTerm(t.gammas.copy(), sp.zero_field(t.direction.trunc), list(t.witnesses), t.estimator)
            for t in e.terms
        ]
        return replace(
            e,
            terms=terms,
            kind="degenerate",
            form="unitary",
            degenerate_n=0,
            decision_log=e.decision_log + ["restructure: all directions zero"],
        )

    last_nonzero = max(k for k, z in enumerate(zero) if not z)
    removed = [k for k in range(last_nonzero) if zero[k]]
    kept = [k for k in range(len(e.terms)) if k not in removed]

    new_terms = []
    new_exponents = [e.scale.exponent(0)]
    n_nonzero = 0
    for pos, k in enumerate(kept):
        t = e.terms[k]
        nu = dirnorms[k]
        new_exponents.append(e.scale.exponent(min(k + 1, e.scale.depth)))
        # Fold removed earlier terms back into the witnesses so that
        # v_n = v + sum kept Gamma_j w_j + Gamma_k w_n^{(k)} stays exact.
        dropped = [r for r in removed if r < k]
        witnesses = list(t.witnesses)
        if dropped:
            witnesses = [
                sp.lin_comb(
                    [1.0] + [e.terms[r].gammas[n] / t.gammas[n] for r in dropped],
                    [t.witnesses[n]] + [e.terms[r].direction for r in dropped],
                )
                for n in range(len(witnesses))
            ]
        if k > last_nonzero:
            new_terms.append(
                ExpansionTerm(t.gammas.copy(), sp.zero_field(t.direction.trunc), witnesses, t.estimator)
            )
            continue
        n_nonzero = pos + 1
        if abs(nu - 1.0) <= 1e-13:
            new_terms.append(ExpansionTerm(t.gammas.copy(), t.direction, witnesses, t.estimator))
        else:
            new_terms.append(
                ExpansionTerm(
                    t.gammas * nu,
                    (1.0 / nu) * t.direction,
                    [(1.0 / nu) * w for w in witnesses],
                    t.estimator,
                )
            )

    trailing = len(kept) > n_nonzero
    if trailing:
        kind = "degenerate"
        degenerate_n = n_nonzero
    else:
        degenerate_n = None
        kind = "finite-unitary" if e.kind in ("finite-unitary", "trivial") else "infinite-unitary"

    new_scale = NestedScale(tuple(new_exponents), e.scale.regime) if len(new_exponents) >= 2 else e.scale
    return replace(
        e,
        terms=new_terms,
        kind=kind,
        form="unitary",
        scale=new_scale,
        degenerate_n=degenerate_n,
        decision_log=e.decision_log + [f"restructure: removed {len(removed)} zero term(s)"],
    )


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    axiom: str
    passed: bool
    worst: float
    note: str = ""


@dataclass
class VerificationReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def __str__(self):
        lines = []
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            lines.append(f"[{tag}] {c.axiom}: worst={c.worst:.3e} {c.note}".rstrip())
        return "\n".join(lines)


def _tail_decreasing(values, t, slack=1e-12):
    v = np.asarray(values)[-(t + 1):]
    if len(v) < 2:
        return True, 0.0
    diffs = np.diff(v)
    worst = float(np.max(diffs))
    return bool(np.all(diffs <= slack * max(np.max(np.abs(v)), 1e-300))), worst


def verify_expansion(e, data, recon_tol=1e-12):
    """Per-axiom verification report of an expansion against its raw window."""
    win = _Window(data)
    t = e.tols.tail_for(win.m)
    checks = []
    keys = win.keys
    index = {k: i for i, k in enumerate(keys)}

    def flat_of(fieldobj):
        row = np.zeros(2 * win.nk, dtype=np.complex128)
        for k, c in fieldobj.modes.items():
            if k not in index:
                raise ValueError("expansion carries modes outside the data window")
            i = index[k]
            row[2 * i], row[2 * i + 1] = c[0], c[1]
        return row

    s0 = e.scale.exponent(0)
    vflat = flat_of(e.limit)
    dirs = [flat_of(term.direction) for term in e.terms]
    wits = [[flat_of(w) for w in term.witnesses] for term in e.terms]
    gammas = [term.gammas for term in e.terms]
    scale0 = float(np.max(win.norms(win.flat, s0)))

    # Reconstruction identity at every recorded level.
    worst = 0.0
    for k in range(len(e.terms)):
        partial = np.repeat(vflat[None, :], win.m, axis=0)
        for j in range(k):
            partial = partial + gammas[j][:, None] * dirs[j][None, :]
        for n in range(win.m):
            recon = partial[n] + gammas[k][n] * wits[k][n]
            worst = max(worst, win.norm1(recon - win.flat[n], s0) / scale0)
    if not e.terms:
        for n in range(win.m):
            worst = max(worst, win.norm1(vflat - win.flat[n], s0) / scale0)
    checks.append(CheckResult("reconstruction", worst <= recon_tol, worst))

    if e.terms:
        g1 = gammas[0]
        ok, worst = _tail_decreasing(g1, t)
        ok = ok and g1[-1] < g1[0]
        checks.append(CheckResult("gamma1-decay", ok, float(g1[-1] / g1[0])))

        for k in range(len(e.terms) - 1):
            r = gammas[k + 1] / gammas[k]
            ok, _ = _tail_decreasing(r, t)
            ok = ok and r[-1] < r[0]
            checks.append(CheckResult(f"ratio-decay-k{k + 1}", ok, float(r[-1])))

        for k, term in enumerate(e.terms):
            sk = e.space_exponent(k + 1)
            conv = np.array([win.norm1(wits[k][n] - dirs[k], sk) for n in range(win.m)])
            ok, _ = _tail_decreasing(conv, t, slack=1e-9)
            stabilized = bool(np.all(conv[-(t + 1):] <= e.tols.finite))
            checks.append(
                CheckResult(
                    f"witness-convergence-k{k + 1}",
                    ok or stabilized,
                    float(conv[-1]),
                    "stabilized" if stabilized and not ok else "",
                )
            )

        if e.form == "strict":
            worst = 0.0
            for k in range(len(e.terms)):
                skm1 = e.scale.exponent(k)
                for n in range(win.m):
                    worst = max(worst, abs(win.norm1(wits[k][n], skm1) - 1.0))
            checks.append(CheckResult("unit-witnesses", worst <= 1e-13, worst))
        else:
            worst = 0.0
            for k in range(len(e.terms)):
                if e.degenerate_n is not None and k >= e.degenerate_n:
                    continue
                nu = win.norm1(dirs[k], e.space_exponent(k + 1))
                worst = max(worst, abs(nu - 1.0))
            checks.append(CheckResult("unit-directions", worst <= 1e-12, worst))

        # Remainder-ratio profile over the last half of the window.
        # Levels whose remainders reach the float reconstruction floor count
        # as converged to roundoff; the trend is meaningless below it.
        half = max(2, win.m // 2)
        worst = 0.0
        worstnote = ""
        ok = True
        for k in range(1, len(e.terms) + 1):
            partial = np.repeat(vflat[None, :], win.m, axis=0)
            for j in range(k - 1):
                partial = partial + gammas[j][:, None] * dirs[j][None, :]
            sk = e.space_exponent(k)
            prev = gammas[k - 2] if k >= 2 else np.ones(win.m)
            ratio = np.array(
                [win.norm1(win.flat[n] - partial[n], sk) / prev[n] for n in range(win.m)]
            )
            if np.any(ratio[-(half - 1):] <= 1e-13 * np.max(ratio)):
                continue
            dec, bad = _tail_decreasing(ratio, half - 1)
            if not dec:
                ok = False
                worst = max(worst, bad)
                worstnote = f"level {k}"
        checks.append(CheckResult("remainder-ratio", ok, worst, worstnote))

    if e.kind == "degenerate" and e.terms:
        n0 = e.degenerate_n or 0
        worst = 0.0
        for k in range(n0):
            nu = win.norm1(dirs[k], e.space_exponent(k + 1))
            worst = max(worst, abs(nu - 1.0))
        tail_ok = all(np.all(dirs[k] == 0) for k in range(n0, len(e.terms)))
        checks.append(
            CheckResult("degenerate-pattern", worst <= 1e-12 and tail_ok, worst)
        )
        # Degenerate remainders: ||R_{N,n}|| / Gamma_{m+1,n} = ||w_n^{(m+1)}|| -> 0.
        partial = np.repeat(vflat[None, :], win.m, axis=0)
        for j in range(n0):
            partial = partial + gammas[j][:, None] * dirs[j][None, :]
        ok = True
        worst = 0.0
        for mlev in range(n0, len(e.terms)):
            smp1 = e.space_exponent(mlev + 1)
            ratio = [
                win.norm1(win.flat[n] - partial[n], smp1) / gammas[mlev][n]
                for n in range(win.m)
            ]
            dec, _ = _tail_decreasing(ratio, t, slack=1e-9)
            ok = ok and dec
            worst = max(worst, float(ratio[-1]))
        checks.append(CheckResult("degenerate-remainders", ok, worst))

    return VerificationReport(checks)


# ---------------------------------------------------------------------------
# Uniqueness comparison over the shared window
# ---------------------------------------------------------------------------


@dataclass
class UniquenessReport:
    match: bool
    limit_diff: float
    depth_equal: bool
    gamma_diffs: list
    direction_diffs: list
    note: str

    def __str__(self):
        tag = "MATCH" if self.match else "MISMATCH"
        return (
            f"[{tag}] limit diff {self.limit_diff:.3e}; depths equal: {self.depth_equal}; "
            f"max gamma rel diff {max(self.gamma_diffs, default=0.0):.3e}; "
            f"max direction diff {max(self.direction_diffs, default=0.0):.3e} ({self.note})"
        )


def uniqueness_check(e1, e2, tol=1e-10):
    """Compare two expansions of the same data over the overlap window.

    With every witness recorded from sample 1 on, the comparable overlap is
    the whole window; values below each result's recorded starting index would
    be unconstrained and are only reported, never compared.
    """
    s0 = e1.scale.exponent(0)
    scale0 = max(sp.norm_ds(e1.limit, s0), sp.norm_ds(e2.limit, s0), 1e-300)
    limit_diff = sp.norm_ds(e1.limit - e2.limit, s0) / scale0
    depth_equal = e1.depth == e2.depth
    gamma_diffs = []
    direction_diffs = []
    for k in range(min(e1.depth, e2.depth)):
        g1, g2 = e1.terms[k].gammas, e2.terms[k].gammas
        gamma_diffs.append(float(np.max(np.abs(g1 - g2) / np.maximum(np.abs(g1), 1e-300))))
        sk = e1.space_exponent(k + 1)
        direction_diffs.append(sp.norm_ds(e1.terms[k].direction - e2.terms[k].direction, sk))
    match = (
        depth_equal
        and limit_diff <= tol
        and all(d <= tol for d in gamma_diffs)
        and all(d <= tol for d in direction_diffs)
    )
    return UniquenessReport(
        match=match,
        limit_diff=limit_diff,
        depth_equal=depth_equal,
        gamma_diffs=gamma_diffs,
        direction_diffs=direction_diffs,
        note="values below the recorded N_k of either expansion are unconstrained",
    )


# ---------------------------------------------------------------------------
# Expansion result files
# ---------------------------------------------------------------------------


def save_expansion(path, forms, alphas):
    """Write expansion forms to ``path`` (JSON) plus field files alongside.

    ``forms`` maps a form name ("strict", "unitary", ...) to an
    ExpansionResult; every referenced field is stored next to the JSON file.
    """
    import os

    from . import fieldio

    outdir = os.path.dirname(os.path.abspath(path))
    doc_forms = {}
    for name, e in forms.items():
        limit_file = f"{name}_limit.json"
        fieldio.write_field(os.path.join(outdir, limit_file), e.limit)
        terms = []
        for k, term in enumerate(e.terms, start=1):
            dir_file = f"{name}_w{k}.json"
            fieldio.write_field(os.path.join(outdir, dir_file), term.direction)
            wit_files = []
            for n, w in enumerate(term.witnesses, start=1):
                wf = f"{name}_wit{k}_{n:04d}.json"
                fieldio.write_field(os.path.join(outdir, wf), w)
                wit_files.append(wf)
            terms.append(
                {
                    "gammas": [float(g) for g in term.gammas],
                    "direction": dir_file,
                    "witnesses": wit_files,
                    "estimator": term.estimator,
                }
            )
        doc_forms[name] = {
            "kind": e.kind,
            "form": e.form,
            "scale": {"regime": e.scale.regime, "exponents": list(e.scale.exponents)},
            "space": e.space,
            "degenerate_N": e.degenerate_n,
            "depth_reason": e.depth_reason,
            "limit_estimator": e.limit_estimator,
            "tolerances": {
                "floor": e.tols.floor, "limit": e.tols.limit, "finite": e.tols.finite,
                "zero": e.tols.zero, "snap": e.tols.snap, "cauchy": e.tols.cauchy,
                "stagnation": e.tols.stagnation, "tail": e.tols.tail, "kmax": e.tols.kmax,
            },
            "limit": limit_file,
            "terms": terms,
            "decision_log": list(e.decision_log),
        }
    fieldio.write_json(path, {
        "schema": "grashof-expand/expansion-v1",
        "alphas": [float(a) for a in alphas],
        "forms": doc_forms,
    })


def load_expansion(path):
    """Read an expansion file; returns (forms dict, alphas array)."""
    import os

    import numpy as _np

    from . import fieldio

    doc = fieldio.read_json(path)
    base = os.path.dirname(os.path.abspath(path))
    forms = {}
    for name, rec in doc["forms"].items():
        tol = rec["tolerances"]
        tols = ToleranceSet(
            floor=tol["floor"], limit=tol["limit"], finite=tol["finite"],
            zero=tol["zero"], snap=tol["snap"], cauchy=tol["cauchy"],
            stagnation=tol["stagnation"], tail=int(tol["tail"]), kmax=int(tol["kmax"]),
        )
        terms = []
        for t in rec["terms"]:
            terms.append(
                ExpansionTerm(
                    gammas=_np.array(t["gammas"], dtype=float),
                    direction=fieldio.read_field(os.path.join(base, t["direction"])),
                    witnesses=[fieldio.read_field(os.path.join(base, w)) for w in t["witnesses"]],
                    estimator=t["estimator"],
                )
            )
        forms[name] = ExpansionResult(
            limit=fieldio.read_field(os.path.join(base, rec["limit"])),
            terms=terms,
            kind=rec["kind"],
            form=rec["form"],
            scale=NestedScale(tuple(rec["scale"]["exponents"]), rec["scale"]["regime"]),
            space=rec["space"],
            degenerate_n=rec["degenerate_N"],
            depth_reason=rec["depth_reason"],
            limit_estimator=rec["limit_estimator"],
            tols=tols,
            decision_log=list(rec.get("decision_log", [])),
        )
    return forms, _np.array(doc["alphas"], dtype=float)
