"""Order-of-magnitude calculus on positive sequences and the branch classifier.

``compare`` decides, from a finite window, whether xi grows strictly faster
than eta (succ), slower (prec), proportionally (sim, with the limit ratio), or
cannot be decided. ``build_S`` assembles the coefficient sequences
(alpha), (1), (Gamma_k), (alpha Gamma_k), (alpha Gamma_j Gamma_k) together
with their full relation matrix and asserts the structural decay relations
among them. ``classify`` routes a verified expansion through the steady-state
classification tree (limit equation per branch, constants as tail means,
residuals in the V' norm) and reports which branch fired.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp


class InconsistentRelationsError(RuntimeError):
    """A structural decay relation of the coefficient table failed."""


class ClassificationBlockedError(RuntimeError):
    """A comparison needed by the classification tree came back undecided."""


@dataclass(frozen=True)
class OrderTols:
    slope: float = 0.1
    disp: float = 0.05
    residual: float = 1e-8
    zero: float = 1e-8       # relative gate for v = 0 / v = A^{-1} g
    chi_floor: float = 1e-10


@dataclass(frozen=True)
class PositiveSequence:
    """A labeled finite sample of a positive sequence over the window."""

    label: str
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if any(v <= 0 for v in vals):
            raise ValueError(f"sequence {self.label!r} must be positive")

    @property
    def array(self):
        return np.array(self.values)


@dataclass(frozen=True)
class OrderRelation:
    verdict: str                 # succ | sim | prec | undecided
    lam: float | None            # finite limit ratio when verdict == sim
    slope: float                 # fitted log-ratio slope (evidence)
    dispersion: float            # relative dispersion of tail ratios (evidence)

    def __str__(self):
        lam = f"({self.lam:.6g})" if self.lam is not None else ""
        return f"{self.verdict}{lam} [slope={self.slope:.3g}, disp={self.dispersion:.3g}]"


def compare(xi, eta, tols=None, alphas=None):
    """Decide xi vs eta from the window: succ / sim(lam) / prec / undecided.

    Fits the slope of log(xi/eta) against log(alpha_n) (against log n when no
    alphas are given) over the tail half; succ needs slope above the gate and
    strictly increasing tail ratios, sim needs flat slope and small tail
    dispersion. Windows shorter than 6 are refused.
    """
    tols = tols or OrderTols()
    x = xi.array
    y = eta.array
    if len(x) != len(y):
        raise ValueError("sequences must share the window")
    m = len(x)
    if m < 6:
        raise ValueError("comparison window must contain at least 6 samples")
    ratio = x / y
    half = m // 2
    tail = ratio[half:]
    grid = np.log(np.asarray(alphas, dtype=float)[half:]) if alphas is not None else np.log(
        np.arange(half + 1, m + 1, dtype=float)
    )
    slope = float(np.polyfit(grid, np.log(tail), 1)[0])
    increasing = bool(np.all(np.diff(tail) > 0))
    decreasing = bool(np.all(np.diff(tail) < 0))
    mean = float(np.mean(tail))
    dispersion = float(np.std(tail / mean))  # relative spread; overflow-safe
    if slope > tols.slope and increasing:
        return OrderRelation("succ", None, slope, dispersion)
    if slope < -tols.slope and decreasing:
        return OrderRelation("prec", None, slope, dispersion)
    if abs(slope) <= tols.slope and dispersion <= tols.disp:
        return OrderRelation("sim", mean, slope, dispersion)
    return OrderRelation("undecided", None, slope, dispersion)


# ---------------------------------------------------------------------------
# The coefficient set S and its relation matrix
# ---------------------------------------------------------------------------


def _label(apow, gs):
    if apow == 0 and not gs:
        return "one"
    parts = (["alpha"] if apow else []) + [f"gamma({k})" for k in gs]
    return "*".join(parts) if parts else "one"


@dataclass
class RelationMatrix:
    sequences: list
    structure: list              # per sequence: (alpha power, gamma level tuple)
    relations: dict              # (i, j) -> OrderRelation, i < j

    def get(self, i, j):
        if i == j:
            return OrderRelation("sim", 1.0, 0.0, 0.0)
        if i < j:
            return self.relations[(i, j)]
        r = self.relations[(j, i)]
        flip = {"succ": "prec", "prec": "succ"}.get(r.verdict, r.verdict)
        lam = 1.0 / r.lam if r.lam else None
        return OrderRelation(flip, lam, -r.slope, r.dispersion)

    def index(self, label):
        for i, s in enumerate(self.sequences):
            if s.label == label:
                return i
        raise KeyError(label)

    def relation(self, label_a, label_b):
        return self.get(self.index(label_a), self.index(label_b))

    def undecided_pairs(self):
        out = []
        for (i, j), r in self.relations.items():
            if r.verdict == "undecided":
                out.append((self.sequences[i].label, self.sequences[j].label))
        return out


def _structurally_decaying(sa, sb):
    """True when seq_a / seq_b is a product of 1/Gamma factors (so a succ b)."""
    (pa, ga), (pb, gb) = sa, sb
    if pa != pb or len(ga) > len(gb):
        return False
    if ga == gb:
        return False
    return all(x <= y for x, y in zip(sorted(ga), sorted(gb)))


def build_S(alphas, gammas, tols=None):
    """Coefficient sequences of the expansion with all pairwise relations.

    ``gammas`` is a list of positive arrays, one per expansion level. Returns
    a RelationMatrix over (1), (alpha), (Gamma_k), (alpha Gamma_k) and
    (alpha Gamma_j Gamma_k), j <= k.

    Raises:
      InconsistentRelationsError: a structural decay relation (a pure product
        of Gamma factors) did not come back succ, signalling a bad extraction.
    """
    tols = tols or OrderTols()
    alphas = np.asarray(alphas, dtype=float)
    gammas = [np.asarray(g, dtype=float) for g in gammas]
    if not gammas:
        raise ValueError("need at least one gamma level")
    depth = len(gammas)

    structure = [(0, ()), (1, ())]
    values = [np.ones_like(alphas), alphas]
    for k in range(1, depth + 1):
        structure.append((0, (k,)))
        values.append(gammas[k - 1])
    for k in range(1, depth + 1):
        structure.append((1, (k,)))
        values.append(alphas * gammas[k - 1])
    for j in range(1, depth + 1):
        for k in range(j, depth + 1):
            structure.append((1, (j, k)))
            values.append(alphas * gammas[j - 1] * gammas[k - 1])

    seqs = [PositiveSequence(_label(p, g), tuple(v)) for (p, g), v in zip(structure, values)]
    relations = {}
    for i in range(len(seqs)):
        for j in range(i + 1, len(seqs)):
            relations[(i, j)] = compare(seqs[i], seqs[j], tols, alphas)
    mat = RelationMatrix(sequences=seqs, structure=structure, relations=relations)

    for i in range(len(seqs)):
        for j in range(len(seqs)):
            if i != j and _structurally_decaying(structure[i], structure[j]):
                if mat.get(i, j).verdict != "succ":
                    raise InconsistentRelationsError(
                        f"expected {seqs[i].label} succ {seqs[j].label}, "
                        f"got {mat.get(i, j)}"
                    )
    return mat


def total_comparability(matrix):
    """(verdict, offending pairs): every pair must be decided."""
    pairs = matrix.undecided_pairs()
    return (len(pairs) == 0, pairs)


def extend_with_abs_chi(matrix, chi, tols=None):
    """Insert the |chi_n| row and recompute its relations against the set."""
    tols = tols or OrderTols()
    alphas = matrix.sequences[1].array
    abschi = PositiveSequence("abs_chi", tuple(np.abs(chi)))
    seqs = matrix.sequences + [abschi]
    structure = matrix.structure + [(None, None)]
    relations = dict(matrix.relations)
    j = len(seqs) - 1
    for i in range(j):
        relations[(i, j)] = compare(seqs[i], abschi, tols, alphas)
    return RelationMatrix(sequences=seqs, structure=structure, relations=relations)


def chi_trichotomy(chi, matrix, tols=None):
    """Sign-pattern tag of the deviation sequence chi_n: S1 / S2 / S3 / mixed.

    S2/S3 extend the matrix with |chi| and re-check total comparability;
    ``mixed`` (alternating signs) is reported without further classification.
    Returns (tag, extended matrix or None, comparability verdict or None).
    """
    tols = tols or OrderTols()
    chi = np.asarray(chi, dtype=float)
    if np.all(np.abs(chi) <= tols.chi_floor):
        return "S1", None, None
    if np.all(chi > 0):
        ext = extend_with_abs_chi(matrix, chi, tols)
        ok, _ = total_comparability(ext)
        return "S2", ext, ok
    if np.all(chi < 0):
        ext = extend_with_abs_chi(matrix, chi, tols)
        ok, _ = total_comparability(ext)
        return "S3", ext, ok
    return "mixed", None, None


# ---------------------------------------------------------------------------
# Branch classifier
# ---------------------------------------------------------------------------


@dataclass
class ClassificationReport:
    branch: str
    constants: dict
    chi: np.ndarray | None
    chi_tag: str | None
    residuals: dict              # equation id -> V'-relative residual
    identities: dict             # scalar identity id -> value
    comparability: bool
    evidence: dict               # comparison id -> str(OrderRelation)
    warnings: list = field(default_factory=list)

    def summary(self):
        lines = [f"branch: {self.branch}"]
        for k, v in self.constants.items():
            lines.append(f"  {k} = {v:.12g}")
        if self.chi_tag:
            lines.append(f"  chi pattern: {self.chi_tag}")
        for k, v in self.residuals.items():
            lines.append(f"  residual {k}: {v:.3e}")
        for k, v in self.identities.items():
            lines.append(f"  identity {k}: {v:.3e}")
        lines.append(f"  totally comparable: {self.comparability}")
        for w in self.warnings:
            lines.append(f"  warning: {w}")
        return "\n".join(lines)


def _vprime(fieldobj):
    return sp.norm_ds(fieldobj, -0.5)


def _tail_mean(values, t):
    return float(np.mean(np.asarray(values)[-t:]))


def classify(expansion, g, matrix, tols=None, alphas=None):
    """Classify a verified expansion against the steady-state classification tree.

    Routes on the limit (trivial / v = 0 / v = A^{-1} g / generic), compares
    the relevant coefficient sequences, estimates the branch constants as tail
    means and measures every branch equation residual in the V' norm relative
    to the forcing. Branch equation residual above ``tols.residual`` is a
    recorded warning, not an error.

    Raises:
      ClassificationBlockedError: a needed comparison is undecided.
    """
    tols = tols or OrderTols()
    if matrix is None and expansion.terms:
        raise ValueError("a relation matrix is required for nontrivial expansions")
    if alphas is None:
        if matrix is None:
            raise ValueError("need alphas when no relation matrix is given")
        alphas = matrix.sequences[1].array
    alphas = np.asarray(alphas, dtype=float)
    t = max(2, len(alphas) // 3)
    gvp = _vprime(g)
    v = expansion.limit
    terms = expansion.terms
    gammas = [term.gammas for term in terms]
    dirs = [term.direction for term in terms]

    constants = {}
    residuals = {}
    identities = {}
    evidence = {}
    warnings = []
    chi = None
    chi_tag = None
    if matrix is None:
        comparable = True
    else:
        comparable, undecided = total_comparability(matrix)
        if not comparable:
            warnings.append(f"relation matrix undecided on {undecided}")

    def rel(a, b):
        r = matrix.relation(a, b)
        evidence[f"{a} vs {b}"] = str(r)
        if r.verdict == "undecided":
            raise ClassificationBlockedError(f"comparison {a} vs {b} is undecided")
        return r

    def put_residual(eq_id, fieldobj):
        residuals[eq_id] = _vprime(fieldobj) / gvp
        if residuals[eq_id] > tols.residual:
            warnings.append(f"branch equation {eq_id} residual {residuals[eq_id]:.3e}")

    # Always: the limit satisfies B(v, v) = 0.
    put_residual("B(v,v)=0", sp.bilinear_b(v, v))

    av = sp.apply_fractional(v, 1.0)
    if not terms:
        branch = "4.4(ii)"
        put_residual("Av=g", av - g)
        return ClassificationReport(branch, constants, chi, chi_tag, residuals,
                                    identities, comparable, evidence, warnings)

    vnorm = _vprime(v)
    a_inv_g = sp.apply_fractional(g, -1.0)
    v_is_zero = vnorm <= tols.zero * gvp
    v_is_stokes = _vprime(v - a_inv_g) <= tols.zero * gvp

    if v_is_zero:
        return _classify_v_zero(expansion, g, matrix, tols, alphas, t, gvp, rel,
                                put_residual, constants, residuals, identities,
                                evidence, warnings, comparable)
    if v_is_stokes and terms:
        return _classify_v_stokes(expansion, g, matrix, tols, alphas, t, gvp, rel,
                                  put_residual, constants, residuals, identities,
                                  evidence, warnings, comparable)

    r = rel("alpha*gamma(1)", "one")
    ag1 = alphas * gammas[0]
    if r.verdict in ("sim", "prec"):
        branch = "4.4(iii)(a)"
        mu = _tail_mean(ag1, t) if r.verdict == "sim" else 0.0
        constants["mu"] = mu
        constants["mu_dispersion"] = float(np.std(ag1[-t:]) / max(np.mean(ag1[-t:]), 1e-300))
        put_residual("Av+mu*Bs(v,w1)=g", av + mu * sp.bilinear_bs(v, dirs[0]) - g)
    else:
        branch = "4.4(iii)(b)"
        put_residual("Bs(v,w1)=0", sp.bilinear_bs(v, dirs[0]))
    return ClassificationReport(branch, constants, chi, chi_tag, residuals,
                                identities, comparable, evidence, warnings)


def _classify_v_zero(expansion, g, matrix, tols, alphas, t, gvp, rel, put_residual,
                     constants, residuals, identities, evidence, warnings, comparable):
    """Classification branches for v = 0: alpha Gamma_1^2 >= 1 and w_2 exists."""
    terms = expansion.terms
    gammas = [term.gammas for term in terms]
    dirs = [term.direction for term in terms]
    w1 = dirs[0]
    ag11 = alphas * gammas[0] ** 2
    chi = None
    chi_tag = None

    if len(terms) < 2:
        warnings.append("v = 0 but no second direction extracted (this regime implies w2 exists)")
    w2 = dirs[1] if len(terms) > 1 else None

    r11 = rel("alpha*gamma(1)*gamma(1)", "one")
    if r11.verdict == "prec":
        warnings.append("alpha*Gamma_1^2 prec 1 is impossible for a v = 0 solution family")
    if r11.verdict == "succ":
        put_residual("B(w1,w1)=0", sp.bilinear_b(w1, w1))
        if w2 is None:
            branch = "4.6(i)"
        else:
            r12 = rel("alpha*gamma(1)*gamma(2)", "one")
            ag12 = alphas * gammas[0] * gammas[1]
            if r12.verdict == "succ":
                branch = "4.6(i)(1)"
                put_residual("Bs(w1,w2)=0", sp.bilinear_bs(w1, w2))
            elif r12.verdict == "sim":
                branch = "4.6(i)(2)"
                mu = _tail_mean(ag12, t)
                constants["mu"] = mu
                put_residual("mu*Bs(w1,w2)=g", mu * sp.bilinear_bs(w1, w2) - g)
                identities["<g,w1>"] = sp.inner_h(g, w1) / (gvp * sp.norm_ds(w1, 0.5))
            else:
                branch = "4.6(i)"
                warnings.append("alpha*Gamma_1*Gamma_2 prec 1 is impossible in this regime")
        return ClassificationReport(branch, constants, chi, chi_tag, residuals,
                                    identities, comparable, evidence, warnings)

    # alpha Gamma_1^2 sim 1: mu_* and the deviation sequence chi.
    mu_star = _tail_mean(ag11, t)
    constants["mu_star"] = mu_star
    constants["mu_star_dispersion"] = float(np.std(ag11[-t:]) / np.mean(ag11[-t:]))
    put_residual("mu_star*B(w1,w1)=g", mu_star * sp.bilinear_b(w1, w1) - g)
    identities["<g,w1>"] = sp.inner_h(g, w1) / (gvp * sp.norm_ds(w1, 0.5))
    chi = 1.0 - ag11 / mu_star
    chi_tag, ext, ext_ok = chi_trichotomy(chi, matrix, tols)
    if ext is not None and not ext_ok:
        warnings.append("matrix with |chi| row is not totally comparable")
    if chi_tag == "mixed":
        warnings.append("chi sign pattern mixed; sub-branch not classified")
        return ClassificationReport("4.6(ii)", constants, chi, chi_tag, residuals,
                                    identities, comparable, evidence, warnings)

    def chi_small_vs(label):
        """True when chi vanishes or |chi| is dominated by the labeled sequence."""
        if chi_tag == "S1":
            return True
        r = ext.relation(label, "abs_chi")
        evidence[f"{label} vs |chi|"] = str(r)
        return r.verdict == "succ"

    if w2 is None:
        return ClassificationReport("4.6(ii)", constants, chi, chi_tag, residuals,
                                    identities, comparable, evidence, warnings)

    w1n = sp.norm_ds(w1, 0.5)
    r2 = rel("alpha*gamma(2)", "one")
    ag2 = alphas * gammas[1]
    w2_ip = sp.inner_h(g, dirs[1])
    if r2.verdict == "prec":
        branch = "4.6(ii)(1)"
        if not chi_small_vs("gamma(1)"):
            warnings.append("expected chi = 0 or Gamma_1 succ |chi| in branch (ii)(1)")
        if expansion.kind != "degenerate":
            warnings.append("branch (ii)(1) concludes a degenerate expansion; kind is "
                            + expansion.kind)
    elif r2.verdict == "sim":
        if chi_tag != "S1" and ext.relation("gamma(1)", "abs_chi").verdict == "sim":
            branch = "4.6(ii)(2a)"
            mu1 = _tail_mean(gammas[0] / chi, t)
            mu2 = _tail_mean(ag2 / chi, t)
            constants["mu_1"] = mu1
            constants["mu_2"] = mu2
            if mu1 * mu2 <= 0:
                warnings.append("expected mu_1 mu_2 > 0")
            put_residual(
                "mu1*Aw1+mu2*Bs(w1,w2)=g",
                mu1 * sp.apply_fractional(w1, 1.0) + mu2 * sp.bilinear_bs(w1, dirs[1]) - g,
            )
            identities["mu_star*mu1*||w1||^2-mu2*<g,w2>"] = (
                constants["mu_star"] * mu1 * w1n**2 - mu2 * w2_ip
            ) / (gvp**2)
        else:
            branch = "4.6(ii)(2b)"
            if not chi_small_vs("gamma(1)"):
                warnings.append("expected chi = 0 or Gamma_1 succ |chi| in branch (ii)(2b)")
            bs12 = sp.bilinear_bs(w1, dirs[1])
            aw1 = sp.apply_fractional(w1, 1.0)
            denom = sp.norm_ds(bs12, -0.5) ** 2
            mu2 = -sp.inner_ds(aw1, bs12, -0.5) / denom if denom > 0 else 0.0
            constants["mu_2"] = mu2
            put_residual("Aw1+mu2*Bs(w1,w2)=0", aw1 + mu2 * bs12)
            identities["mu_star*||w1||^2-mu2*<g,w2>"] = (
                constants["mu_star"] * w1n**2 - mu2 * w2_ip
            ) / (gvp**2)
    else:
        if chi_tag != "S1" and ext.relation("alpha*gamma(1)*gamma(2)", "abs_chi").verdict == "sim":
            branch = "4.6(ii)(3a)"
            mu2 = _tail_mean(alphas * gammas[0] * gammas[1] / chi, t)
            constants["mu_2"] = mu2
            put_residual("mu2*Bs(w1,w2)=g", mu2 * sp.bilinear_bs(w1, dirs[1]) - g)
        else:
            branch = "4.6(ii)(3b)"
            if not chi_small_vs("alpha*gamma(1)*gamma(2)"):
                warnings.append("expected chi = 0 or alpha*Gamma_1*Gamma_2 succ |chi|")
            put_residual("Bs(w1,w2)=0", sp.bilinear_bs(w1, dirs[1]))
        identities["<g,w2>"] = w2_ip / (gvp * sp.norm_ds(dirs[1], 0.5))
        identities["<B(w2,w2),w1>"] = sp.inner_h(sp.bilinear_b(dirs[1], dirs[1]), w1) / (
            gvp * sp.norm_ds(dirs[1], 0.5) ** 2
        )
    return ClassificationReport(branch, constants, chi, chi_tag, residuals,
                                identities, comparable, evidence, warnings)


def _classify_v_stokes(expansion, g, matrix, tols, alphas, t, gvp, rel, put_residual,
                       constants, residuals, identities, evidence, warnings, comparable):
    """Classification branches for v = A^{-1} g with a nontrivial expansion."""
    terms = expansion.terms
    gammas = [term.gammas for term in terms]
    dirs = [term.direction for term in terms]
    v = expansion.limit
    w1 = dirs[0]
    put_residual("Bs(v,w1)=0", sp.bilinear_bs(v, w1))
    if len(terms) < 2:
        warnings.append("v = A^{-1}g but no second direction extracted "
                        "(this regime implies w2 exists)")
        return ClassificationReport("4.7", constants, None, None, residuals,
                                    identities, comparable, evidence, warnings)
    w2 = dirs[1]

    # Pairwise relations among (Gamma_1), (alpha Gamma_2), (alpha Gamma_1^2).
    r_g1_ag2 = rel("gamma(1)", "alpha*gamma(2)")
    r_g1_ag11 = rel("gamma(1)", "alpha*gamma(1)*gamma(1)")
    r_ag2_ag11 = rel("alpha*gamma(2)", "alpha*gamma(1)*gamma(1)")

    g1 = np.asarray(gammas[0])
    ag2 = alphas * gammas[1]
    ag11 = alphas * g1**2

    def is_degenerate_case():
        if r_g1_ag2.verdict == "succ" and r_g1_ag11.verdict == "succ":
            return True
        return (r_g1_ag11.verdict == "sim" and r_g1_ag2.verdict == "succ"
                and r_ag2_ag11.verdict == "prec")

    if is_degenerate_case():
        branch = "4.7(i)"
        if expansion.kind != "degenerate":
            warnings.append("branch 4.7(i) concludes a degenerate expansion; kind is "
                            + expansion.kind)
    elif r_g1_ag2.verdict == "prec" and r_ag2_ag11.verdict == "succ":
        branch = "4.7(ii)"
        put_residual("Bs(v,w2)=0", sp.bilinear_bs(v, w2))
    elif r_g1_ag11.verdict == "prec" and r_ag2_ag11.verdict == "prec":
        branch = "4.7(iii)"
        put_residual("B(w1,w1)=0", sp.bilinear_b(w1, w1))
    elif r_g1_ag2.verdict == "sim" and r_ag2_ag11.verdict == "succ":
        branch = "4.7(iv)"
        mu = _tail_mean(ag2 / g1, t)
        constants["mu"] = mu
        put_residual("Aw1+mu*Bs(v,w2)=0",
                     sp.apply_fractional(w1, 1.0) + mu * sp.bilinear_bs(v, w2))
    elif r_ag2_ag11.verdict == "sim" and r_g1_ag2.verdict == "prec":
        branch = "4.7(v)"
        mu = _tail_mean(g1**2 / gammas[1], t)
        constants["mu"] = mu
        put_residual("Bs(v,w2)+mu*B(w1,w1)=0",
                     sp.bilinear_bs(v, w2) + mu * sp.bilinear_b(w1, w1))
    elif r_g1_ag2.verdict == "sim" and r_ag2_ag11.verdict == "sim":
        branch = "4.7(vi)"
        mu1 = _tail_mean(ag2 / g1, t)
        mu2 = _tail_mean(alphas * g1, t)
        constants["mu_1"] = mu1
        constants["mu_2"] = mu2
        put_residual(
            "Aw1+mu1*Bs(v,w2)+mu2*B(w1,w1)=0",
            sp.apply_fractional(w1, 1.0) + mu1 * sp.bilinear_bs(v, w2)
            + mu2 * sp.bilinear_b(w1, w1),
        )
    else:
        branch = "4.7"
        warnings.append("relation pattern does not match any listed scenario")
    return ClassificationReport(branch, constants, None, None, residuals,
                                identities, comparable, evidence, warnings)
