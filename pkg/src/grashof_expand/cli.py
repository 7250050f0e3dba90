"""Batch pipeline front door: sweep -> extract -> verify -> classify -> report.

Exit codes: 0 success, 1 domain error (solver/extraction/format failures),
2 usage error. All artifacts are written atomically; repeated runs with the
same configuration produce byte-identical outputs. The environment variable
``GRASHOF_EXPAND_THREADS`` caps the verification worker count (0 = auto).
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import expansion as ex
from . import fieldio
from . import fixtures as fx
from . import orders as od
from . import spectral as sp
from . import steady as st


def worker_count():
    raw = os.environ.get("GRASHOF_EXPAND_THREADS", "0").strip()
    n = int(raw) if raw else 0
    return n if n > 0 else (os.cpu_count() or 1)


class UsageError(ValueError):
    pass


def _fmt(x):
    return format(float(x), ".17g")


def _parse_coeffs(spec):
    out = {}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            m, c = part.split("=")
            out[int(m)] = float(c)
        except ValueError as exc:
            raise UsageError(f"bad coefficient entry {part!r}; expected m=value") from exc
    if not out:
        raise UsageError("empty coefficient list")
    return out


def _parse_scale(spec, depth):
    if spec == "default-2dp":
        return ex.default_scale_2dp(depth)
    if spec.startswith("constant:"):
        return ex.constant_scale(float(spec.split(":", 1)[1]), depth)
    try:
        exps = tuple(float(s) for s in spec.split(","))
    except ValueError as exc:
        raise UsageError(f"bad scale spec {spec!r}") from exc
    if len(set(exps)) == 1:
        return ex.NestedScale(exps, "constant")
    regime = "2d-periodic" if all(0.5 < s < 1.0 for s in exps) else "general"
    return ex.NestedScale(exps, regime)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_fixtures(args):
    os.makedirs(args.out, exist_ok=True)
    if args.family == "example45":
        coeffs = _parse_coeffs(args.coeffs) if args.coeffs else {2: args.c2}
        cfg = fx.Example45Config(coeffs=tuple(coeffs.items()))
        entries = []
        for n in range(1, args.count + 1):
            rec = fx.example45(cfg, n)
            vfile = os.path.join(args.out, f"v_{n:04d}.json")
            gfile = os.path.join(args.out, f"g_{n:04d}.json")
            fieldio.write_field(vfile, rec.v_n)
            fieldio.write_field(gfile, rec.g_n)
            prob = st.SteadyProblem(g=rec.g_n, alpha=rec.alpha,
                                    trunc=max(2 * rec.v_n.trunc, rec.g_n.trunc))
            res = sp.norm_ds(st.residual(rec.v_n, prob), 0)
            entries.append({
                "n": n, "alpha": rec.alpha, "field": vfile,
                "residual_H": res,
                "bound_check": sp.norm_ds(sp.apply_fractional(rec.v_n, 1.0), 0)
                / sp.norm_ds(rec.g_n, 0),
                "force": gfile,
            })
        glim = os.path.join(args.out, "g_limit.json")
        fieldio.write_field(glim, fx.example45(cfg, 1).g)
        fieldio.write_manifest(os.path.join(args.out, "manifest.json"), entries, g_limit=glim)
    else:
        entries = []
        for n in range(1, args.count + 1):
            rec = fx.example314(n, truncation=args.truncation)
            vfile = os.path.join(args.out, f"v_{n:04d}.json")
            fieldio.write_field(vfile, rec.v_n)
            entries.append({
                "n": n, "alpha": float(np.exp(n)), "field": vfile,
                "residual_H": 0.0, "bound_check": 0.0,
            })
        fieldio.write_manifest(os.path.join(args.out, "manifest.json"), entries)
        if args.with_expansions:
            ns = range(1, args.count + 1)
            uni = fx.example314_unitary_expansion(ns, args.truncation)
            den = fx.example314_degenerate_expansion(ns, args.truncation)
            ex.save_expansion(os.path.join(args.out, "expansion_analytic.json"),
                              {"unitary": uni, "degenerate": den},
                              [float(np.exp(n)) for n in ns])
    print(f"wrote fixture manifest under {args.out}")
    return 0


def cmd_sweep(args):
    os.makedirs(args.out, exist_ok=True)
    if args.fixture:
        if args.fixture != "example45":
            raise UsageError(f"unknown fixture {args.fixture!r}")
        coeffs = _parse_coeffs(args.cstar_coeffs) if args.cstar_coeffs else {2: 1.0}
        cfg = fx.Example45Config(coeffs=tuple(coeffs.items()))
        recs = fx.example45_window(cfg, range(1, args.count + 1))
        alphas = [r.alpha for r in recs]
        forces = [r.g_n for r in recs]
        g_limit = recs[0].g
    else:
        if not args.force:
            raise UsageError("need --force <fieldfile> or --fixture example45")
        g = fieldio.read_field(args.force)
        alphas = [args.alpha_start * args.alpha_factor**i for i in range(args.count)]
        forces = [g] * args.count
        g_limit = g
    trunc = args.truncation
    try:
        reports = st.sweep(alphas, forces, trunc, tol=args.tol)
    except st.ContinuationError as exc:
        print(f"sweep failed at index {exc.index}: {exc.reports[-1].message}", file=sys.stderr)
        return 1
    entries = []
    for i, (rep, a) in enumerate(zip(reports, alphas)):
        vfile = os.path.join(args.out, f"solution_{i + 1:04d}.json")
        fieldio.write_field(vfile, rep.solution)
        entry = {"n": i + 1, "alpha": a, "field": vfile,
                 "residual_H": rep.residual_h, "bound_check": rep.bound_check}
        if args.fixture:
            gfile = os.path.join(args.out, f"g_{i + 1:04d}.json")
            fieldio.write_field(gfile, forces[i])
            entry["force"] = gfile
        entries.append(entry)
    glim_file = os.path.join(args.out, "g_limit.json")
    fieldio.write_field(glim_file, g_limit)
    fieldio.write_manifest(os.path.join(args.out, "manifest.json"), entries, g_limit=glim_file)
    print(f"swept {len(reports)} steps; manifest at {os.path.join(args.out, 'manifest.json')}")
    return 0


def _load_sequence(manifest_path):
    man = fieldio.read_manifest(manifest_path)
    fields = [fieldio.read_field(e["field"]) for e in man["entries"]]
    alphas = [e["alpha"] for e in man["entries"]]
    data = ex.SequenceData(tuple(fields), tuple(alphas))
    g_limit = fieldio.read_field(man["g_limit"]) if "g_limit" in man else None
    if g_limit is None and man["entries"] and "force" in man["entries"][-1]:
        g_limit = fieldio.read_field(man["entries"][-1]["force"])
    return data, man, g_limit


def cmd_extract(args):
    data, _, _ = _load_sequence(args.manifest)
    tols = ex.ToleranceSet(kmax=args.depth, tail=args.tail)
    scale = _parse_scale(args.scale, args.depth)
    strict = ex.extract_strict(data, scale, tols)
    restructured = ex.restructure(strict, tols)
    space = scale.exponent(0) if scale.regime == "constant" else args.space
    unitary = ex.refine_unitary(strict, data, space=space, tols=tols)
    os.makedirs(args.out, exist_ok=True)
    ex.save_expansion(os.path.join(args.out, "expansion.json"),
                      {"strict": strict, "restructured": restructured, "unitary": unitary},
                      data.alphas)
    print(f"extracted: strict depth {strict.depth} ({strict.kind}); "
          f"unitary depth {unitary.depth} ({unitary.kind}); "
          f"limit estimator {strict.limit_estimator}")
    print(f"expansion at {os.path.join(args.out, 'expansion.json')}")
    return 0


def cmd_verify(args):
    forms, _ = ex.load_expansion(args.expansion)
    data, _, _ = _load_sequence(args.manifest)
    names = [args.form] if args.form else sorted(forms)
    if any(n not in forms for n in names):
        raise UsageError(f"form not in expansion file; available: {sorted(forms)}")
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        reports = list(pool.map(lambda n: (n, ex.verify_expansion(forms[n], data)), names))
    ok = True
    for name, rep in reports:
        print(f"== form {name}")
        print(str(rep))
        ok = ok and rep.passed
    return 0 if ok else 1


def cmd_classify(args):
    forms, alphas = ex.load_expansion(args.expansion)
    data, _, g_limit = _load_sequence(args.manifest)
    if g_limit is None:
        raise UsageError("manifest carries no g_limit or per-n forces to classify against")
    name = args.form or ("unitary" if "unitary" in forms else sorted(forms)[0])
    e = forms[name]
    tols = od.OrderTols(slope=args.slope_tol, disp=args.disp_tol, residual=args.residual_tol)
    matrix = None
    if e.terms:
        matrix = od.build_S(alphas, [t.gammas for t in e.terms], tols)
    rep = od.classify(e, g_limit, matrix, tols, alphas=alphas)
    doc = {
        "branch": rep.branch,
        "constants": {k: float(v) for k, v in rep.constants.items()},
        "chi": [float(c) for c in rep.chi] if rep.chi is not None else None,
        "chi_tag": rep.chi_tag,
        "residuals": {k: float(v) for k, v in rep.residuals.items()},
        "identities": {k: float(v) for k, v in rep.identities.items()},
        "totally_comparable": rep.comparability,
        "evidence": rep.evidence,
        "warnings": rep.warnings,
        "form": name,
        "tolerances": {"slope": tols.slope, "disp": tols.disp, "residual": tols.residual},
    }
    fieldio.write_json(args.out, doc)
    print(rep.summary())
    print(f"classification at {args.out}")
    return 0


def cmd_report(args):
    if not os.path.exists(args.manifest):
        raise UsageError(f"manifest not found: {args.manifest}")
    data, man, _ = _load_sequence(args.manifest)
    forms, alphas = ex.load_expansion(args.expansion)
    name = "unitary" if "unitary" in forms else sorted(forms)[0]
    e = forms[name]
    classification = fieldio.read_json(args.classification) if args.classification else None
    os.makedirs(args.out, exist_ok=True)

    win = ex._Window(data)
    keys = win.keys
    index = {k: i for i, k in enumerate(keys)}

    def flat_of(fieldobj):
        row = np.zeros(2 * win.nk, dtype=np.complex128)
        for k, c in fieldobj.modes.items():
            i = index[k]
            row[2 * i], row[2 * i + 1] = c[0], c[1]
        return row

    vflat = flat_of(e.limit)
    dirs = [flat_of(t.direction) for t in e.terms]
    gammas = [t.gammas for t in e.terms]

    header = ["n", "alpha", "residual_H", "bound_check"]
    header += [f"Gamma_{k + 1}" for k in range(len(e.terms))]
    header += [f"remainder_ratio_{k + 1}" for k in range(len(e.terms))]
    lines = [",".join(header)]
    for i, entry in enumerate(man["entries"]):
        row = [str(entry["n"]), _fmt(entry["alpha"]), _fmt(entry["residual_H"]),
               _fmt(entry["bound_check"])]
        row += [_fmt(gammas[k][i]) for k in range(len(e.terms))]
        partial = vflat.copy()
        prev = 1.0
        for k in range(len(e.terms)):
            sk = e.space_exponent(k + 1)
            ratio = win.norm1(win.flat[i] - partial, sk) / prev
            row.append(_fmt(ratio))
            partial = partial + gammas[k][i] * dirs[k]
            prev = gammas[k][i]
        lines.append(",".join(row))
    fieldio.atomic_write_text(os.path.join(args.out, "series.csv"), "\n".join(lines) + "\n")

    summary = [f"sequence window: {len(data)} samples, "
               f"alpha in [{_fmt(alphas[0])}, {_fmt(alphas[-1])}]",
               f"expansion form {name}: kind {e.kind}, depth {e.depth} "
               f"({e.depth_reason}); limit estimator {e.limit_estimator}"]
    for line in e.decision_log:
        summary.append(f"  decision: {line}")
    if classification:
        summary.append(f"classification branch: {classification['branch']}")
        for k, v in classification.get("constants", {}).items():
            summary.append(f"  {k} = {_fmt(v)}")
        for k, v in classification.get("residuals", {}).items():
            summary.append(f"  residual {k}: {_fmt(v)}")
        reslines = ["id,value"]
        for k, v in classification.get("residuals", {}).items():
            reslines.append(f"{k},{_fmt(v)}")
        fieldio.atomic_write_text(os.path.join(args.out, "residuals.csv"),
                                  "\n".join(reslines) + "\n")
        for w in classification.get("warnings", []):
            summary.append(f"  warning: {w}")
    fieldio.atomic_write_text(os.path.join(args.out, "summary.txt"),
                              "\n".join(summary) + "\n")
    print("\n".join(summary))
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="grashof-expand",
        description="Steady-state sweeps and intrinsic asymptotic expansion extraction "
                    "for the rescaled 2D periodic Navier-Stokes equations.",
    )
    parser.add_argument("--seed", type=int, default=0,
                        help="seed recorded for randomized test corpora")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixtures", help="emit analytic fixture fields and manifests")
    p.add_argument("family", choices=["example45", "example314"])
    p.add_argument("--c2", type=float, default=1.0, help="single coefficient c_2")
    p.add_argument("--coeffs", help="coefficient list m=value,m=value")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--truncation", type=int, default=64)
    p.add_argument("--with-expansions", action="store_true",
                   help="also write the hand-built expansions (example314)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("sweep", help="continuation sweep over increasing alpha")
    p.add_argument("--alpha-start", type=float, default=1.0)
    p.add_argument("--alpha-factor", type=float, default=2.0)
    p.add_argument("--count", type=int, default=12)
    p.add_argument("--force", help="field file with the forcing g")
    p.add_argument("--fixture", help="example45: per-n forces g_n from the fixture")
    p.add_argument("--cstar-coeffs", help="fixture coefficients m=value,m=value")
    p.add_argument("--truncation", type=int, default=8)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("extract", help="extract strict + unitary expansions from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--scale", default="default-2dp",
                   help="default-2dp | constant:<s> | s0,s1,...")
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--tail", type=int, default=0, help="estimator tail window (0 = auto)")
    p.add_argument("--space", type=float, default=0.5,
                   help="single-space exponent of the unitary form")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("verify", help="verify expansion axioms against the raw window")
    p.add_argument("--expansion", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--form", help="verify one form only")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("classify", help="classify an expansion against the branch tree")
    p.add_argument("--expansion", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--form", help="expansion form to classify (default: unitary)")
    p.add_argument("--slope-tol", type=float, default=0.1)
    p.add_argument("--disp-tol", type=float, default=0.05)
    p.add_argument("--residual-tol", type=float, default=1e-8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("report", help="merge manifest + expansion + classification")
    p.add_argument("--manifest", required=True)
    p.add_argument("--expansion", required=True)
    p.add_argument("--classification")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except (fieldio.FieldFormatError, FileNotFoundError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (sp.MalformedFieldError, ex.NotConvergentError, ex.StagnationError,
            st.ContinuationError, od.InconsistentRelationsError,
            od.ClassificationBlockedError, fx.FixtureIntegrityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
