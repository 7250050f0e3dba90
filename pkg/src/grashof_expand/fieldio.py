"""Shared on-disk formats: field files, sequence manifests, JSON helpers.

All files are JSON text with floats serialized at 17 significant digits
(lossless double round-trip) and LF line endings; writes are atomic
(temp file in the target directory, then rename).
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .spectral import SpectralField


class FieldFormatError(ValueError):
    """Raised when a field/manifest file does not match the expected schema."""


def _fmt_float(x):
    return format(float(x), ".17g")


def dumps(obj, indent=0):
    """JSON text with .17g floats; dict key order is preserved as written."""
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  "{k}": {dumps(v, indent + 2).lstrip()}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        flat = all(isinstance(v, (int, float, np.floating, np.integer)) for v in seq)
        if flat:
            return "[" + ", ".join(dumps(v) for v in seq) + "]"
        items = [pad + "  " + dumps(v, indent + 2).lstrip() for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj)!r}")


def atomic_write_text(path, text):
    path = os.path.abspath(path)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write_text(path, dumps(obj) + "\n")


def read_json(path):
    with open(path, "r") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Field files
# ---------------------------------------------------------------------------


def _is_representative(k):
    return k[0] > 0 or (k[0] == 0 and k[1] > 0)


def write_field(path, field):
    """Store one representative of each conjugate pair, sorted by wavevector."""
    reps = sorted(k for k in field.modes if _is_representative(k))
    records = []
    for k in reps:
        c = field.modes[k]
        records.append(
            {
                "k": [int(k[0]), int(k[1])],
                "c": [
                    [float(np.real(c[0])), float(np.imag(c[0]))],
                    [float(np.real(c[1])), float(np.imag(c[1]))],
                ],
            }
        )
    doc = {"truncation": int(field.trunc), "conjugate_closure": True, "modes": records}
    write_json(path, doc)


def read_field(path):
    doc = read_json(path)
    try:
        trunc = int(doc["truncation"])
        if not doc.get("conjugate_closure", False):
            raise FieldFormatError(f"{path}: conjugate_closure flag missing or false")
        modes = {}
        for rec in doc["modes"]:
            kx, ky = int(rec["k"][0]), int(rec["k"][1])
            (re1, im1), (re2, im2) = rec["c"]
            c = np.array([re1 + 1j * im1, re2 + 1j * im2])
            modes[(kx, ky)] = c
            modes[(-kx, -ky)] = np.conj(c)
    except (KeyError, TypeError, ValueError) as exc:
        raise FieldFormatError(f"{path}: malformed field file ({exc})") from exc
    return SpectralField(trunc, modes)


# ---------------------------------------------------------------------------
# Sequence manifests
# ---------------------------------------------------------------------------


def write_manifest(path, entries, g_limit=None):
    """Sequence manifest: per n the alpha, solution path, residual and bound check.

    ``entries`` is a list of dicts with keys n, alpha, field, residual_H,
    bound_check and optionally force (per-n forcing g_n); paths are stored
    relative to the manifest location.
    """
    base = os.path.dirname(os.path.abspath(path))

    def rel(p):
        return os.path.relpath(os.path.abspath(p), base)

    doc_entries = []
    for e in entries:
        rec = {
            "n": int(e["n"]),
            "alpha": float(e["alpha"]),
            "field": rel(e["field"]),
            "residual_H": float(e["residual_H"]),
            "bound_check": float(e["bound_check"]),
        }
        if e.get("force") is not None:
            rec["force"] = rel(e["force"])
        doc_entries.append(rec)
    doc = {"entries": doc_entries}
    if g_limit is not None:
        doc["g_limit"] = rel(g_limit)
    write_json(path, doc)


def read_manifest(path):
    """Parse a manifest; returns a dict with absolute paths resolved."""
    doc = read_json(path)
    base = os.path.dirname(os.path.abspath(path))
    if "entries" not in doc or not isinstance(doc["entries"], list):
        raise FieldFormatError(f"{path}: manifest has no entries list")
    entries = []
    for rec in doc["entries"]:
        try:
            entry = {
                "n": int(rec["n"]),
                "alpha": float(rec["alpha"]),
                "field": os.path.join(base, rec["field"]),
                "residual_H": float(rec["residual_H"]),
                "bound_check": float(rec["bound_check"]),
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise FieldFormatError(f"{path}: malformed manifest entry ({exc})") from exc
        if "force" in rec:
            entry["force"] = os.path.join(base, rec["force"])
        entries.append(entry)
    out = {"entries": entries}
    if "g_limit" in doc:
        out["g_limit"] = os.path.join(base, doc["g_limit"])
    return out
