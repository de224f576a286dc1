"""Portable file formats.

Snapshot matrices are raw little-endian float64 in column-major order with a
JSON manifest alongside::

    {
      "format": "spkoopman-snapshots", "version": 1,
      "rows": M, "cols": N, "dt": 0.1 | null,
      "dtype": "<f8", "order": "F",
      "states": {"file": "train.bin", "sha256": "..."},
      "derivatives": {"file": "train.dot.bin", "sha256": "..."} | null,
      "normalization": {"shift": [...], "scale": [...]} | null,
      "provenance": {...}
    }

Models are JSON with every complex array stored as nested ``[re, im]`` pairs.
"""

import csv
import hashlib
import json
import os
from pathlib import Path

import numpy as np

from ..exceptions import ManifestError
from ..features import HermiteDictionary, KernelSpec
from ..model import KoopmanModel
from .snapshots import Normalization, SnapshotSet

__all__ = [
    "write_snapshots",
    "read_snapshots",
    "ingest",
    "model_to_dict",
    "model_from_dict",
    "export_model",
    "load_model",
    "write_table",
    "to_jsonable",
]

FORMAT = "spkoopman-snapshots"
VERSION = 1


def _sha256(raw):
    return hashlib.sha256(raw).hexdigest()


def _write_matrix(A, path):
    raw = np.asarray(A, dtype="<f8").tobytes(order="F")
    Path(path).write_bytes(raw)
    return {"file": os.path.basename(path), "sha256": _sha256(raw)}


def write_snapshots(snap, stem):
    """Write ``stem.bin`` (+ ``stem.dot.bin``) and ``stem.json``; returns the manifest path."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": FORMAT,
        "version": VERSION,
        "rows": int(snap.n_samples),
        "cols": int(snap.state_dim),
        "dt": snap.dt,
        "dtype": "<f8",
        "order": "F",
        "states": _write_matrix(snap.states, stem.with_suffix(".bin")),
        "derivatives": None
        if snap.derivatives is None
        else _write_matrix(snap.derivatives, stem.with_suffix(".dot.bin")),
        "normalization": None if snap.normalization is None else snap.normalization.to_dict(),
        "provenance": to_jsonable(snap.provenance),
    }
    path = stem.with_suffix(".json")
    path.write_text(json.dumps(manifest, indent=2))
    return path


def _require(d, key, types, where=None):
    name = key if where is None else f"{where}.{key}"
    if key not in d:
        raise ManifestError(name, "missing")
    # bool is an int subclass in Python but never a valid count
    if not isinstance(d[key], types) or isinstance(d[key], bool):
        raise ManifestError(name, f"expected {types}, got {type(d[key]).__name__}")
    return d[key]


def _read_matrix(entry, name, base, rows, cols):
    if not isinstance(entry, dict):
        raise ManifestError(name, "expected an object with 'file' and 'sha256'")
    fname = _require(entry, "file", str, name)
    digest = _require(entry, "sha256", str, name)
    path = base / fname
    if not path.is_file():
        raise ManifestError(f"{name}.file", f"data file {str(path)!r} not found")
    raw = path.read_bytes()
    if len(raw) != 8 * rows * cols:
        raise ManifestError(
            f"{name}.file", f"expected {8 * rows * cols} bytes for {rows}x{cols}, found {len(raw)}"
        )
    if _sha256(raw) != digest:
        raise ManifestError(f"{name}.sha256", "checksum mismatch")
    return np.frombuffer(raw, dtype="<f8").reshape((rows, cols), order="F").astype(float)


def read_snapshots(manifest_path):
    """Load a :class:`SnapshotSet`; malformed manifests raise :class:`ManifestError`."""
    manifest_path = Path(manifest_path)
    try:
        m = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError("<document>", f"invalid JSON: {exc}") from None
    if not isinstance(m, dict):
        raise ManifestError("<document>", "top level must be an object")
    if _require(m, "format", str) != FORMAT:
        raise ManifestError("format", f"expected {FORMAT!r}")
    if _require(m, "version", int) != VERSION:
        raise ManifestError("version", f"unsupported version {m['version']}")
    rows = _require(m, "rows", int)
    cols = _require(m, "cols", int)
    if rows < 1:
        raise ManifestError("rows", "must be positive")
    if cols < 1:
        raise ManifestError("cols", "must be positive")
    if m.get("dtype", "<f8") != "<f8":
        raise ManifestError("dtype", "only little-endian float64 ('<f8') is supported")
    if m.get("order", "F") != "F":
        raise ManifestError("order", "only column-major ('F') data is supported")
    dt = m.get("dt")
    if dt is not None and (isinstance(dt, bool) or not isinstance(dt, (int, float)) or dt <= 0):
        raise ManifestError("dt", "must be a positive number or null")
    base = manifest_path.parent
    X = _read_matrix(m.get("states"), "states", base, rows, cols)
    D = m.get("derivatives")
    D = None if D is None else _read_matrix(D, "derivatives", base, rows, cols)
    norm = m.get("normalization")
    if norm is not None:
        try:
            norm = Normalization.from_dict(norm)
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError("normalization", f"malformed ({exc})") from None
        if norm.shift.shape != (cols,) or norm.scale.shape != (cols,):
            raise ManifestError("normalization", f"shift and scale need {cols} entries")
    prov = m.get("provenance", {})
    if not isinstance(prov, dict):
        raise ManifestError("provenance", "expected an object")
    prov = dict(prov, ingested=str(manifest_path))
    try:
        return SnapshotSet(X, D, dt=None if dt is None else float(dt), normalization=norm,
                           provenance=prov)
    except ValueError as exc:
        raise ManifestError("states", str(exc)) from None


ingest = read_snapshots


def _enc(A):
    if A is None:
        return None
    A = np.asarray(A)
    if np.iscomplexobj(A):
        return np.stack([A.real, A.imag], axis=-1).tolist()
    return A.tolist()


def _dec_complex(v):
    if v is None:
        return None
    a = np.asarray(v, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def _dec_real(v):
    return None if v is None else np.asarray(v, dtype=float)


def to_jsonable(obj):
    """Recursively convert numpy values (complex as ``[re, im]``) for JSON."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _enc(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def model_to_dict(model):
    out = {
        "format": "spkoopman-model",
        "version": VERSION,
        "method": model.method,
        "continuous": model.continuous,
        "dt": model.dt,
        "eigenvalues": _enc(np.asarray(model.eigenvalues, dtype=complex)),
        "eigenvectors": _enc(np.asarray(model.eigenvectors, dtype=complex)),
        "modes": _enc(np.asarray(model.modes, dtype=complex)),
        "dictionary": None if model.dictionary is None else model.dictionary.to_dict(),
        "kernel": None if model.kernel is None else model.kernel.to_dict(),
        "centers": _enc(model.centers),
        "gram_vectors": _enc(model.gram_vectors),
        "gram_sqrt": _enc(model.gram_sqrt),
        "info": to_jsonable(model.info),
    }
    return out


def model_from_dict(d):
    dictionary = None if d.get("dictionary") is None else HermiteDictionary(**d["dictionary"])
    kernel = None if d.get("kernel") is None else KernelSpec(**d["kernel"])
    gv = d.get("gram_vectors")
    if gv is not None:
        a = np.asarray(gv, dtype=float)
        # gram vectors are real unless the stored array is a [re, im] encoding
        gv = _dec_complex(gv) if a.ndim == 3 else a
    return KoopmanModel(
        method=d["method"],
        continuous=bool(d["continuous"]),
        eigenvalues=_dec_complex(d["eigenvalues"]),
        eigenvectors=_dec_complex(d["eigenvectors"]),
        modes=_dec_complex(d["modes"]),
        dt=d.get("dt"),
        dictionary=dictionary,
        kernel=kernel,
        centers=_dec_real(d.get("centers")),
        gram_vectors=gv,
        gram_sqrt=_dec_real(d.get("gram_sqrt")),
        info=dict(d.get("info", {})),
    )


def export_model(model, path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(model_to_dict(model)))
    return Path(path)


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))


def write_table(path, header, rows):
    """Plain CSV with full-precision floats."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
