"""On-disk interchange formats.

Each artifact is a directory holding a ``manifest.json`` plus raw
little-endian binary payloads (row-major, C order):

* posterior set — ``means.bin`` and ``stddevs.bin``, (N, d) each, f64le by
  default;
* fingerprint — ``bc.bin``, (N, N), f32le by default.

See FORMATS.md at the repository root for the bit-exact layout.  All
validation failures raise typed errors with a distinct ``code``; nothing is
repaired silently (fingerprint repair happens only behind the explicit
``repair`` flag).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .core import DiscreteSoftClustering, Fingerprint, HardClustering, PosteriorSet
from .errors import (
    AsymmetryError,
    DiagonalError,
    DuplicateIdError,
    InputError,
    ManifestError,
    MissingIdError,
    NonFiniteValueError,
    NonPositiveStddevError,
    PayloadSizeError,
    VersionMismatchError,
)

FORMAT_VERSION = "1"

_DTYPES = {"f64le": np.dtype("<f8"), "f32le": np.dtype("<f4")}
_SYMMETRY_TOL = {"f64le": 1e-12, "f32le": 1e-6}


def _write_manifest(path: Path, manifest: dict):
    with open(path / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.is_file():
        raise ManifestError(f"no manifest.json in {path}")
    with open(manifest_path, encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as err:
            raise ManifestError(f"unparseable manifest in {path}: {err}") from err
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"unsupported format_version {version!r} (expected {FORMAT_VERSION!r})"
        )
    if manifest.get("dtype") not in _DTYPES:
        raise ManifestError(f"unknown dtype {manifest.get('dtype')!r}")
    return manifest


def _read_payload(path: Path, filename: str, dtype_tag: str, shape) -> np.ndarray:
    payload_path = path / filename
    if not payload_path.is_file():
        raise PayloadSizeError(f"missing payload file {payload_path}")
    raw = payload_path.read_bytes()
    dtype = _DTYPES[dtype_tag]
    expected = int(np.prod(shape)) * dtype.itemsize
    if len(raw) != expected:
        raise PayloadSizeError(
            f"{payload_path} holds {len(raw)} bytes, expected {expected} for shape {tuple(shape)}"
        )
    return np.frombuffer(raw, dtype=dtype).reshape(shape).astype(np.float64)


def write_posterior_set(space: PosteriorSet, path, dtype: str = "f64le", metadata: dict = None):
    """Write a posterior set directory: manifest.json + means.bin + stddevs.bin."""
    if dtype not in _DTYPES:
        raise InputError(f"unknown dtype {dtype!r}")
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "kind": "posterior_set",
        "n": space.n,
        "d": space.dim,
        "sample_ids": list(space.sample_ids),
        "space_id": space.space_id,
        "dtype": dtype,
        "payload": {"means": "means.bin", "stddevs": "stddevs.bin"},
    }
    if metadata:
        manifest["metadata"] = metadata
    _write_manifest(path, manifest)
    np_dtype = _DTYPES[dtype]
    (path / "means.bin").write_bytes(np.ascontiguousarray(space.means, dtype=np_dtype).tobytes())
    (path / "stddevs.bin").write_bytes(
        np.ascontiguousarray(space.stddevs, dtype=np_dtype).tobytes()
    )
    return path


def read_posterior_set(path) -> PosteriorSet:
    path = Path(path)
    manifest = read_manifest(path)
    if manifest.get("kind") != "posterior_set":
        raise ManifestError(f"{path} holds kind {manifest.get('kind')!r}, not a posterior set")
    n, d = int(manifest["n"]), int(manifest["d"])
    sample_ids = manifest["sample_ids"]
    if len(sample_ids) != n:
        raise ManifestError(f"manifest lists {len(sample_ids)} sample ids for n={n}")
    payload = manifest.get("payload", {})
    means = _read_payload(path, payload.get("means", "means.bin"), manifest["dtype"], (n, d))
    stddevs = _read_payload(path, payload.get("stddevs", "stddevs.bin"), manifest["dtype"], (n, d))
    for name, arr in (("means", means), ("stddevs", stddevs)):
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise NonFiniteValueError(
                f"non-finite {name} at row {bad[0]}, dim {bad[1]} in {path}"
            )
    if np.any(stddevs <= 0):
        bad = np.argwhere(stddevs <= 0)[0]
        raise NonPositiveStddevError(
            f"stddev must be positive; offending row {bad[0]}, dim {bad[1]} in {path}"
        )
    return PosteriorSet(
        means, stddevs, sample_ids=sample_ids, space_id=manifest.get("space_id", "space")
    )


def write_fingerprint(fp: Fingerprint, path, dtype: str = "f32le", metadata: dict = None):
    """Write a fingerprint directory: manifest.json + bc.bin."""
    if dtype not in _DTYPES:
        raise InputError(f"unknown dtype {dtype!r}")
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "kind": "fingerprint",
        "n": fp.n,
        "sample_ids": list(fp.sample_ids),
        "space_id": fp.space_id,
        "dtype": dtype,
        "payload": {"values": "bc.bin"},
    }
    if metadata:
        manifest["metadata"] = metadata
    _write_manifest(path, manifest)
    (path / "bc.bin").write_bytes(np.ascontiguousarray(fp.values, dtype=_DTYPES[dtype]).tobytes())
    return path


def read_fingerprint(path, repair: bool = False) -> Fingerprint:
    """Read a fingerprint directory, validating symmetry and the unit diagonal.

    Asymmetry within the dtype's tolerance is accepted; beyond it the read
    fails unless ``repair`` is set, which averages the matrix with its
    transpose.  Any diagonal deviation fails without ``repair`` (which
    resets the diagonal to exactly 1).
    """
    path = Path(path)
    manifest = read_manifest(path)
    if manifest.get("kind") != "fingerprint":
        raise ManifestError(f"{path} holds kind {manifest.get('kind')!r}, not a fingerprint")
    n = int(manifest["n"])
    sample_ids = manifest["sample_ids"]
    if len(sample_ids) != n:
        raise ManifestError(f"manifest lists {len(sample_ids)} sample ids for n={n}")
    payload = manifest.get("payload", {})
    values = _read_payload(path, payload.get("values", "bc.bin"), manifest["dtype"], (n, n))
    if not np.all(np.isfinite(values)):
        raise NonFiniteValueError(f"non-finite fingerprint entries in {path}")
    tol = _SYMMETRY_TOL[manifest["dtype"]]
    asymmetry = float(np.abs(values - values.T).max())
    if asymmetry > tol:
        if not repair:
            raise AsymmetryError(
                f"fingerprint asymmetry {asymmetry:.3g} exceeds tolerance {tol:.0e} "
                f"in {path}; pass repair=True to symmetrize by averaging"
            )
        values = 0.5 * (values + values.T)
    diag_dev = float(np.abs(np.diagonal(values) - 1.0).max())
    if diag_dev > 0.0:
        if not repair:
            raise DiagonalError(
                f"fingerprint diagonal deviates from 1 by {diag_dev:.3g} in {path}; "
                f"pass repair=True to reset it"
            )
        np.fill_diagonal(values, 1.0)
    if values.min() < 0.0 or values.max() > 1.0:
        raise ManifestError(f"fingerprint entries outside [0, 1] in {path}")
    return Fingerprint(values, sample_ids=sample_ids, space_id=manifest.get("space_id", "space"))


def _read_id_csv(path, expected_min_cols: int):
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ManifestError(f"empty CSV {path}")
    header = [c.strip() for c in rows[0]]
    if len(header) < expected_min_cols or header[0] != "sample_id":
        raise ManifestError(f"{path} must start with a 'sample_id' header column")
    body = [r for r in rows[1:] if r]
    ids = [r[0].strip() for r in body]
    seen = set()
    for s in ids:
        if s in seen:
            raise DuplicateIdError(f"duplicate sample_id {s!r} in {path}")
        seen.add(s)
    return header, body, ids


def _align_to_reference(ids, reference_ids, path):
    reference_ids = [str(s) for s in reference_ids]
    missing = set(reference_ids) - set(ids)
    if missing:
        raise MissingIdError(f"{path} lacks sample ids {sorted(missing)[:5]}...")
    extra = set(ids) - set(reference_ids)
    if extra:
        raise MissingIdError(f"{path} has sample ids outside the reference set: {sorted(extra)[:5]}")
    index = {s: i for i, s in enumerate(ids)}
    return [index[s] for s in reference_ids], reference_ids


def read_hard_labels(path, reference_ids=None) -> HardClustering:
    """Read a hard clustering from a CSV with header ``sample_id,label``.

    Labels are densified to [0, K) preserving first-appearance order.  With
    ``reference_ids`` the rows are checked against and reordered to that
    reference.
    """
    header, body, ids = _read_id_csv(path, expected_min_cols=2)
    if header[1] != "label":
        raise ManifestError(f"{path} must have header sample_id,label")
    raw = [r[1].strip() for r in body]
    dense = {}
    labels = np.empty(len(raw), dtype=np.int64)
    for i, value in enumerate(raw):
        if value not in dense:
            dense[value] = len(dense)
        labels[i] = dense[value]
    if reference_ids is not None:
        order, ids = _align_to_reference(ids, reference_ids, path)
        labels = labels[order]
    return HardClustering(labels, n_clusters=len(dense), sample_ids=ids)


def read_soft_memberships(path, reference_ids=None) -> DiscreteSoftClustering:
    """Read a discrete soft clustering from a CSV: sample_id,m0,...,m{K-1}."""
    header, body, ids = _read_id_csv(path, expected_min_cols=2)
    k = len(header) - 1
    values = np.empty((len(body), k))
    for i, row in enumerate(body):
        values[i] = [float(c) for c in row[1:]]
    if reference_ids is not None:
        order, ids = _align_to_reference(ids, reference_ids, path)
        values = values[order]
    return DiscreteSoftClustering(values, sample_ids=ids)


def format_value(x) -> str:
    """Render a float for CSV/JSON: NaN -> "undefined", infinities -> "inf"."""
    if isinstance(x, float):
        if math.isnan(x):
            return "undefined"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def export_matrix_csv(matrix, path, labels=None):
    """Write a labeled square matrix as CSV (header row + label column)."""
    values = np.asarray(getattr(matrix, "values", matrix), dtype=np.float64)
    if labels is None:
        refs = getattr(matrix, "refs", None)
        labels = [r.label for r in refs] if refs else [str(i) for i in range(values.shape[0])]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + list(labels))
        for label, row in zip(labels, values):
            writer.writerow([label] + [format_value(float(v)) for v in row])
    return path


def to_jsonable(obj):
    """Recursively convert reports to JSON-safe values with sentinels."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return format_value(x)
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def parse_value(x) -> float:
    """Inverse of :func:`format_value` for numeric report fields."""
    if x == "undefined":
        return float("nan")
    if x == "inf":
        return float("inf")
    if x == "-inf":
        return float("-inf")
    return float(x)


def export_json(report, path):
    """Write a JSON report with sentinel-safe values."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_trace_csv(trace, path):
    """Write a fusion objective trace as step,objective rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "objective"])
        for step, value in enumerate(np.asarray(trace, dtype=np.float64)):
            writer.writerow([step, format_value(float(value))])
    return path
