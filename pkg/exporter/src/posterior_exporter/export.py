"""Run an encoder over a dataset sample and write a posterior-set directory.

The output conforms bit-exactly to the infocomp posterior-set interchange
format (format_version "1"): ``manifest.json`` plus row-major little-endian
``means.bin`` and ``stddevs.bin``.  The primary toolkit's ``infocomp info``
command is the conformance oracle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .encoders import EncoderError, load_encoder

CONVENTIONS = ("logvar", "stddev")


@dataclass
class ExportJob:
    checkpoint: str
    data: str
    out: str
    sample_size: int = 1000
    seed: int = 0
    convention: str = "logvar"
    batch_size: int = 256
    space_id: str = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sample_size < 2:
            raise ValueError("sample_size must be >= 2")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def _load_dataset(path: str) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise EncoderError(f"dataset {path} is not readable")
    if path.suffix == ".npz":
        payload = np.load(path, allow_pickle=False)
        keys = list(payload.keys())
        if len(keys) != 1:
            raise EncoderError(f"dataset {path} must hold exactly one array, found {keys}")
        return np.asarray(payload[keys[0]])
    return np.asarray(np.load(path, allow_pickle=False))


def _second_head_to_stddev(second: np.ndarray, convention: str) -> np.ndarray:
    if convention == "logvar":
        return np.exp(0.5 * second)
    return second


def export(job: ExportJob) -> Path:
    """Encode a seeded sample of the dataset and write the posterior set.

    The sample is drawn without replacement; sample ids are the dataset row
    indices.  Returns the output directory path.
    """
    encoder = load_encoder(job.checkpoint)
    data = _load_dataset(job.data)
    n_total = data.shape[0]
    if job.sample_size > n_total:
        raise EncoderError(
            f"sample_size {job.sample_size} exceeds dataset size {n_total}"
        )
    rng = np.random.default_rng(job.seed)
    indices = np.sort(rng.choice(n_total, size=job.sample_size, replace=False))

    means_parts, stddev_parts = [], []
    for lo in range(0, job.sample_size, job.batch_size):
        batch_idx = indices[lo : lo + job.batch_size]
        means, second = encoder(data[batch_idx])
        stddevs = _second_head_to_stddev(second, job.convention)
        if np.any(stddevs <= 0) or not np.all(np.isfinite(stddevs)):
            raise EncoderError(
                "encoder produced nonpositive or non-finite stddevs under "
                f"the {job.convention!r} convention"
            )
        means_parts.append(means)
        stddev_parts.append(stddevs)
    all_means = np.concatenate(means_parts)
    all_stddevs = np.concatenate(stddev_parts)
    if not np.all(np.isfinite(all_means)):
        raise EncoderError("encoder produced non-finite means")

    out = Path(job.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": "1",
        "kind": "posterior_set",
        "n": int(job.sample_size),
        "d": int(all_means.shape[1]),
        "sample_ids": [str(int(i)) for i in indices],
        "space_id": job.space_id or f"export:{Path(job.checkpoint).stem}",
        "dtype": "f64le",
        "payload": {"means": "means.bin", "stddevs": "stddevs.bin"},
    }
    if job.metadata:
        manifest["metadata"] = job.metadata
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    (out / "means.bin").write_bytes(np.ascontiguousarray(all_means, dtype="<f8").tobytes())
    (out / "stddevs.bin").write_bytes(
        np.ascontiguousarray(all_stddevs, dtype="<f8").tobytes()
    )
    return out
