"""Encoder adapters.

An encoder is anything callable that maps a (batch, ...) data array to a
pair of (batch, d) arrays: the posterior means and the second head (logvar
or stddev, depending on the declared convention).  Two checkpoint formats
are bundled; anything else can be wrapped through ``CallableEncoder`` with
a ``module:function`` import path, so no specific model zoo is required.

``.npz`` checkpoints carry a ``kind`` entry:

* ``identity`` — means are the (flattened) data, the second head is the
  constant in ``second_fill`` (default 0, i.e. unit stddevs under the
  logvar convention);
* ``linear``  — two affine heads: ``mean_weight``/``mean_bias`` and
  ``second_weight``/``second_bias`` applied to flattened data rows.
"""

from __future__ import annotations

import importlib
from pathlib import Path

import numpy as np


class EncoderError(Exception):
    """Unreadable checkpoint or encoder outputs that violate the contract."""


class CallableEncoder:
    """Wrap any ``fn(batch) -> (means, second)`` callable as an encoder."""

    def __init__(self, fn, name="callable"):
        self.fn = fn
        self.name = name

    def __call__(self, batch: np.ndarray):
        out = self.fn(batch)
        if not isinstance(out, tuple) or len(out) != 2:
            raise EncoderError(f"encoder {self.name} must return a (means, second) pair")
        means, second = (np.asarray(a, dtype=np.float64) for a in out)
        if means.shape != second.shape or means.ndim != 2:
            raise EncoderError(
                f"encoder {self.name} returned shapes {means.shape} and {second.shape}; "
                "expected matching (batch, d) arrays"
            )
        if means.shape[0] != batch.shape[0]:
            raise EncoderError(
                f"encoder {self.name} returned {means.shape[0]} rows for a batch of {batch.shape[0]}"
            )
        return means, second


def _flatten(batch: np.ndarray) -> np.ndarray:
    return batch.reshape(batch.shape[0], -1).astype(np.float64)


def _identity_encoder(payload):
    fill = float(payload.get("second_fill", 0.0))

    def fn(batch):
        flat = _flatten(batch)
        return flat, np.full_like(flat, fill)

    return CallableEncoder(fn, name="identity")


def _linear_encoder(payload):
    try:
        mw, mb = payload["mean_weight"], payload["mean_bias"]
        sw, sb = payload["second_weight"], payload["second_bias"]
    except KeyError as err:
        raise EncoderError(f"linear checkpoint is missing array {err}") from err

    def fn(batch):
        flat = _flatten(batch)
        return flat @ mw.T + mb, flat @ sw.T + sb

    return CallableEncoder(fn, name="linear")


def load_encoder(checkpoint: str) -> CallableEncoder:
    """Load an encoder from an .npz checkpoint or a module:function path."""
    if ":" in str(checkpoint) and not Path(checkpoint).exists():
        module_name, _, attr = str(checkpoint).partition(":")
        try:
            fn = getattr(importlib.import_module(module_name), attr)
        except (ImportError, AttributeError) as err:
            raise EncoderError(f"cannot import encoder {checkpoint!r}: {err}") from err
        return CallableEncoder(fn, name=checkpoint)
    path = Path(checkpoint)
    if not path.is_file():
        raise EncoderError(f"checkpoint {path} is not readable")
    try:
        payload = dict(np.load(path, allow_pickle=False))
    except (OSError, ValueError) as err:
        raise EncoderError(f"cannot load checkpoint {path}: {err}") from err
    kind = str(payload.get("kind"))
    if kind == "identity":
        return _identity_encoder(payload)
    if kind == "linear":
        return _linear_encoder(payload)
    raise EncoderError(f"unknown checkpoint kind {kind!r} in {path}")
