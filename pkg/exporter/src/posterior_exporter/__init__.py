"""Export per-datum Gaussian posterior parameters from trained encoders.

Given an encoder checkpoint and a dataset, draws a seeded sample without
replacement, runs the encoder in batches, converts the second output head
to stddevs (``stddev = exp(0.5 * logvar)`` under the logvar convention),
and writes a posterior-set directory in the interchange format consumed by
the ``infocomp`` toolkit (manifest.json + means.bin + stddevs.bin).
"""

from .encoders import CallableEncoder, load_encoder
from .export import ExportJob, export

__all__ = ["CallableEncoder", "ExportJob", "export", "load_encoder"]

__version__ = "0.1.0"
