"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so callers (and the
CLI exit-code mapping) can dispatch without parsing messages.
"""


class InfocompError(Exception):
    """Base class for all package errors."""

    code = "error"


class InputError(InfocompError):
    """Invalid argument values or violated preconditions."""

    code = "invalid-input"


class DimensionMismatchError(InputError):
    code = "dimension-mismatch"


class AlignmentError(InputError):
    """Objects that must describe the same data sample do not."""

    code = "sample-id-mismatch"


class ConfigurationError(InputError):
    """Inconsistent or unusable configuration (e.g. too few points for OPTICS)."""

    code = "configuration"


class ResourceError(InfocompError):
    """A computation would exceed a configured resource cap."""

    code = "resource-cap"


class NumericDomainError(InfocompError):
    """A formula left its numeric domain (e.g. negative radicand)."""

    code = "numeric-domain"


class DivergenceError(InfocompError):
    """Optimization produced non-finite parameters."""

    code = "divergence"

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ObjectiveUndefinedError(InfocompError):
    """A fusion objective became undefined (collapsed synthesis space)."""

    code = "objective-undefined"

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class FormatError(InfocompError):
    """Base class for on-disk interchange format violations."""

    code = "format"


class VersionMismatchError(FormatError):
    code = "version-mismatch"


class ManifestError(FormatError):
    code = "manifest-invalid"


class PayloadSizeError(FormatError):
    code = "size-mismatch"


class NonFiniteValueError(FormatError):
    code = "non-finite"


class NonPositiveStddevError(FormatError):
    code = "nonpositive-stddev"


class AsymmetryError(FormatError):
    code = "asymmetric"


class DiagonalError(FormatError):
    code = "diagonal-deviation"


class DuplicateIdError(FormatError):
    code = "duplicate-sample-id"


class MissingIdError(FormatError):
    code = "missing-sample-id"
