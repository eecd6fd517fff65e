"""Exception hierarchy shared across the toolkit.

ConfigurationError maps to CLI exit code 2, every other LdikitError to 1.
"""


class LdikitError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(LdikitError, ValueError):
    """An argument violates a documented precondition (bad value, shape, range)."""


class InvalidDepthError(InvalidInputError):
    """A depth value is non-positive or non-finite where positive depth is required."""


class BehindCameraError(LdikitError):
    """A 3D point with z <= 0 was passed to perspective projection."""


class ConfigurationError(LdikitError):
    """Inconsistent or missing inputs detected before any processing starts."""


class LdiFormatError(LdikitError):
    """A .ldi container is malformed; the message names the offending section."""


class LdiVersionError(LdiFormatError):
    """The .ldi container carries an unsupported format version."""


class UnfillableError(LdikitError):
    """An inpainting request has no usable context (every pixel is a hole)."""


class UndefinedMetricError(LdikitError):
    """A metric was evaluated over an empty pixel region."""
