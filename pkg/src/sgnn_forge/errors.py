"""Exception types shared across the engine.

The CLI maps these onto exit codes: validation/format/schema problems
exit 1, parameter and usage problems exit 2, I/O problems exit 3.
"""


class ForgeError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(ForgeError):
    """An argument or sampled parameter is outside its allowed domain."""


class FormatError(ForgeError):
    """A binary file does not conform to its wire format."""


class SchemaError(ForgeError):
    """A manifest, record, or database disagrees with its declared schema."""


class ValidationError(ForgeError):
    """Corpus content fails a consistency or invariant check."""


class FitError(ForgeError):
    """A model cannot be fitted from the data given."""


class InsufficientDataError(ForgeError):
    """Too few usable observations for the requested estimate."""


class IntegrationError(ForgeError):
    """Numerical integration produced a non-finite state."""
