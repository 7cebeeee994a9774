"""Exception hierarchy shared across the toolkit.

All errors derive from ToolkitError so callers can catch everything from
this package with one except clause. Most also derive from ValueError
since they signal bad input values.
"""


class ToolkitError(Exception):
    """Base class for all asrdapt errors."""


class InvalidArgument(ToolkitError, ValueError):
    """An argument is outside its documented domain."""


class ParseError(ToolkitError, ValueError):
    """Malformed input bytes or text (WAV header, JSON document, ...)."""


class UnsupportedFormat(ToolkitError, ValueError):
    """Recognized container but unsupported codec or layout."""


class UnsupportedVersion(ToolkitError, ValueError):
    """Serialized document carries a schema version we do not handle."""


class SilentInput(ToolkitError, ValueError):
    """Operation needs signal content but the input is (near-)silent."""


class EmptyCorpus(ToolkitError, ValueError):
    """No analyzable files in a manifest or directory."""


class EmptyReference(ToolkitError, ValueError):
    """A reference transcript tokenized to nothing."""


class InsufficientData(ToolkitError, ValueError):
    """Not enough observations for the requested statistic."""
