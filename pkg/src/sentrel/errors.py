"""Exception hierarchy shared across the toolkit."""


class SentrelError(Exception):
    """Base class for all toolkit errors."""


class ParseError(SentrelError):
    """A corpus or resource file could not be parsed.

    Carries enough context (path, line number) in the message to locate
    the offending row.
    """

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc += str(path)
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class ValidationError(SentrelError):
    """Loaded data violates a structural invariant (spans, alignment, ...)."""


class GoldConflictError(SentrelError):
    """The same ordered entity pair carries both a positive and a negative label."""


class ManifestMismatchError(SentrelError):
    """Feature layout of a model does not match the layout of the data."""
