"""Exception types shared across the pipeline."""


class VerbseqError(Exception):
    """Base class for all domain errors raised by this package."""


class FormatError(VerbseqError, ValueError):
    """Corpus file does not follow the expected layout (e.g. wrong header)."""


class AnnotationError(VerbseqError, ValueError):
    """A field holds a value outside its allowed set."""

    def __init__(self, message, line=None, field=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.field = field


class DuplicateError(VerbseqError, ValueError):
    """Two rows share the same (text_id, sent_id, pos) key."""


class EmptyCorpus(VerbseqError, ValueError):
    pass


class EmptySamples(VerbseqError, ValueError):
    pass


class EmptyInput(VerbseqError, ValueError):
    pass


class DimensionMismatch(VerbseqError, ValueError):
    pass


class IndexOutOfRange(VerbseqError, IndexError):
    pass


class SymbolOutOfRange(VerbseqError, ValueError):
    pass


class InvalidK(VerbseqError, ValueError):
    pass


class TooFewVectors(VerbseqError, ValueError):
    pass


class SingletonPartition(VerbseqError, ValueError):
    pass


class DegenerateTable(VerbseqError, ValueError):
    pass


class InvalidSpec(VerbseqError, ValueError):
    pass


class ConfigError(VerbseqError, ValueError):
    pass
