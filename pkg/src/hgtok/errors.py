"""Exception hierarchy shared by all hgtok modules.

Everything derives from HgtokError so callers can catch one base class.
DataError / NumericError map onto the CLI exit codes 3 and 4.
"""


class HgtokError(Exception):
    pass


class DataError(HgtokError, ValueError):
    """Malformed or inconsistent input data."""


class NumericError(HgtokError, ArithmeticError):
    """Non-finite values or failed numeric contracts."""


class UnknownVertexError(DataError):
    pass


class UnknownHyperedgeError(DataError):
    pass


class RoleMismatchError(DataError):
    """Center object role does not match the template's center role."""


class TemplateSizeError(DataError):
    """Template slot count exceeds the token budget."""


class DimensionMismatchError(DataError):
    pass


class MissingPlaceholderError(DataError):
    """Prompt does not contain exactly one '<hypergraph>' placeholder."""


class OverLengthError(DataError):
    """Assembled dialogue exceeds the configured context limit."""


class EmptyAnswerError(DataError):
    pass


class StaleCacheError(HgtokError, RuntimeError):
    """Backward invoked with a cache from a different forward/params."""


class NonFiniteLossError(NumericError):
    pass


class MalformedRecordError(DataError):
    pass


class DanglingMemberError(DataError):
    pass


class SplitOverlapError(DataError):
    pass


class ManifestMismatchError(DataError):
    pass


class InfeasibleConfigError(DataError):
    """No usable query triples remain after filtering."""


class PredictionCountMismatchError(DataError):
    pass
