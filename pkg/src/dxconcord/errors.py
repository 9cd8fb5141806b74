"""Exception and warning types shared across the package."""


class ConcordanceError(Exception):
    """Base class for every error raised by dxconcord."""


class ConcordanceWarning(UserWarning):
    """Data-quality issue that is tolerated unless running in strict mode."""


class ConfigError(ConcordanceError, ValueError):
    pass


class SchemaError(ConcordanceError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvariantError(ConcordanceError):
    pass


class EmptyLabel(InvariantError, ValueError):
    pass


class ActionError(ConcordanceError):
    pass


class UnknownTarget(ActionError):
    pass


class DuplicateAdd(ActionError):
    pass


class EmptyPrimary(ActionError):
    pass


class ReplayMismatch(ConcordanceError):
    pass


class LedgerError(ConcordanceError):
    pass


class OrderViolation(LedgerError):
    pass


class DuplicateSnapshot(LedgerError):
    pass


class CorruptRecord(LedgerError):
    def __init__(self, message, seq=None):
        super().__init__(message if seq is None else f"record {seq}: {message}")
        self.seq = seq


class EmptyCohort(ConcordanceError):
    pass


class VocabTooSmall(ConfigError):
    pass


class MonotonicityViolation(ConcordanceError):
    pass


class ChainBroken(LedgerError):
    def __init__(self, message, seq=None):
        super().__init__(message)
        self.seq = seq
