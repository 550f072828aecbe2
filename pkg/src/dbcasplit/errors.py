"""Exception types raised across the toolkit."""


class DBCAError(Exception):
    """Base class for all toolkit errors."""


class ConlluParseError(DBCAError, ValueError):
    def __init__(self, message, line_number=None, path=None):
        self.message = message
        self.line_number = line_number
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line_number is not None:
            where += f"{line_number}:"
        super().__init__(f"{where} {message}".strip() if where else message)


class CorpusEncodingError(ConlluParseError):
    pass


class AlignmentError(DBCAError, ValueError):
    def __init__(self, expected, got, language=None):
        self.expected = expected
        self.got = got
        lang = f" for language {language!r}" if language else ""
        super().__init__(
            f"line count mismatch{lang}: corpus has {expected} sentences, "
            f"target file has {got} lines ({expected} vs {got})"
        )


class UndefinedDivergenceError(DBCAError, ValueError):
    """A divergence was requested with an empty distribution on one side."""


class StateError(DBCAError, RuntimeError):
    """An operation would violate the split state (e.g. removing an unassigned sentence)."""


class CannotSplitError(DBCAError, ValueError):
    pass


class SplitSizeError(DBCAError, ValueError):
    pass


class ValidationError(DBCAError, ValueError):
    pass
