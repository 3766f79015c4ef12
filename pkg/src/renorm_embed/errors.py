"""Exception hierarchy shared by every module."""


class EmbedError(Exception):
    """Base class for all errors raised by the toolkit."""


class ContractError(EmbedError, ValueError):
    """A documented precondition of an operation was violated by the caller."""


class ResourceError(EmbedError):
    """A configured work, size or horizon cap was exceeded."""


class ScaleError(EmbedError):
    """A construction inequality that only holds for large scales failed.

    The message names the inequality so the failure can be read as a
    diagnostic about the chosen profile rather than as a bug.
    """


class InvariantViolation(ScaleError):
    """A quantity that a construction asserts to lie in a range fell outside it."""


class IntegrityError(EmbedError):
    """A stored artifact failed its checksum."""

    def __init__(self, key, detail=""):
        self.key = key
        super().__init__(f"corrupt store entry {key}" + (f": {detail}" if detail else ""))


class ParseError(EmbedError, ValueError):
    """Malformed textual input, located by line and column (both 1-based)."""

    def __init__(self, message, line=None, column=None, source=None):
        self.line = line
        self.column = column
        self.source = source
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:{column if column is not None else 1}: "
        elif where:
            where += " "
        super().__init__(where + message)
