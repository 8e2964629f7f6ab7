"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class MigrError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(MigrError):
    """A config file is missing, malformed, or inconsistent with the others."""


class TraceError(MigrError):
    """A reasoning trace could not be parsed.

    ``offset`` is the character offset into the input where the problem was found.
    """

    kind = "trace_error"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnbalancedDelimiter(TraceError):
    kind = "unbalanced_delimiter"


class NestedSegment(TraceError):
    kind = "nested_segment"


class TrailingGarbage(TraceError):
    kind = "trailing_garbage"


class UnresolvedMI(MigrError):
    """An operation needs a resolved modality importance but got ``unresolved``."""


class MissingTableEntry(MigrError):
    """The FAU-emotion table has no prototype for the requested emotion."""


class EmptyDataset(MigrError):
    pass


class EmptyGroup(MigrError):
    pass


class NonFiniteGradient(MigrError):
    def __init__(self, step: int):
        super().__init__(f"non-finite policy gradient at step {step}")
        self.step = step
