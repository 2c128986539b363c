"""Exception hierarchy shared across the toolkit.

The CLI maps these onto stable exit codes, so prefer raising the most
specific type available.
"""

from __future__ import annotations


class TtError(Exception):
    """Base class for every error raised by this package."""


class InvalidConfigError(TtError):
    """A configuration value is out of its legal domain."""


class InvalidInputError(TtError):
    """An operation received an argument outside its precondition."""


class ParseError(TtError):
    """A document could not be parsed; carries line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class UnknownFieldError(ParseError):
    """A document contains a field the schema does not define."""

    def __init__(self, field: str):
        self.field = field
        super().__init__(f"unknown field '{field}'")


class SemanticError(TtError):
    """A document parses but violates a model invariant."""


class UnreachablePairError(TtError):
    """No route exists between a pair of nodes."""

    def __init__(self, source: int, dest: int):
        self.source = source
        self.dest = dest
        super().__init__(f"no route from node {source} to node {dest}")


class RoutingError(TtError):
    """A message cannot be routed to one of its receivers."""


class InfeasibleInstanceError(TtError):
    """A message has no integration cycle that can satisfy its windows."""

    def __init__(self, message_id: int, detail: str):
        self.message_id = message_id
        super().__init__(f"message {message_id}: {detail}")


class InfeasibleWindowError(TtError):
    """A message instance cannot fit between its release and deadline."""


class InfeasiblePorosityError(TtError):
    """TT load exceeds the capacity of the allowed blocks."""


class ScheduleError(TtError):
    """The schedule search failed; carries the best partial diagnosis."""

    def __init__(self, detail: str, *, budget_exhausted: bool = False,
                 message_id: int | None = None, link=None):
        self.budget_exhausted = budget_exhausted
        self.message_id = message_id
        self.link = link
        super().__init__(detail)


class UnboundedBlockingError(TtError):
    """A frame fits in no TT-free gap of the cluster cycle."""


class InternalConsistencyError(TtError):
    """Two artifacts that must agree (schedule vs. instance) do not."""
