"""Exception hierarchy shared by all modules."""


class LoccError(Exception):
    """Base class for every error raised by this package."""


class LayoutError(LoccError, ValueError):
    """Operand shape does not match the party layout."""


class ContractError(LoccError, ValueError):
    """An operation was called with arguments violating its precondition."""


class TransformError(LoccError):
    """The operator annihilates the state, so it cannot be renormalized."""


class InfeasibleError(LoccError, ValueError):
    """A closed-form construction was requested outside its domain."""


class ProtocolError(LoccError):
    """A protocol is malformed with respect to its layout or history labels.

    Attributes:
        issues: list of ``(step, message)``; ``step`` is 1-based or ``None``.
    """

    def __init__(self, message, issues=None):
        self.issues = list(issues) if issues else [(None, message)]
        super().__init__(message)


class ParseError(LoccError):
    """One or more positioned problems found while reading a protocol file.

    Attributes:
        issues: list of ``(line, column, message)`` tuples, 1-based.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        lines = [f"{ln}:{col}: {msg}" for ln, col, msg in self.issues]
        super().__init__("\n".join(lines))
