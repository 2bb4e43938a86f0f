"""Exception hierarchy.

Everything raised on purpose by the library derives from :class:`ZvonkinError`
so the CLI can map it to the domain-error exit status.
"""


class ZvonkinError(Exception):
    pass


class DomainError(ZvonkinError, ValueError):
    """An argument lies outside the domain of an operation."""


class ValidationError(ZvonkinError):
    """A coefficient evaluator produced a non-finite value."""

    def __init__(self, message, coordinate=None, point=None):
        super().__init__(message)
        self.coordinate = coordinate
        self.point = point


class NonDegeneracyError(ZvonkinError):
    pass


class OutOfDomainError(DomainError):
    """Evaluation outside a tabulated interval; ``excess`` is the overshoot."""

    def __init__(self, message, excess):
        super().__init__(message)
        self.excess = excess


class ResourceError(ZvonkinError):
    pass


class IntegrationError(ZvonkinError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class PreconditionError(ZvonkinError):
    pass


class ConfigError(ZvonkinError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
