"""Exception hierarchy shared by every qwalk module."""


class QwalkError(Exception):
    """Base class for all errors raised by qwalk."""


class DomainError(QwalkError, ValueError):
    """Input lies outside the domain of an operation (bad graph, unknown vertex)."""


class ParameterError(QwalkError, ValueError):
    """A numeric parameter is out of its admissible range."""


class NumericError(QwalkError, ArithmeticError):
    """A linear-algebra routine failed or produced an unusable result."""


class PropertyViolation(QwalkError, AssertionError):
    """A verified identity or inequality does not hold to tolerance."""
