"""Shared exception types.

Every error raised by this package derives from CordsegError so callers can
catch the whole family with one handler; the subclasses distinguish the three
failure modes that matter to callers.
"""


class CordsegError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(CordsegError, ValueError):
    """Operands have incompatible or malformed shapes."""


class DomainError(CordsegError, ValueError):
    """A value lies outside the domain an operation accepts."""


class NumericError(CordsegError, ArithmeticError):
    """A computation produced or encountered non-finite values."""
