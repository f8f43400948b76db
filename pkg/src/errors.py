"""
Exception hierarchy shared by the library, the CLI and the HTTP service.
"""

import logging

logger = logging.getLogger(__name__)


class QitError(Exception):
    """Base class for every error raised by this package."""


class DomainError(QitError, ValueError):
    """An operation precondition does not hold."""

    def __init__(self, precondition: str, message: str = "") -> None:
        self.precondition = precondition
        super().__init__(message or f"precondition violated: {precondition}")


class InputFormatError(QitError, ValueError):
    """A matrix, channel or job payload could not be parsed."""


class ConvergenceError(QitError, RuntimeError):
    """A solver failed or its certificate missed the required gap."""


class NumericalError(QitError, ArithmeticError):
    """Overflow or loss of precision that would silently corrupt a result."""


def require(condition: bool, precondition: str, message: str = "") -> None:
    """
    Raise DomainError unless the condition holds.

    Args:
        condition: Result of the precondition test
        precondition: Short name of the precondition, reported by the CLI
        message: Optional longer explanation

    Raises:
        DomainError: If condition is false
    """
    if not condition:
        error = DomainError(precondition, message)
        logger.error(str(error))
        raise error
