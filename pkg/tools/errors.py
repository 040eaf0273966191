"""Exception hierarchy shared by the kernels, solvers and the CLI."""

from typing import Any


class HSpinorError(Exception):
    """Base error. Keyword context is kept for logs and CLI messages."""

    exit_code = 3

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.message = message
        self.context = context

    def __str__(self) -> str:
        if not self.context:
            return self.message
        details = ", ".join(f"{k}={v}" for k, v in self.context.items())
        return f"{self.message} ({details})"


class ConfigError(HSpinorError):
    exit_code = 2


class NumericalError(HSpinorError):
    exit_code = 3


class PoleError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class DegenerateParameterError(NumericalError):
    pass


class IntegrationError(NumericalError):
    pass


class UnderResolvedGridError(NumericalError):
    pass


class ClassificationError(HSpinorError):
    exit_code = 4


class VerificationFailure(HSpinorError):
    exit_code = 1


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, HSpinorError):
        return exc.exit_code
    return 3
