from typing import Dict, Optional


class QmcError(Exception):
    """Base class for errors raised by ftl_haar_qmc."""

    exit_code = 1

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def dict(self) -> Dict[str, str]:
        return {"type": self.__class__.__name__, "message": str(self.message)}


class ValidationError(QmcError, ValueError):
    """Raised when an input violates a precondition of an operation."""

    exit_code = 2


class ConfigError(ValidationError):
    """Raised for malformed or inconsistent experiment configuration."""

    def __init__(self, message: str, path: Optional[str] = None, lineno: Optional[int] = None):
        self.path = path
        self.lineno = lineno
        if path is not None and lineno is not None:
            message = f"{path}:{lineno}: {message}"
        elif path is not None:
            message = f"{path}: {message}"
        super().__init__(message)

    def dict(self) -> Dict[str, str]:
        d = super().dict()
        if self.path is not None:
            d["path"] = str(self.path)
        if self.lineno is not None:
            d["lineno"] = str(self.lineno)
        return d


class FormatError(ValidationError):
    """Raised when a point-set, matrix or coefficient file cannot be parsed."""


class NumericBudgetExceeded(QmcError):
    """Raised when quadrature refinement or index enumeration exceeds its budget."""

    exit_code = 3
