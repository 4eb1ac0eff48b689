from __future__ import annotations

from typing import Any, Dict, Optional


class FirError(Exception):

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error_type": self.__class__.__name__,
            "message": self.message,
            "details": self.details,
        }


class InvalidArgumentError(FirError, ValueError):
    pass


class DataFormatError(InvalidArgumentError):

    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        column: Optional[int] = None,
        **kwargs: Any,
    ):
        details = dict(kwargs.pop("details", None) or {})
        if line is not None:
            details["line"] = line
        if column is not None:
            details["column"] = column
        super().__init__(message, details=details)
        self.line = line
        self.column = column


class NumericFailureError(FirError, ArithmeticError):
    pass


class DegenerateDataError(NumericFailureError):
    pass


class InvalidStateError(FirError, RuntimeError):
    pass
