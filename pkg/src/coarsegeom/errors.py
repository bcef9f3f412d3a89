"""Exception types carrying machine-readable diagnostics."""

from __future__ import annotations

from typing import Any


class CoarsegeomError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(CoarsegeomError):
    """Input violates a documented precondition.

    Parameters
    ----------
    code : str
        Short kebab-case identifier, stable across releases.
    message : str
        Human-readable explanation.
    witness : Any, optional
        JSON-serialisable evidence (a violating triple, vertex, index ...).
    """

    def __init__(self, code: str, message: str, witness: Any = None) -> None:
        super().__init__(message)
        self.code = code
        self.message = message
        self.witness = witness

    def to_json(self) -> dict[str, Any]:
        return {"code": self.code, "message": self.message, "witness": self.witness}


class CapExceeded(ValidationError):
    """A configured size limit was exceeded."""

    def __init__(self, name: str, limit: int, actual: int) -> None:
        super().__init__(
            "cap-exceeded",
            f"{name} = {actual} exceeds the configured cap {limit}",
            {"cap": name, "limit": limit, "actual": actual},
        )
