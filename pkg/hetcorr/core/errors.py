from __future__ import annotations

from pydantic import ValidationError


class HetcorrError(RuntimeError):
    pass


class ArgumentError(HetcorrError, ValueError):
    pass


class InconsistentDataError(HetcorrError, ValueError):
    pass


class FitFailureError(HetcorrError):
    pass


class UndefinedValueError(HetcorrError, ArithmeticError):
    pass


class OutputError(HetcorrError, OSError):
    pass


class ConfigValidationError(HetcorrError):
    def __init__(self, message: str, fields: list[str] | None = None) -> None:
        super().__init__(message)
        self.fields = fields or []

    @classmethod
    def from_pydantic(cls, exc: ValidationError, *, source: str = "config") -> ConfigValidationError:
        fields = [".".join(str(part) for part in err["loc"]) for err in exc.errors()]
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in exc.errors()
        )
        return cls(f"invalid {source}: {details}", fields)
