"""Exception hierarchy shared across the package."""


class FedPDDError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(FedPDDError, ValueError):
    pass


class DomainError(FedPDDError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ParseError(FedPDDError, ValueError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class SchemaError(FedPDDError, ValueError):
    pass


class ContractError(FedPDDError, ValueError):
    """Mismatched shapes or violated calling contract."""


class NumericError(FedPDDError, ArithmeticError):
    pass


class ProtocolError(FedPDDError, RuntimeError):
    pass


class LookupFailure(FedPDDError, LookupError):
    pass
